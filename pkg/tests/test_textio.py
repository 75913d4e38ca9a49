from __future__ import annotations

import math

import numpy as np
import pytest

from regnorm import norm_core as nc
from regnorm import textio
from regnorm.errors import InputError
from regnorm.types import (
    BlockLp,
    BoundedSphere,
    Euclidean,
    FixedDirectionRademacher,
    GaussianIso,
    Lp,
    RademacherBasis,
    Schatten,
    SumOfNorms,
)


@pytest.mark.parametrize(
    "text,space",
    [
        ("euclidean:n=5", Euclidean(5)),
        ("lp:n=10,p=inf", Lp(10, math.inf)),
        ("lp:n=3,p=2.5", Lp(3, 2.5)),
        ("schatten:m=3,n=4,p=2", Schatten(3, 4, 2)),
        ("block:p=inf{euclidean:n=2;lp:n=3,p=4}", BlockLp((Euclidean(2), Lp(3, 4)), math.inf)),
        ("sum{lp:n=3,p=2;lp:n=3,p=4}", SumOfNorms((Lp(3, 2), Lp(3, 4)))),
        (
            "block:p=3{block:p=inf{euclidean:n=1;euclidean:n=1};schatten:m=2,n=2,p=4}",
            BlockLp((BlockLp((Euclidean(1), Euclidean(1)), math.inf), Schatten(2, 2, 4)), 3),
        ),
    ],
)
def test_space_text(text, space):
    assert textio.parse_space(text) == space
    assert textio.render_space(space) == text


def test_space_text_is_forgiving_about_case_and_blanks():
    assert textio.parse_space("  LP: n = 4 , p = INF ") == Lp(4, math.inf)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "lp:n=3",
        "lp:n=3,p=4,q=1",
        "lp:n=3.5,p=4",
        "lp:n=3,p=1",
        "hilbert:n=3",
        "block:p=2{euclidean:n=2",
        "block:p=2{euclidean:n=2}}",
        "ring{euclidean:n=2}",
        "sum{lp:n=2,p=2;lp:n=3,p=2}",
        "lp:n=3,p=abc",
    ],
)
def test_bad_space_text(text):
    with pytest.raises(InputError):
        textio.parse_space(text)


def test_schemes():
    assert textio.parse_scheme("rademacher-basis:n=100") == RademacherBasis(100)
    assert textio.parse_scheme("gaussian-iso:n=3") == GaussianIso(3)
    sphere = textio.parse_scheme("bounded-sphere:sigma=3", Lp(4, 3))
    assert sphere == BoundedSphere(Lp(4, 3), 4, 3.0)
    assert textio.render_scheme(sphere) == "bounded-sphere:sigma=3,space={lp:n=4,p=3}"


def test_scheme_space_in_text_wins():
    text = "bounded-sphere:sigma=0.5,space={block:p=inf{euclidean:n=2;lp:n=3,p=4}}"
    scheme = textio.parse_scheme(text, Euclidean(5))
    assert scheme.space == BlockLp((Euclidean(2), Lp(3, 4)), math.inf)
    assert scheme.n == 5


ROUND_TRIP_SCHEMES = [
    RademacherBasis(7),
    GaussianIso(3),
    BoundedSphere(Lp(4, 3), 4, 3.0),
    BoundedSphere(Schatten(2, 3, 4), 6, 0.1),
    BoundedSphere(SumOfNorms((Lp(3, 2), Lp(3, 4))), 3, 1.0 / 3.0),
]


@pytest.mark.parametrize("scheme", ROUND_TRIP_SCHEMES, ids=lambda s: type(s).__name__)
def test_scheme_text_round_trips(scheme):
    assert textio.parse_scheme(textio.render_scheme(scheme)) == scheme


@pytest.mark.parametrize(
    "space,direction",
    [
        (Euclidean(3), "e2"),
        (Lp(4, 4), "ones"),
        (Lp(5, 1.5), "ones"),
        (BlockLp((Euclidean(2), Lp(3, math.inf)), 3), "ones"),
        (Schatten(2, 2, 3), "e3"),
    ],
)
def test_fixed_direction_round_trips_with_its_direction(space, direction):
    scheme = textio.parse_scheme(f"fixed-direction:sigma=2.5,direction={direction}", space)
    # parsing must not fall back to the caller's space or the e1 default
    back = textio.parse_scheme(textio.render_scheme(scheme), Euclidean(1))
    assert back == scheme
    assert back.space == space
    np.testing.assert_array_equal(nc.flatten_point(space, back.direction), nc.flatten_point(space, scheme.direction))


def test_fixed_direction_is_normalized():
    space = Lp(4, 4)
    scheme = textio.parse_scheme("fixed-direction:sigma=2,direction=ones", space)
    assert isinstance(scheme, FixedDirectionRademacher)
    assert scheme.sigma == 2.0
    np.testing.assert_allclose(scheme.direction, np.full(4, 4 ** -0.25))
    default = textio.parse_scheme("fixed-direction")
    assert default.space == Euclidean(1)
    np.testing.assert_array_equal(default.direction, [1.0])


@pytest.mark.parametrize(
    "text",
    [
        "coin:n=3",
        "rademacher-basis",
        "fixed-direction:direction=e9",
        "gaussian-iso:n=2,sigma=1",
        "fixed-direction:direction=[0.6 0.8]",
        "fixed-direction:direction=[1 1 0]",
        "bounded-sphere:space={lp:n=2,p=3",
    ],
)
def test_bad_scheme_text(text):
    with pytest.raises(InputError):
        textio.parse_scheme(text, Euclidean(3))


def test_constant_profile():
    profile = textio.parse_profile("const:1.5x4")
    np.testing.assert_array_equal(profile.values, np.full(4, 1.5))
    assert textio.parse_profile("const:2e-1x3").l2 == pytest.approx(0.2 * math.sqrt(3))


def test_file_profile(tmp_path):
    path = tmp_path / "sigma.txt"
    path.write_text("3\n\n4\n", encoding="utf-8")
    profile = textio.parse_profile(f"file:{path}")
    assert len(profile) == 2
    assert profile.l2 == pytest.approx(5.0)


@pytest.mark.parametrize("text", ["1,1,1", "const:1", "const:x4", "const:1x0", "const:-1x3", "file:/no/such/file", "poly:1"])
def test_bad_profile_text(text):
    with pytest.raises(InputError):
        textio.parse_profile(text)


def test_vector_points():
    space = Lp(3, 4)
    x = textio.parse_point(space, "1 -2.5\n 3")
    np.testing.assert_array_equal(x, [1.0, -2.5, 3.0])
    assert textio.render_point(space, x) == "1 -2.5 3"


def test_matrix_points():
    space = Schatten(2, 3, 2)
    X = textio.parse_point(space, "2 3\n1 2 3\n4 5 6\n")
    np.testing.assert_array_equal(X, [[1, 2, 3], [4, 5, 6]])
    assert textio.render_point(space, X) == "2 3\n1 2 3\n4 5 6"


def test_block_points_are_flat():
    space = BlockLp((Euclidean(1), Lp(2, 3)), 2)
    x = textio.parse_point(space, "1 2 3")
    np.testing.assert_array_equal(x[0], [1.0])
    np.testing.assert_array_equal(x[1], [2.0, 3.0])


@pytest.mark.parametrize(
    "space,text",
    [(Lp(3, 4), "1 2"), (Schatten(2, 2, 2), "2 3\n1 2 3 4"), (Schatten(2, 2, 2), "2 2\n1 2 3"), (Euclidean(2), "1 x")],
)
def test_bad_points(space, text):
    with pytest.raises(InputError):
        textio.parse_point(space, text)


def test_functions():
    assert textio.parse_function("cube").name == "cube"
    assert textio.parse_function("exp", delta=(0.0, 2.0)).delta == (0.0, 2.0)
    square = textio.parse_function("poly:0,0,1", theta_minus=1.0, theta_plus=1.0)
    assert square.f(3.0) == pytest.approx(9.0)
    with pytest.raises(InputError):
        textio.parse_function("sin")


def test_number_formatting():
    assert textio.fmt(1 / 3) == "0.333333333333"
    assert textio.fmt(math.inf) == "inf"
    assert textio.fmt(None) == "inf"
    assert textio.round_sig(math.inf) is None
    assert textio.round_sig(2 / 3) == 0.666666666667
    assert textio.round_sig(0.0) == 0.0
