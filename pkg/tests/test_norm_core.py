from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from regnorm import norm_core as nc
from regnorm.errors import InputError, NonsmoothNormError, NumericError, UnsupportedError
from regnorm.types import BlockLp, Euclidean, HuberParams, Lp, Schatten, SumOfNorms

from conftest import SMOOTH_SPACES


def _random_point(space, rng, count=None):
    d = nc.dimension(space)
    shape = (d,) if count is None else (count, d)
    return nc.unflatten_point(space, rng.standard_normal(shape))


def test_lp_norm_example():
    assert nc.norm(Lp(2, 3), [1.0, 1.0]) == pytest.approx(2 ** (1 / 3), rel=1e-12)


def test_schatten_inf_is_largest_singular_value():
    assert nc.norm(Schatten(2, 2, math.inf), np.diag([3.0, -5.0])) == pytest.approx(5.0)


def test_schatten_two_is_frobenius(rng):
    X = rng.standard_normal((3, 4))
    assert nc.norm(Schatten(3, 4, 2), X) == pytest.approx(np.linalg.norm(X), rel=1e-12)


def test_dual_of_linf_is_l1():
    assert nc.dual_norm(Lp(2, math.inf), [1.0, -2.0]) == pytest.approx(3.0)


def test_euclidean_is_self_dual(rng):
    xi = rng.standard_normal(7)
    assert nc.dual_norm(Euclidean(7), xi) == pytest.approx(np.linalg.norm(xi))


def test_shape_mismatch_is_rejected():
    with pytest.raises(InputError):
        nc.norm(Lp(3, 4), [1.0, 2.0])
    with pytest.raises(InputError):
        nc.norm(BlockLp((Euclidean(2), Euclidean(2)), 2), np.ones(4))


@pytest.mark.parametrize(
    "space",
    SMOOTH_SPACES + [Lp(5, math.inf), Schatten(3, 2, math.inf), BlockLp((Lp(2, math.inf), Schatten(2, 2, 4)), math.inf)],
    ids=repr,
)
def test_holder_on_sampled_pairs(space, rng):
    xi = _random_point(space, rng, 10_000)
    x = _random_point(space, rng, 10_000)
    lhs = nc.inner(space, xi, x)
    rhs = nc.dual_norm(space, xi) * nc.norm(space, x)
    assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-12)


@pytest.mark.parametrize("space", [Lp(4, 3), Lp(6, math.inf), Lp(3, 2), Euclidean(4)], ids=repr)
def test_dual_witness_attains_holder(space, rng):
    x = _random_point(space, rng, 200)
    w = nc.dual_witness(space, x)
    np.testing.assert_allclose(nc.dual_norm(space, w), 1.0, rtol=1e-6)
    np.testing.assert_allclose(nc.inner(space, w, x), nc.norm(space, x), rtol=1e-6)


def test_grad_examples():
    np.testing.assert_allclose(nc.grad_sq_norm(Euclidean(3), [1.0, -2.0, 3.0]), [2.0, -4.0, 6.0])
    np.testing.assert_allclose(nc.grad_sq_norm(Lp(2, 4), [1.0, 1.0]), [math.sqrt(2), math.sqrt(2)], rtol=1e-12)
    np.testing.assert_allclose(
        nc.grad_sq_norm(Schatten(2, 2, 4), np.eye(2)), math.sqrt(2) * np.eye(2), rtol=1e-12, atol=1e-14
    )


def test_grad_at_origin_is_zero():
    np.testing.assert_array_equal(nc.grad_sq_norm(Lp(4, 3), np.zeros(4)), np.zeros(4))
    np.testing.assert_array_equal(nc.grad_sq_norm(Schatten(2, 3, 4), np.zeros((2, 3))), np.zeros((2, 3)))


def test_nonsmooth_and_sum_gradients_are_refused():
    with pytest.raises(NonsmoothNormError, match="rho"):
        nc.grad_sq_norm(Lp(3, math.inf), np.ones(3))
    space = SumOfNorms((Lp(3, 2), Lp(3, 4)))
    assert nc.norm(space, np.ones(3)) == pytest.approx(math.sqrt(3) + 3 ** 0.25)
    with pytest.raises(UnsupportedError):
        nc.grad_sq_norm(space, np.ones(3))


@pytest.mark.parametrize("space", SMOOTH_SPACES, ids=repr)
def test_euler_identity(space, rng):
    x = _random_point(space, rng, 500)
    lhs = nc.inner(space, nc.grad_sq_norm(space, x), x)
    np.testing.assert_allclose(lhs, 2 * nc.norm(space, x) ** 2, rtol=1e-9)


@pytest.mark.parametrize("space", SMOOTH_SPACES, ids=repr)
@hsettings(max_examples=25, deadline=None)
@given(t=st.floats(min_value=1e-3, max_value=1e3), seed=st.integers(min_value=0, max_value=2**31))
def test_gradient_is_positively_homogeneous(space, t, seed):
    x = _random_point(space, np.random.default_rng(seed))
    g1 = nc.flatten_point(space, nc.grad_sq_norm(space, nc.scale_point(space, x, t)))
    g2 = t * nc.flatten_point(space, nc.grad_sq_norm(space, x))
    np.testing.assert_allclose(g1, g2, rtol=1e-9, atol=1e-12 * t)


@pytest.mark.parametrize(
    "space",
    [Euclidean(5), Lp(6, 3), Lp(4, 8), Schatten(3, 4, 3), Schatten(3, 3, 4), BlockLp((Euclidean(2), Lp(3, 4)), 3)],
    ids=repr,
)
def test_gradient_matches_central_differences(space, rng):
    h = 1e-5
    points = 1_000
    d = nc.dimension(space)
    flat = rng.standard_normal((points, d))
    grad = nc.flatten_point(space, nc.grad_sq_norm(space, nc.unflatten_point(space, flat)))
    fd = np.empty((points, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        up = np.asarray(nc.norm(space, nc.unflatten_point(space, flat + e))) ** 2
        down = np.asarray(nc.norm(space, nc.unflatten_point(space, flat - e))) ** 2
        fd[:, k] = (up - down) / (2 * h)
    err = np.linalg.norm(grad - fd, axis=-1)
    assert np.all(err <= 1e-6 * np.linalg.norm(grad, axis=-1))


def test_svd_failure_is_a_numeric_error(monkeypatch):
    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(np.linalg, "svd", broken)
    X = np.arange(6.0).reshape(2, 3)
    with pytest.raises(NumericError, match="SVD did not converge"):
        nc.grad_sq_norm(Schatten(2, 3, 4), X)
    with pytest.raises(NumericError):
        nc.norm(Schatten(2, 3, 4), X)


def test_flatten_roundtrip_for_blocks(rng):
    space = BlockLp((Euclidean(2), Schatten(2, 3, 4)), 3)
    flat = rng.standard_normal((5, nc.dimension(space)))
    point = nc.unflatten_point(space, flat)
    assert point[1].shape == (5, 2, 3)
    np.testing.assert_array_equal(nc.flatten_point(space, point), flat)


def test_embed_symmetric_small():
    S = nc.embed_symmetric(np.array([[1.0]]))
    np.testing.assert_array_equal(S, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(S)), [-1.0, 1.0])


def test_embed_symmetric_spectrum(rng):
    X = rng.standard_normal((3, 4))
    sv = np.linalg.svd(X, compute_uv=False)
    eig = np.linalg.eigvalsh(nc.embed_symmetric(X))
    np.testing.assert_allclose(np.sort(eig), np.sort(np.concatenate([sv, -sv, [0.0]])), atol=1e-12)


def test_embed_symmetric_schatten_identity(rng):
    X = rng.standard_normal((3, 4))
    lhs = nc.norm(Schatten(3, 4, 3), X)
    rhs = 2 ** (-1 / 3) * nc.norm(Schatten(7, 7, 3), nc.embed_symmetric(X))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_huber_branches():
    params = HuberParams(2.0)
    assert nc.huber(Euclidean(2), params, [1.0, 0.0]) == pytest.approx(0.25)
    assert nc.huber(Euclidean(2), params, [0.0, 4.0]) == pytest.approx(3.0)


@pytest.mark.parametrize("beta", [0.0, -1.0, math.inf])
def test_huber_rejects_bad_beta(beta):
    with pytest.raises(InputError):
        HuberParams(beta)


@pytest.mark.parametrize("space", [Euclidean(4), Lp(5, 3), Lp(4, math.inf), Schatten(2, 3, 4)], ids=repr)
def test_huber_is_one_lipschitz(space, rng):
    params = HuberParams(0.7)
    xi = _random_point(space, rng, 10_000)
    eta = _random_point(space, rng, 10_000)
    diff = np.abs(nc.huber(space, params, nc.add_points(space, xi, eta)) - nc.huber(space, params, xi))
    assert np.all(diff <= nc.norm(space, eta) + 1e-10)


@pytest.mark.parametrize("space", [Euclidean(4), Lp(5, 3), Schatten(2, 3, 4)], ids=repr)
def test_huber_gradient_has_unit_dual_ball(space, rng):
    params = HuberParams(1.5)
    xi = nc.scale_point(space, _random_point(space, rng, 2000), np.exp(rng.uniform(-3, 3, 2000)))
    assert np.max(nc.dual_norm(space, nc.huber_grad(space, params, xi))) <= 1 + 1e-9


def test_euclidean_domination():
    assert nc.euclidean_dominated(Lp(4, 3))
    assert nc.euclidean_dominated(BlockLp((Euclidean(2), Schatten(2, 2, 4)), math.inf))
    assert not nc.euclidean_dominated(SumOfNorms((Lp(3, 2), Lp(3, 4))))
