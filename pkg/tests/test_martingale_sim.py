from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad

from regnorm import martingale_sim as ms
from regnorm import norm_core as nc
from regnorm.errors import ConfigError, InputError, NonsmoothNormError
from regnorm.types import (
    BoundedSphere,
    CustomScheme,
    Euclidean,
    FixedDirectionRademacher,
    GaussianIso,
    Lp,
    RademacherBasis,
    Schatten,
    SimConfig,
    SumOfNorms,
)


def _without_timing(report):
    return dataclasses.replace(report, elapsed=0.0)


class TestDraws:
    def test_rademacher_basis_hits_one_coordinate(self):
        out = ms.draw_increment(RademacherBasis(3), 2, ms.substream(1, 0, 2), size=1000)
        assert out.shape == (1000, 3)
        np.testing.assert_array_equal(out[:, [0, 2]], 0.0)
        assert set(np.unique(out[:, 1])) == {-1.0, 1.0}

    def test_single_draw_is_a_point(self):
        x = ms.draw_increment(RademacherBasis(3), 3, ms.substream(1, 0, 3))
        assert x.shape == (3,)
        assert abs(x[2]) == 1.0

    @pytest.mark.parametrize("step", [0, 4])
    def test_rademacher_basis_horizon(self, step):
        with pytest.raises(InputError):
            ms.draw_increment(RademacherBasis(3), step, ms.substream(1, 0, 1))

    def test_fixed_direction_is_scaled(self):
        u = np.array([0.6, 0.8])
        scheme = FixedDirectionRademacher(Euclidean(2), u, sigma=2.0)
        out = ms.draw_increment(scheme, 1, ms.substream(0, 0, 1), size=500)
        assert np.all(np.isclose(out, 2 * u) | np.isclose(out, -2 * u))

    def test_fixed_direction_must_be_unit(self):
        scheme = FixedDirectionRademacher(Euclidean(2), np.array([1.0, 1.0]))
        with pytest.raises(InputError):
            ms.draw_increment(scheme, 1, ms.substream(0, 0, 1))

    def test_bounded_sphere_has_exact_norm(self):
        space = Lp(4, 3)
        out = ms.draw_increment(BoundedSphere(space, 4, sigma=3.0), 1, ms.substream(5, 0, 1), size=200)
        np.testing.assert_allclose(nc.norm(space, out), 3.0, rtol=1e-12)

    @pytest.mark.parametrize("scheme", [RademacherBasis(4), GaussianIso(4), BoundedSphere(Euclidean(4), 4)], ids=repr)
    def test_increments_are_centered(self, scheme):
        out = ms.draw_increment(scheme, 2, ms.substream(9, 0, 2), size=1_000_000)
        se = out.std(axis=0) / math.sqrt(out.shape[0])
        assert np.all(np.abs(out.mean(axis=0)) <= 4 * np.maximum(se, 1e-12))

    def test_substreams_are_keyed(self):
        a = ms.substream(3, 1, 2).random(4)
        np.testing.assert_array_equal(a, ms.substream(3, 1, 2).random(4))
        assert not np.array_equal(a, ms.substream(3, 1, 3).random(4))
        assert not np.array_equal(a, ms.substream(3, 2, 2).random(4))


class TestCertificates:
    def test_rademacher(self):
        cert = ms.certify_condition(RademacherBasis(5))
        assert cert.alpha == 2.0 and cert.bounded and cert.certified
        np.testing.assert_array_equal(cert.profile.values, np.ones(5))

    def test_gaussian_scale(self):
        sigma = ms.gaussian_sigma(1)
        assert sigma == pytest.approx(1 / math.sqrt((1 - math.exp(-2)) / 2), rel=1e-12)
        moment, _ = quad(lambda g: math.exp(-g * g / 2 + g * g / sigma**2) / math.sqrt(2 * math.pi), -math.inf, math.inf)
        assert moment == pytest.approx(math.e, rel=1e-8)
        assert not ms.certify_condition(GaussianIso(1)).bounded

    @pytest.mark.parametrize("n", [1, 2, 5, 50, 1000])
    def test_gaussian_moment_closed_form(self, n):
        s = 1 / ms.gaussian_sigma(n) ** 2
        assert (1 - 2 * s) ** (-n / 2) == pytest.approx(math.e, rel=1e-10)

    def test_bounded_sphere(self):
        cert = ms.certify_condition(BoundedSphere(Lp(3, 4), 3, sigma=3.0), N=7)
        assert cert.bounded and cert.alpha == 2.0
        np.testing.assert_array_equal(cert.profile.values, np.full(7, 3.0))

    def test_custom_scheme_is_uncertified(self):
        scheme = CustomScheme(lambda i, rng, k: rng.standard_normal((k, 2)), dim=2, alpha=1.5, sigma=2.0)
        cert = ms.certify_condition(scheme, N=3)
        assert not cert.certified and cert.alpha == 1.5


class TestBinomial:
    def test_zero_hits_closed_form(self):
        assert ms.binomial_upper_ci(0, 100, 0.99) == pytest.approx(1 - 0.01 ** (1 / 100), rel=1e-9)
        assert ms.binomial_upper_ci(0, 100, 0.99) == pytest.approx(0.045007, abs=1e-6)

    def test_all_hits(self):
        assert ms.binomial_upper_ci(40, 40, 0.999) == 1.0

    def test_monotone_in_hits(self):
        limits = [ms.binomial_upper_ci(h, 50, 0.999) for h in range(51)]
        assert all(a <= b for a, b in zip(limits, limits[1:]))
        assert all(h / 50 <= q for h, q in enumerate(limits))

    @pytest.mark.parametrize("hits,trials,level", [(-1, 10, 0.9), (11, 10, 0.9), (1, 10, 1.0), (0, 0, 0.5)])
    def test_range_errors(self, hits, trials, level):
        with pytest.raises(InputError):
            ms.binomial_upper_ci(hits, trials, level)


def _walk_config(trials, seed=7, gammas=(0.5, 1.0, 2.0)):
    scheme = FixedDirectionRademacher(Euclidean(1), np.array([1.0]))
    return SimConfig(scheme, Euclidean(1), N=64, trials=trials, seed=seed, gammas=list(gammas), variant="smooth_iii")


def _direction(space):
    return np.eye(1, 10)[0] / nc.norm(space, np.eye(1, 10)[0])


DOMINATION_GRID = [
    (FixedDirectionRademacher(Euclidean(1), np.array([1.0])), Euclidean(1), "regular_iii", 64),
    (FixedDirectionRademacher(Lp(10, 4), _direction(Lp(10, 4))), Lp(10, 4), "regular_iii", 64),
    (FixedDirectionRademacher(Lp(10, 4), _direction(Lp(10, 4))), Lp(10, 4), "smooth_iii", 64),
    (BoundedSphere(Lp(10, 4), 10), Lp(10, 4), "regular_iii", 64),
    (BoundedSphere(Lp(10, 4), 10), Lp(10, 4), "smooth_iii", 64),
    (GaussianIso(5), Euclidean(5), "regular_ii", 64),
    (GaussianIso(5), Euclidean(5), "smooth_i", 64),
    (RademacherBasis(16), Lp(16, math.inf), "regular_iii", 16),
]
DOMINATION_IDS = [
    "walk-l2", "walk-l4-regular", "walk-l4-smooth", "sphere-regular", "sphere-smooth",
    "gauss-ii", "gauss-i", "basis-linf",
]


class TestRun:
    def test_l1_counterexample(self):
        config = SimConfig(RademacherBasis(100), Euclidean(100), N=100, trials=300, seed=2, gammas=[1.0])
        report = ms.run(config)
        assert report.l1_min == report.l1_max == 100.0

    def test_l1_path(self):
        assert ms.l1_path(100) == [float(k) for k in range(1, 101)]
        assert ms.l1_path(10, k_max=4, seed=3) == [1.0, 2.0, 3.0, 4.0]

    def test_same_seed_same_report(self):
        a = ms.run(_walk_config(5_000))
        b = ms.run(_walk_config(5_000))
        assert _without_timing(a) == _without_timing(b)

    def test_independent_of_worker_count(self):
        one = ms.run(_walk_config(10_000), workers=1)
        four = ms.run(_walk_config(10_000), workers=4)
        assert _without_timing(one) == _without_timing(four)

    def test_different_seed_changes_paths(self):
        a = ms.run(_walk_config(5_000, seed=1))
        b = ms.run(_walk_config(5_000, seed=2))
        assert a.mean_sq_norm != b.mean_sq_norm

    def test_walk_is_dominated(self):
        report = ms.run(_walk_config(20_000))
        row = report.rows[-1]
        assert row.threshold == pytest.approx(24.0)
        assert row.analytic_bound == pytest.approx(math.exp(-2.0))
        assert row.freq_upper_conf <= row.analytic_bound
        assert report.certified

    @pytest.mark.slow
    def test_walk_is_dominated_full_sample(self):
        report = ms.run(_walk_config(100_000))
        assert all(r.freq_upper_conf <= r.analytic_bound for r in report.rows)

    @pytest.mark.parametrize("scheme,space,variant,N", DOMINATION_GRID, ids=DOMINATION_IDS)
    def test_bounds_dominate_and_second_moment(self, scheme, space, variant, N):
        config = SimConfig(scheme, space, N=N, trials=20_000, seed=11, gammas=[0.0, 0.5, 1.0, 2.0, 3.0], variant=variant)
        report = ms.run(config, workers=2)
        for row in report.rows:
            assert row.hits <= row.trials
            assert row.freq <= row.freq_upper_conf
            assert row.freq_upper_conf <= row.analytic_bound
        assert report.mean_sq_norm - 4 * report.mean_sq_norm_stderr <= report.second_moment_bound

    @pytest.mark.slow
    @pytest.mark.parametrize("scheme,space,variant,N", DOMINATION_GRID, ids=DOMINATION_IDS)
    def test_bounds_dominate_full_sample(self, scheme, space, variant, N):
        config = SimConfig(scheme, space, N=N, trials=100_000, seed=13, gammas=[0.5, 1.0, 2.0, 3.0], variant=variant)
        report = ms.run(config)
        assert all(r.freq_upper_conf <= r.analytic_bound for r in report.rows)

    def test_uncertified_custom_scheme(self):
        scheme = CustomScheme(
            lambda i, rng, k: rng.choice([-1.0, 1.0], size=(k, 2)), dim=2, alpha=2.0, sigma=math.sqrt(2), bounded=True
        )
        report = ms.run(SimConfig(scheme, Euclidean(2), N=8, trials=500, seed=0, gammas=[1.0]))
        assert not report.certified


class TestCompatibility:
    @pytest.mark.parametrize(
        "scheme,space,N,variant",
        [
            (GaussianIso(3), Euclidean(3), 4, "smooth_iii"),
            (RademacherBasis(3), Euclidean(3), 3, "scalar_i"),
            (RademacherBasis(5), Euclidean(5), 6, "regular_ii"),
            (RademacherBasis(3), Euclidean(4), 3, "regular_ii"),
            (GaussianIso(3), SumOfNorms((Lp(3, 2), Lp(3, 4))), 4, "regular_ii"),
            (GaussianIso(17), Schatten(1, 17, 2), 4, "regular_ii"),
            (BoundedSphere(Lp(3, 4), 3), Euclidean(3), 4, "regular_iii"),
        ],
        ids=["unbounded-iii", "scalar", "horizon", "dimension", "not-dominated", "schatten-edge", "other-space"],
    )
    def test_rejected(self, scheme, space, N, variant):
        with pytest.raises(ConfigError):
            ms.run(SimConfig(scheme, space, N=N, trials=10, seed=0, gammas=[1.0], variant=variant))

    def test_smooth_variant_needs_smooth_norm(self):
        config = SimConfig(RademacherBasis(3), Lp(3, math.inf), N=3, trials=10, seed=0, gammas=[1.0], variant="smooth_ii")
        with pytest.raises(NonsmoothNormError):
            ms.run(config)

    @pytest.mark.parametrize("kwargs", [dict(N=0), dict(trials=0), dict(gammas=[-1.0])])
    def test_config_validation(self, kwargs):
        base = dict(scheme=RademacherBasis(2), space=Euclidean(2), N=2, trials=5, seed=0, gammas=[1.0])
        base.update(kwargs)
        with pytest.raises(InputError):
            SimConfig(**base)

    def test_default_space(self):
        assert ms.default_space(GaussianIso(3)) == Euclidean(3)
        assert ms.default_space(BoundedSphere(Lp(3, 4), 3)) == Lp(3, 4)
