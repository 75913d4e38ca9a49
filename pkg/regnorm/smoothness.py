"""Regularity constants, sampled smoothness verifiers and trace-function calculus."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize

from . import norm_core as nc
from .errors import DomainError, InputError, NonsmoothNormError, UnsupportedError
from .settings import settings
from .types import (
    BlockLp,
    CharCheckReport,
    Euclidean,
    HuberCheckReport,
    HuberParams,
    Lp,
    RegularityCertificate,
    Schatten,
    SmoothnessReport,
    SpaceDescriptor,
    SumOfNorms,
    TraceCheckReport,
    Witness,
)

logger = logging.getLogger(__name__)

PHI_RATIO = 2 / (1 + math.sqrt(5))


# ---------------------------------------------------------------------------
# rho search
# ---------------------------------------------------------------------------


def golden_section(f: Callable[[float], float], lo: float, hi: float) -> Tuple[float, float]:
    """Minimize a unimodal ``f`` on [lo, hi]; endpoints are compared explicitly."""
    if hi - lo <= settings.GOLDEN_TOL:
        return lo, f(lo)
    xL, xU = lo, hi
    x1 = xU - PHI_RATIO * (xU - xL)
    x2 = xL + PHI_RATIO * (xU - xL)
    f1, f2 = f(x1), f(x2)
    iteration = 0
    while iteration < settings.GOLDEN_MAX_ITER and abs(xU - xL) > settings.GOLDEN_TOL:
        if f2 > f1:
            xU, x2, f2 = x2, x1, f1
            x1 = xU - PHI_RATIO * (xU - xL)
            f1 = f(x1)
        else:
            xL, x1, f1 = x1, x2, f2
            x2 = xL + PHI_RATIO * (xU - xL)
            f2 = f(x2)
        iteration += 1
    xF = 0.5 * (xL + xU)
    best = min([(f(xF), xF), (f(lo), lo), (f(hi), hi)])
    return best[1], best[0]


def rho_cap(base: float) -> float:
    return max(settings.RHO_CAP_MIN, 2.0 * math.log(base) + 4.0)


def _rho_upper(p: float, base: float) -> float:
    return min(p, rho_cap(base))


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _power_factor(base: float, rho: float, p: float) -> float:
    return base ** (2.0 / rho - 2.0 * _inv(p))


def _check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 2:
        raise InputError(f"exponent p must lie in [2, inf], got {p}")
    return p


def _minimize_over_rho(factor: Callable[[float], float], base: int, p: float) -> Tuple[float, float]:
    hi = _rho_upper(p, base)
    return golden_section(lambda r: factor(r) * _power_factor(base, r, p), 2.0, hi)


def kappa_lp(n: int, p: float) -> RegularityCertificate:
    """kappa_p(n) = min over rho in [2, p] of (rho - 1) n^{2/rho - 2/p}."""
    p = _check_p(p)
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    rho, kappa = _minimize_over_rho(lambda r: r - 1.0, n, p)
    return RegularityCertificate(kappa=kappa, kappa_plus=rho - 1.0, smooth_exponent_rho=rho, source="lp")


def kappa_schatten(m: int, n: int, p: float) -> RegularityCertificate:
    """min over rho of max[2, rho - 1] min(m,n)^{2/rho - 2/p}; the kink at rho = 3 is split."""
    p = _check_p(p)
    if m < 1 or n < 1:
        raise InputError(f"matrix sizes must be >= 1, got {m}x{n}")
    base = min(m, n)
    hi = _rho_upper(p, base)
    # 2 * base^{...} is nonincreasing in rho, so its piece is minimized at the right end
    left = min(3.0, hi) if base > 1 else 2.0
    candidates = [(2.0 * _power_factor(base, left, p), left)]
    if hi > 3.0:
        rho, val = golden_section(lambda r: (r - 1.0) * _power_factor(base, r, p), 3.0, hi)
        candidates.append((val, rho))
    kappa, rho = min(candidates)
    return RegularityCertificate(
        kappa=kappa, kappa_plus=max(2.0, rho - 1.0), smooth_exponent_rho=rho, source="schatten"
    )


def _product(kappa_factor: float, m: int, p: float) -> Tuple[float, float]:
    rho, val = _minimize_over_rho(lambda r: kappa_factor + r - 1.0, m, p)
    return rho, val


def kappa_product(kappa_factor: float, m: int, p: float, factors_regular: bool) -> float:
    p = _check_p(p)
    if kappa_factor < 1 or m < 1:
        raise InputError(f"need kappa_factor >= 1 and m >= 1, got {kappa_factor}, {m}")
    _, val = _product(kappa_factor, m, p)
    return 2.0 * val if factors_regular else val


def kappa_sum(kappa: float, m: int, factors_regular: bool) -> float:
    if kappa < 1 or m < 1:
        raise InputError(f"need kappa >= 1 and m >= 1, got {kappa}, {m}")
    return (2.0 if factors_regular else 1.0) * m * kappa


_EUCLIDEAN_CERT = RegularityCertificate(kappa=1.0, kappa_plus=1.0, smooth_exponent_rho=2.0, source="euclidean")


def _simple(space: SpaceDescriptor) -> bool:
    return isinstance(space, (Euclidean, Lp, Schatten))


def kappa_space(space: SpaceDescriptor) -> RegularityCertificate:
    """Dispatch to the closed-form rules; anything else falls back to kappa = dim."""
    if isinstance(space, Euclidean):
        return _EUCLIDEAN_CERT
    if isinstance(space, Lp):
        return _EUCLIDEAN_CERT if space.p == 2 else kappa_lp(space.n, space.p)
    if isinstance(space, Schatten):
        return kappa_schatten(space.m, space.n, space.p)
    if isinstance(space, BlockLp) and all(_simple(c) or isinstance(c, BlockLp) for c in space.children):
        certs = [kappa_space(c) for c in space.children]
        if all(c.source != "dimension" for c in certs):
            kappa_f = max(c.kappa for c in certs)
            regular = any(c.kappa > c.kappa_plus for c in certs)
            rho, val = _product(kappa_f, len(certs), space.p)
            kappa = 2.0 * val if regular else val
            kappa_plus = max(c.kappa_plus for c in certs) + rho - 1.0
            return RegularityCertificate(kappa, min(kappa_plus, kappa), rho, source="product")
    if isinstance(space, SumOfNorms) and all(_simple(c) for c in space.children):
        certs = [kappa_space(c) for c in space.children]
        regular = any(c.kappa > c.kappa_plus for c in certs)
        kappa = kappa_sum(max(c.kappa for c in certs), len(certs), regular)
        return RegularityCertificate(
            kappa,
            min(max(c.kappa_plus for c in certs), kappa),
            max(c.smooth_exponent_rho for c in certs),
            source="sum",
        )
    dim = nc.dimension(space)
    logger.info("[kappa] no closed-form rule for %r, falling back to kappa = dim = %d", space, dim)
    return RegularityCertificate(float(dim), 1.0, 2.0, source="dimension")


def display_bound(space: SpaceDescriptor) -> Optional[float]:
    """Closed-form upper bounds printed beside the kappa formulas (reported, not asserted)."""
    if isinstance(space, Euclidean):
        return 1.0
    if isinstance(space, Lp):
        if space.n < 2:
            return space.p - 1.0
        return min(space.p - 1.0, 2.0 * math.log(space.n))
    if isinstance(space, Schatten):
        base = min(space.m, space.n)
        return min(max(2.0, space.p - 1.0), (2.0 * math.log(base + 2) - 1.0) * math.e)
    if isinstance(space, BlockLp):
        cert = kappa_space(space)
        if cert.source != "product":
            return None
        certs = [kappa_space(c) for c in space.children]
        k = max(c.kappa for c in certs)
        m = len(certs)
        bound = min(k + space.p - 1.0, (k + 2.0 * math.log(m) - 1.0) * math.e)
        return 2.0 * bound if any(c.kappa > c.kappa_plus for c in certs) else bound
    return None


def smooth_constant(space: SpaceDescriptor) -> float:
    """Smoothness constant of the norm itself (no surrogate)."""
    if isinstance(space, Euclidean):
        return 1.0
    if not nc.is_smooth(space):
        raise NonsmoothNormError(f"{type(space).__name__} norm is not smooth; use a regular_* variant")
    if isinstance(space, Lp):
        return space.p - 1.0
    if isinstance(space, Schatten):
        # p = 2 is the Frobenius norm
        return 1.0 if space.p == 2 else max(2.0, space.p - 1.0)
    # block combination of smooth norms: kappa + p - 2
    return max(smooth_constant(c) for c in space.children) + space.p - 2.0


# ---------------------------------------------------------------------------
# smooth surrogates
# ---------------------------------------------------------------------------


@dataclass
class SmoothSquare:
    """p_+(x) = ||x||_+^2 with ||x||^2 <= p_+(x) <= compat * ||x||^2."""

    space: SpaceDescriptor
    value: Callable
    grad: Callable
    compat: float
    kappa_plus: float


def _simple_surrogate(space: SpaceDescriptor, cert: RegularityCertificate, embed: bool) -> SmoothSquare:
    rho = cert.smooth_exponent_rho
    if isinstance(space, Euclidean) or (isinstance(space, Lp) and space.p == 2):
        target = Euclidean(space.n)
        compat = 1.0
    elif isinstance(space, Lp):
        target = Lp(space.n, rho)
        compat = _power_factor(space.n, rho, space.p)
    else:
        target = Schatten(space.m, space.n, rho)
        compat = _power_factor(min(space.m, space.n), rho, space.p)
        if embed:
            m, n = space.m, space.n
            big = Schatten(m + n, m + n, rho)
            scale = 2.0 ** (-2.0 / rho)

            def value(X):
                return scale * np.asarray(nc.norm(big, nc.embed_symmetric(X))) ** 2

            def grad(X):
                G = nc.grad_sq_norm(big, nc.embed_symmetric(X))
                return scale * (G[..., :m, m:] + np.swapaxes(G[..., m:, :m], -1, -2))

            return SmoothSquare(space, value, grad, compat, cert.kappa_plus)

    def value(x):
        return np.asarray(nc.norm(target, x)) ** 2

    def grad(x):
        return nc.grad_sq_norm(target, x)

    return SmoothSquare(space, value, grad, compat, cert.kappa_plus)


def smooth_surrogate(space: SpaceDescriptor, cert: Optional[RegularityCertificate] = None, embed: bool = False) -> SmoothSquare:
    cert = cert or kappa_space(space)
    if cert.source == "dimension":
        raise UnsupportedError("dimension-fallback certificates have no explicit smooth surrogate")
    if _simple(space):
        return _simple_surrogate(space, cert, embed)
    children = [smooth_surrogate(c, kappa_space(c), embed) for c in space.children]
    m = len(children)
    if isinstance(space, BlockLp):
        rho = cert.smooth_exponent_rho

        def value(x):
            parts = np.stack([np.asarray(ch.value(xi)) for ch, xi in zip(children, x)], axis=-1)
            return nc._lp(np.sqrt(parts), rho) ** 2

        def grad(x):
            a = np.sqrt(np.stack([np.asarray(ch.value(xi)) for ch, xi in zip(children, x)], axis=-1))
            r = nc._lp(a, rho)[..., None]
            safe = np.where(r > 0, r, 1.0)
            coef = np.where(r > 0, (a / safe) ** (rho - 2.0), 0.0)
            return tuple(
                nc._scale(c, ch.grad(xi), coef[..., k])
                for k, (c, ch, xi) in enumerate(zip(space.children, children, x))
            )

        compat = max(ch.compat for ch in children) * _power_factor(m, rho, space.p)
        return SmoothSquare(space, value, grad, compat, cert.kappa_plus)

    # sum of norms: sqrt(m) * (sum ||x||_{i,+}^2)^{1/2}
    def value(x):
        return m * sum(np.asarray(ch.value(x)) for ch in children)

    def grad(x):
        return m * sum(np.asarray(ch.grad(x)) for ch in children)

    compat = m * max(ch.compat for ch in children)
    return SmoothSquare(space, value, grad, compat, cert.kappa_plus)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def _substream(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _structured_flat(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    """Basis vectors, sums of two basis vectors, flat sign vectors (extremal l_p directions)."""
    out = np.zeros((count, d))
    kind = rng.integers(0, 3, size=count)
    i = rng.integers(0, d, size=count)
    j = rng.integers(0, d, size=count)
    rows = np.arange(count)
    out[rows, i] = 1.0
    two = kind == 1
    out[rows[two], j[two]] += rng.choice([-1.0, 1.0], size=int(two.sum()))
    flat = kind == 2
    out[flat] = rng.choice([-1.0, 1.0], size=(int(flat.sum()), d))
    return out * rng.uniform(0.5, 2.0, size=(count, 1))


def _perturbations(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    h = np.zeros((count, d))
    rows = np.arange(count)
    i = rng.integers(0, d, size=count)
    j = rng.integers(0, d, size=count)
    h[rows, i] += 1.0
    h[rows, j] -= 1.0
    same = i == j
    h[same] = rng.standard_normal((int(same.sum()), d))
    eps = rng.choice([1e-3, 1e-2, 1e-1, 1.0], size=(count, 1))
    return eps * h


def sample_pairs(space: SpaceDescriptor, count: int, rng: np.random.Generator):
    """Half Gaussian pairs, half structured points with small targeted perturbations."""
    d = nc.dimension(space)
    half = count // 2
    x = np.vstack([rng.standard_normal((half, d)), _structured_flat(rng, count - half, d)])
    y = np.vstack([rng.standard_normal((half, d)), _perturbations(rng, count - half, d)])
    return nc.unflatten_point(space, x), nc.unflatten_point(space, y)


def _chunks(trials: int, size: int = 8192):
    chunk, done = 0, 0
    while done < trials:
        take = min(size, trials - done)
        yield chunk, take
        chunk += 1
        done += take


# ---------------------------------------------------------------------------
# sampled verifiers
# ---------------------------------------------------------------------------


def verify_smoothness(
    space: SpaceDescriptor,
    certificate: Optional[RegularityCertificate] = None,
    trials: int = 10_000,
    seed: int = 0,
    embed: bool = False,
) -> SmoothnessReport:
    """Sample p_+(x+y) <= p_+(x) + Dp_+(x)[y] + kappa_+ p_+(y) and the compatibility sandwich."""
    certificate = certificate or kappa_space(space)
    if trials < 1:
        raise InputError("trials must be positive")
    sur = smooth_surrogate(space, certificate, embed=embed)
    worst = -math.inf
    sand_lo, sand_hi = math.inf, -math.inf
    for chunk, take in _chunks(trials):
        rng = _substream(seed, chunk)
        x, y = sample_pairs(space, take, rng)
        px, py = np.asarray(sur.value(x)), np.asarray(sur.value(y))
        pxy = np.asarray(sur.value(nc.add_points(space, x, y)))
        lin = np.asarray(nc._inner(space, sur.grad(x), y))
        ok = py > 0
        ratio = (pxy - px - lin)[ok] / py[ok]
        if ratio.size:
            worst = max(worst, float(np.max(ratio)))
        base_sq = np.asarray(nc._norm(space, x)) ** 2
        nz = base_sq > 0
        sand = px[nz] / base_sq[nz]
        if sand.size:
            sand_lo = min(sand_lo, float(np.min(sand)))
            sand_hi = max(sand_hi, float(np.max(sand)))
    tol = settings.VIOLATION_TOL
    passed = (
        worst <= certificate.kappa_plus * (1 + tol)
        and sand_lo >= 1 - tol
        and sand_hi <= sur.compat * (1 + tol)
    )
    if not passed:
        logger.warning("[verify] smoothness check failed for %r: worst ratio %.6g vs kappa_+ %.6g", space, worst, certificate.kappa_plus)
    return SmoothnessReport(
        trials=trials,
        worst_violation_ratio=worst,
        claimed_kappa=certificate.kappa_plus,
        sandwich_min=sand_lo,
        sandwich_max=sand_hi,
        sandwich_bound=sur.compat,
        passed=passed,
        seed=seed,
    )


def char_check(space: SpaceDescriptor, kappa: float, trials: int = 10_000, seed: int = 0) -> CharCheckReport:
    """Sampled monotonicity and Lipschitz forms of kappa-smoothness for f = ||x||^2 / 2."""
    if not nc.is_smooth(space):
        raise NonsmoothNormError("char_check needs a smooth space (p < inf)")
    tol = settings.VIOLATION_TOL
    worst_mono = worst_lip = -math.inf
    worst_dual: Optional[float] = math.inf if isinstance(space, Euclidean) else None
    witness: Optional[Witness] = None
    for chunk, take in _chunks(trials):
        rng = _substream(seed, chunk)
        x, h = sample_pairs(space, take, rng)
        y = nc.add_points(space, x, h)
        fx = nc._scale(space, nc._grad_sq_norm(space, x), 0.5)
        fy = nc._scale(space, nc._grad_sq_norm(space, y), 0.5)
        diff = nc.add_points(space, fx, nc._scale(space, fy, -1.0))
        step = np.asarray(nc._norm(space, h))
        ok = step > 0
        mono = np.asarray(nc._inner(space, diff, nc._scale(space, h, -1.0)))[ok] / step[ok] ** 2
        lip = np.asarray(nc._dual_norm(space, diff))[ok] / step[ok]
        for ratios in (mono, lip):
            if ratios.size and float(np.max(ratios)) > (witness.ratio if witness else -math.inf):
                k = int(np.argmax(ratios))
                idx = np.flatnonzero(ok)[k]
                witness = Witness(
                    x=nc.flatten_point(space, x)[idx].copy(),
                    y=nc.flatten_point(space, y)[idx].copy(),
                    ratio=float(ratios[k]),
                )
        if mono.size:
            worst_mono = max(worst_mono, float(np.max(mono)))
        if lip.size:
            worst_lip = max(worst_lip, float(np.max(lip)))
        if worst_dual is not None:
            # f_*(xi) = ||xi||_*^2/2 from the dual-norm evaluator; the space is self-dual,
            # so grad f_* is half the public gradient of the squared norm
            sub = nc.scale_point(space, nc.grad_sq_norm(space, x), 0.5)
            gap = (
                0.5 * np.atleast_1d(nc.dual_norm(space, y)) ** 2
                - 0.5 * np.atleast_1d(nc.dual_norm(space, x)) ** 2
                - np.atleast_1d(nc.inner(space, sub, h))
            )
            e2 = np.atleast_1d(nc.dual_norm(space, h)) ** 2
            nz = e2 > 0
            if nz.any():
                worst_dual = min(worst_dual, float(np.min(gap[nz] / (0.5 * e2[nz]) * kappa)))
    passed = worst_mono <= kappa * (1 + tol) and worst_lip <= kappa * (1 + tol)
    if worst_dual is not None:
        passed = passed and worst_dual >= 1 - tol
    if not passed and witness is not None:
        logger.info("[verify] char_check witness ratio %.6g exceeds kappa %.6g", witness.ratio, kappa)
    return CharCheckReport(
        trials=trials,
        kappa=kappa,
        worst_monotone_ratio=worst_mono,
        worst_lipschitz_ratio=worst_lip,
        worst_dual_ratio=worst_dual,
        passed=passed,
        seed=seed,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# trace functions F(X) = Tr f(X)
# ---------------------------------------------------------------------------


class TraceFunction:
    """Scalar f on an open interval with constants bracketing its divided differences."""

    def __init__(
        self,
        f: Callable,
        df: Callable,
        d2f: Callable,
        delta: Tuple[float, float] = (-math.inf, math.inf),
        theta_minus: float = 0.0,
        theta_plus: float = 1.0,
        mu_minus: float = 0.0,
        mu_plus: float = 0.0,
        name: str = "f",
    ) -> None:
        lo, hi = float(delta[0]), float(delta[1])
        if not lo < hi:
            raise InputError(f"interval must be nonempty and open, got ({lo}, {hi})")
        self.f, self.df, self.d2f = f, df, d2f
        self.delta = (lo, hi)
        self.theta_minus, self.theta_plus = float(theta_minus), float(theta_plus)
        self.mu_minus, self.mu_plus = float(mu_minus), float(mu_plus)
        self.name = name
        self._check_constants()

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], **kwargs) -> "TraceFunction":
        poly = Polynomial(list(coeffs))
        d1, d2 = poly.deriv(1), poly.deriv(2)
        kwargs.setdefault("name", "poly:" + ",".join(f"{c:g}" for c in coeffs))
        return cls(poly, d1, d2, **kwargs)

    @classmethod
    def cube(cls, delta=(-math.inf, math.inf)) -> "TraceFunction":
        return cls.polynomial([0, 0, 0, 1], delta=delta, theta_minus=1.0, theta_plus=1.0, name="cube")

    @classmethod
    def quartic(cls, delta=(-math.inf, math.inf)) -> "TraceFunction":
        return cls.polynomial([0, 0, 0, 0, 1], delta=delta, theta_minus=1.0 / 3.0, theta_plus=1.0, name="quartic")

    @classmethod
    def exponential(cls, delta=(-math.inf, math.inf)) -> "TraceFunction":
        return cls(np.exp, np.exp, np.exp, delta=delta, theta_minus=0.0, theta_plus=1.0, name="exp")

    def contains(self, values: np.ndarray) -> bool:
        lo, hi = self.delta
        return bool(np.all((values > lo) & (values < hi)))

    def _grid(self) -> np.ndarray:
        lo, hi = self.delta
        span = settings.TRACE_GRID_SPAN
        a = max(lo, -span)
        b = min(hi, span)
        # stay strictly inside the open interval
        pad = 1e-6 * (b - a)
        return np.linspace(a + pad if a == lo else a, b - pad if b == hi else b, settings.TRACE_GRID_POINTS)

    def _check_constants(self) -> None:
        t = self._grid()
        a, b = np.meshgrid(t, t, indexing="ij")
        mask = a < b
        a, b = a[mask], b[mask]
        dd = (self.df(b) - self.df(a)) / (b - a)
        avg = 0.5 * (self.d2f(a) + self.d2f(b))
        slack = 1e-9 * (np.abs(dd) + np.abs(avg) + 1.0)
        lower = self.theta_minus * avg + self.mu_minus
        upper = self.theta_plus * avg + self.mu_plus
        if np.any(lower > dd + slack) or np.any(dd > upper + slack):
            raise InputError(
                f"constants (theta-={self.theta_minus}, theta+={self.theta_plus}, mu-={self.mu_minus}, "
                f"mu+={self.mu_plus}) do not bracket the divided differences of {self.name}"
            )

    # spectral helpers
    def _eig(self, X) -> Tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise InputError(f"trace functions need a square matrix, got {X.shape}")
        scale = max(1.0, float(np.max(np.abs(X))))
        if not np.allclose(X, X.T, atol=1e-12 * scale, rtol=0):
            raise InputError("trace functions need a symmetric matrix")
        lam, U = np.linalg.eigh(0.5 * (X + X.T))
        if not self.contains(lam):
            raise DomainError(f"eigenvalues {lam.min():.6g}..{lam.max():.6g} leave the interval {self.delta}")
        return lam, U


def trace_value(tf: TraceFunction, X) -> float:
    lam, _ = tf._eig(X)
    return float(np.sum(tf.f(lam)))


def trace_grad(tf: TraceFunction, X) -> np.ndarray:
    lam, U = tf._eig(X)
    return (U * tf.df(lam)) @ U.T


def _gamma_matrix(tf: TraceFunction, lam: np.ndarray) -> np.ndarray:
    ls, lt = lam[:, None], lam[None, :]
    gap = ls - lt
    radius = float(np.max(np.abs(lam))) if lam.size else 0.0
    close = np.abs(gap) <= settings.NEAR_DEGENERATE_REL * max(radius, 1e-300)
    safe = np.where(close, 1.0, gap)
    d1 = tf.df(lam)
    divided = (d1[:, None] - d1[None, :]) / safe
    second = np.broadcast_to(tf.d2f(lam)[:, None], gap.shape)
    return np.where(close, second, divided)


def trace_hessian_form(tf: TraceFunction, X, H) -> float:
    """D^2 F(X)[H, H] = sum_{s,t} Gamma_st Hhat_st^2 with Hhat = U^T H U."""
    lam, U = tf._eig(X)
    H = np.asarray(H, dtype=float)
    if H.shape != U.shape:
        raise InputError(f"direction shape {H.shape} does not match {U.shape}")
    Hh = U.T @ H @ U
    return float(np.sum(_gamma_matrix(tf, lam) * Hh**2))


def trace_hessian_bounds(tf: TraceFunction, X, H) -> Tuple[float, float]:
    """theta_- Tr(H f''(X) H) + mu_- Tr(H^2) and the theta_+/mu_+ counterpart."""
    lam, U = tf._eig(X)
    Hh = U.T @ np.asarray(H, dtype=float) @ U
    sq = Hh**2
    curv = float(np.sum(tf.d2f(lam)[:, None] * sq))
    trh2 = float(np.sum(sq))
    return (
        tf.theta_minus * curv + tf.mu_minus * trh2,
        tf.theta_plus * curv + tf.mu_plus * trh2,
    )


# ---------------------------------------------------------------------------
# dual blend of a smooth norm with the base norm
# ---------------------------------------------------------------------------


class BlendNorm:
    """q_*(xi) = sqrt(g pi_*^2(xi) + (1 - g) ||xi||_*^2), g = 1/(mu - 1).

    ``pi_space`` and ``base_space`` are primal spaces; their dual norms are blended.
    The smooth norm must dominate the base norm within a factor sqrt(mu),
    ||x|| <= pi(x) <= sqrt(mu) ||x||, or equivalently pi_* <= ||.||_* <= sqrt(mu) pi_*.
    This is checked on the sampled directions. Under it
    (mu - 1)/mu ||xi||_*^2 <= q_*^2(xi) <= ||xi||_*^2, so ||x||^2 <= q^2(x) <= mu/(mu - 1) ||x||^2.
    The primal q(x) = max{<xi, x> : q_*(xi) <= 1} is recovered numerically.
    """

    def __init__(self, pi_space: SpaceDescriptor, base_space: SpaceDescriptor, mu: float, seed: int = 0) -> None:
        if not mu > 2:
            raise InputError(f"blend needs mu > 2, got {mu}")
        for sp in (pi_space, base_space):
            if not isinstance(sp, (Euclidean, Lp)):
                raise UnsupportedError("blend_smooth_norm works on coordinate spaces only")
        if pi_space.n != base_space.n:
            raise InputError("blended norms must live on one space")
        if pi_space.n > settings.BLEND_MAX_DIM:
            raise UnsupportedError(f"blend primal is recovered numerically; dimension {pi_space.n} > {settings.BLEND_MAX_DIM}")
        self.pi_space, self.base_space = pi_space, base_space
        self.mu = float(mu)
        self.gamma = 1.0 / (self.mu - 1.0)
        self.n = pi_space.n
        self._directions = self._sample_directions(seed)
        self._check_domination()

    def _check_domination(self) -> None:
        pi = np.asarray(nc.dual_norm(self.pi_space, self._directions))
        base = np.asarray(nc.dual_norm(self.base_space, self._directions))
        ratio = base / pi
        tol = settings.VIOLATION_TOL
        lo, hi = float(np.min(ratio)), float(np.max(ratio))
        if lo < 1.0 - tol or hi > math.sqrt(self.mu) * (1.0 + tol):
            raise InputError(
                f"smooth norm must satisfy ||x|| <= pi(x) <= sqrt(mu) ||x||; "
                f"sampled dual ratios span [{lo:.6g}, {hi:.6g}], need [1, {math.sqrt(self.mu):.6g}]"
            )

    def _sample_directions(self, seed: int) -> np.ndarray:
        count = settings.BLEND_DIRECTIONS
        if self.n == 1:
            return np.array([[1.0], [-1.0]])
        if self.n == 2:
            ang = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
            return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        g = np.random.default_rng(seed).standard_normal((count, self.n))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def dual(self, xi) -> np.ndarray:
        pi = np.asarray(nc.dual_norm(self.pi_space, xi))
        base = np.asarray(nc.dual_norm(self.base_space, xi))
        return np.sqrt(self.gamma * pi**2 + (1.0 - self.gamma) * base**2)

    def primal(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(self.n)
        if not np.any(x):
            return 0.0
        vals = self._directions @ x / self.dual(self._directions)
        start = self._directions[int(np.argmax(vals))]
        res = minimize(lambda u: -float(u @ x) / float(self.dual(u)), start, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        return max(float(np.max(vals)), -float(res.fun))


def blend_smooth_norm(pi_star: SpaceDescriptor, base_star: SpaceDescriptor, mu: float, seed: int = 0) -> BlendNorm:
    return BlendNorm(pi_star, base_star, mu, seed=seed)


# ---------------------------------------------------------------------------
# sampled checks of the trace calculus and the Huber surrogate
# ---------------------------------------------------------------------------


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def trace_check(tf: TraceFunction, n: int = 5, samples: int = 100, seed: int = 0, step: float = 1e-4) -> TraceCheckReport:
    """Divided-difference Hessian against a central second difference, plus the Hessian sandwich."""
    if n < 1 or samples < 1:
        raise InputError("trace_check needs n >= 1 and samples >= 1")
    rng = _substream(seed, 0)
    worst = 0.0
    bounds_hold = True
    tol = settings.VIOLATION_TOL
    for _ in range(samples):
        X = _random_symmetric(rng, n)
        H = _random_symmetric(rng, n)
        form = trace_hessian_form(tf, X, H)
        fd = (trace_value(tf, X + step * H) - 2.0 * trace_value(tf, X) + trace_value(tf, X - step * H)) / step**2
        worst = max(worst, abs(form - fd) / max(abs(fd), 1.0))
        lo, hi = trace_hessian_bounds(tf, X, H)
        slack = tol * (abs(form) + 1.0)
        if form < lo - slack or form > hi + slack:
            bounds_hold = False
    passed = bounds_hold and worst <= 1e-5
    if not passed:
        logger.warning("[verify] trace check for %s: max rel error %.3g, bounds hold: %s", tf.name, worst, bounds_hold)
    return TraceCheckReport(
        function=tf.name, n=n, samples=samples, seed=seed,
        max_rel_error=worst, bounds_hold=bounds_hold, passed=passed,
    )


def huber_check(space: SpaceDescriptor, params: HuberParams, samples: int = 10_000, seed: int = 0) -> HuberCheckReport:
    """Sampled |V(xi+eta) - V(xi)| <= ||eta|| and <x, xi> <= beta/2 + V(xi) for ||x||_* <= 1."""
    if samples < 1:
        raise InputError("huber_check needs samples >= 1")
    rng = _substream(seed, 0)
    d = nc.dimension(space)
    # spread magnitudes so both branches of V are exercised
    spread = params.beta * np.exp(rng.uniform(-3.0, 3.0, size=(samples, 1)))
    xi_flat = rng.standard_normal((samples, d))
    xi_flat *= spread / np.linalg.norm(xi_flat, axis=-1, keepdims=True)
    eta_flat = rng.standard_normal((samples, d)) * np.exp(rng.uniform(-3.0, 1.0, size=(samples, 1))) * params.beta
    xi = nc.unflatten_point(space, xi_flat)
    eta = nc.unflatten_point(space, eta_flat)

    v0 = np.asarray(nc.huber(space, params, xi))
    v1 = np.asarray(nc.huber(space, params, nc.add_points(space, xi, eta)))
    lip_excess = float(np.max(np.abs(v1 - v0) - np.asarray(nc.norm(space, eta))))

    x = nc.unflatten_point(space, rng.standard_normal((samples, d)))
    radius = rng.uniform(0.0, 1.0, size=samples) / np.asarray(nc.dual_norm(space, x))
    x = nc._scale(space, x, radius)
    legendre_excess = float(np.max(np.asarray(nc._inner(space, x, xi)) - params.beta / 2.0 - v0))

    grad_dual: Optional[float] = None
    if nc.is_smooth(space):
        grad_dual = float(np.max(np.asarray(nc.dual_norm(space, nc.huber_grad(space, params, xi)))))

    passed = lip_excess <= 1e-10 and legendre_excess <= 1e-10
    if grad_dual is not None:
        passed = passed and grad_dual <= 1.0 + 1e-9
    return HuberCheckReport(
        beta=params.beta, samples=samples, seed=seed,
        worst_lipschitz_excess=lip_excess, worst_legendre_excess=legendre_excess,
        worst_grad_dual=grad_dual, passed=passed,
    )
