"""Large-deviation calculators for martingales in regular spaces.

Bounds are clamped to 1. The crossover constant gamma_* is reported as ``math.inf``
when the alpha-power regime never activates (alpha = 2).
"""
from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import InputError, NumericError
from .settings import settings
from .types import Regime, SigmaProfile, TailQuery, TailResult, TailVariant

# exp() overflows past this
_LOG_MAX = 709.0
_ALPHA_ONE_EPS = 1e-6
_ALPHA_TWO_EPS = 1e-9


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (1.0 <= alpha <= 2.0):
        raise InputError(f"alpha must lie in [1, 2], got {alpha}")
    return alpha


def _as_profile(profile: Union[SigmaProfile, Sequence[float]]) -> SigmaProfile:
    return profile if isinstance(profile, SigmaProfile) else SigmaProfile(profile)


def gamma_star(alpha: float, profile: Union[SigmaProfile, Sequence[float]]) -> float:
    alpha = check_alpha(alpha)
    profile = _as_profile(profile)
    if alpha > 2.0 - _ALPHA_TWO_EPS:
        return math.inf
    if alpha < 1.0 + _ALPHA_ONE_EPS:
        return max(16.0, 16.0 * profile.l2 / profile.linf)
    a_star = alpha / (alpha - 1.0)
    log_val = (
        math.log(32.0)
        + (alpha - 1.0) / (2.0 - alpha) * (math.log(8.0 * a_star) - a_star * math.log(2.0))
        + alpha / (2.0 - alpha) * (math.log(profile.l2) - profile.log_norm(a_star))
    )
    if log_val > _LOG_MAX:
        return math.inf
    return max(16.0, math.exp(log_val))


def _light_tail_exponent(alpha: float, g_star: float, gamma: float):
    """min[gamma^2, g*^{2-alpha} gamma^alpha] and which term is active; ties go to quadratic."""
    quad = gamma * gamma
    if gamma == 0.0:
        return 0.0, Regime.quadratic
    if math.isinf(g_star):
        return quad, Regime.quadratic
    log_tail = (2.0 - alpha) * math.log(g_star) + alpha * math.log(gamma)
    if log_tail > _LOG_MAX or quad <= math.exp(log_tail):
        return quad, Regime.quadratic
    return math.exp(log_tail), Regime.alpha_tail


def _light_tail_bound(alpha: float, g_star: float, gamma: float):
    m, regime = _light_tail_exponent(alpha, g_star, gamma)
    return min(1.0, 2.0 * math.exp(-m / 64.0)), regime


def _threshold(query: TailQuery) -> float:
    k, g, l2 = query.kappa, query.gamma, query.profile.l2
    family, item = query.variant.family, query.variant.item
    if family == "regular":
        lead = math.sqrt(2.0 * math.e * k) if item == "i" else math.sqrt(2.0 * k)
        return (lead + math.sqrt(2.0) * g) * l2
    if family == "smooth":
        lead = math.sqrt(math.e * k) if item == "i" else math.sqrt(k)
        return (lead + g) * l2
    # scalar bounds are centered: the mean part is zero for a martingale
    return g * l2


def validate_variant(query: TailQuery) -> None:
    item = query.variant.item
    if item in ("ii", "iii") and abs(query.alpha - 2.0) > 1e-12:
        raise InputError(f"variant {query.variant.value} needs alpha = 2, got {query.alpha}")
    if item == "iii" and not query.bounded:
        raise InputError(f"variant {query.variant.value} needs almost surely bounded increments")


def _bound_for(query: TailQuery, gamma: float):
    item = query.variant.item
    if item == "i":
        return _light_tail_bound(query.alpha, gamma_star(query.alpha, query.profile), gamma)
    if item == "ii":
        return min(1.0, math.exp(-gamma * gamma / 3.0)), Regime.not_applicable
    return min(1.0, math.exp(-gamma * gamma / 2.0)), Regime.not_applicable


def tail_bound(query: TailQuery) -> TailResult:
    validate_variant(query)
    bound, regime = _bound_for(query, query.gamma)
    return TailResult(
        threshold=_threshold(query),
        prob_bound=bound,
        gamma_star=gamma_star(query.alpha, query.profile),
        regime=regime,
    )


def scalar_threshold(mu: Sequence[float], nu: Sequence[float], gamma: float) -> float:
    mu_arr, nu_arr = _scalar_inputs(mu, nu)
    return float(np.sum(mu_arr) + gamma * np.linalg.norm(nu_arr))


def _scalar_inputs(mu: Sequence[float], nu: Sequence[float]):
    mu_arr = np.asarray(mu, dtype=float).reshape(-1)
    nu_arr = np.asarray(nu, dtype=float).reshape(-1)
    if mu_arr.size != nu_arr.size:
        raise InputError(f"mu and nu lengths differ: {mu_arr.size} vs {nu_arr.size}")
    if nu_arr.size == 0 or np.any(nu_arr <= 0) or not np.all(np.isfinite(nu_arr)):
        raise InputError("nu entries must be positive finite reals")
    return mu_arr, nu_arr


def scalar_bound(alpha: float, mu: Sequence[float], nu: Sequence[float], gamma: float, variant: str = "general") -> float:
    """P{sum psi_i > sum mu_i + gamma ||nu||_2} for a scalar sequence with conditional means <= mu_i."""
    _, nu_arr = _scalar_inputs(mu, nu)
    if gamma < 0:
        raise InputError(f"gamma must be nonnegative, got {gamma}")
    if variant == "general":
        alpha = check_alpha(alpha)
        return _light_tail_bound(alpha, gamma_star(alpha, SigmaProfile(nu_arr)), gamma)[0]
    if variant == "subgauss":
        return min(1.0, math.exp(-gamma * gamma / 3.0))
    if variant == "bounded":
        return min(1.0, math.exp(-gamma * gamma / 2.0))
    raise InputError(f"unknown scalar variant: {variant}")


def invert_gamma(target_eps: float, query: TailQuery) -> float:
    """Smallest gamma whose tail bound is <= target_eps (query.gamma is ignored)."""
    if not (0.0 < target_eps):
        raise InputError(f"target probability must be positive, got {target_eps}")
    validate_variant(query)
    if target_eps >= _bound_for(query, 0.0)[0]:
        return 0.0
    item = query.variant.item
    if item == "ii":
        return math.sqrt(3.0 * math.log(1.0 / target_eps))
    if item == "iii":
        return math.sqrt(2.0 * math.log(1.0 / target_eps))

    alpha = query.alpha
    g_star = gamma_star(alpha, query.profile)
    target = 64.0 * math.log(2.0 / target_eps)
    # min of two increasing terms reaches the target once both do
    hi = math.sqrt(target)
    if not math.isinf(g_star):
        hi = max(hi, (target / g_star ** (2.0 - alpha)) ** (1.0 / alpha))
    try:
        return brentq(
            lambda g: _light_tail_exponent(alpha, g_star, g)[0] - target,
            0.0,
            2.0 * hi + 1.0,
            xtol=settings.BISECTION_TOL,
            rtol=4 * np.finfo(float).eps,
        )
    except (RuntimeError, ValueError) as exc:
        raise NumericError(f"gamma inversion did not converge for eps={target_eps:g}: {exc}") from exc


def mgf_envelope(variant: str, alpha: float, nu: float, mean_bound: float, t: float) -> float:
    """Upper bound on ln E exp{t psi}."""
    if t < 0:
        raise InputError(f"t must be nonnegative, got {t}")
    if not nu > 0:
        raise InputError(f"nu must be positive, got {nu}")
    if t == 0:
        return 0.0
    tn = t * nu
    if variant == "subgauss":
        return t * mean_bound + 0.75 * tn * tn
    if variant == "bounded":
        # Azuma step, with the t^2 on the quadratic term
        return t * mean_bound + 0.5 * tn * tn
    if variant != "light_tail":
        raise InputError(f"unknown envelope variant: {variant}")
    alpha = check_alpha(alpha)
    base = t * mean_bound + 8.0 * tn * tn
    if alpha < 1.0 + _ALPHA_ONE_EPS:
        # (2 t nu)^{a*} / a* with a* -> inf
        return base if 2.0 * tn <= 1.0 else math.inf
    a_star = alpha / (alpha - 1.0)
    log_term = a_star * math.log(2.0 * tn) - math.log(a_star)
    if log_term > _LOG_MAX:
        return math.inf
    return base + math.exp(log_term)


def chernoff_bound(variant: str, alpha: float, mu: Sequence[float], nu: Sequence[float], gamma: float) -> float:
    """min over t > 0 of exp{sum envelope_i(t) - t (sum mu + gamma ||nu||_2)}."""
    mu_arr, nu_arr = _scalar_inputs(mu, nu)
    level = float(np.sum(mu_arr) + gamma * np.linalg.norm(nu_arr))

    def objective(t: float) -> float:
        total = sum(mgf_envelope(variant, alpha, float(v), float(m), t) for m, v in zip(mu_arr, nu_arr))
        val = total - t * level
        return min(val, 1e300)

    t_hi = max(1.0, 10.0 * gamma) / float(np.linalg.norm(nu_arr))
    res = minimize_scalar(objective, bounds=(0.0, t_hi), method="bounded", options={"xatol": 1e-12})
    best = min(float(res.fun), 0.0)
    return min(1.0, math.exp(best))


def second_moment_bound(kappa: float, profile: Union[SigmaProfile, Sequence[float]]) -> float:
    return kappa * _as_profile(profile).sum_sq


def huber_threshold(beta: float, kappa: float, profile: Union[SigmaProfile, Sequence[float]], gamma: float) -> float:
    """beta/2 + kappa e sum sigma^2 / (2 beta) + gamma ||sigma||_2."""
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta}")
    profile = _as_profile(profile)
    return beta / 2.0 + kappa * math.e * profile.sum_sq / (2.0 * beta) + gamma * profile.l2


def optimal_beta(kappa: float, profile: Union[SigmaProfile, Sequence[float]]) -> float:
    return math.sqrt(math.e * kappa) * _as_profile(profile).l2


def tail_query(
    variant: Union[str, TailVariant],
    kappa: float,
    profile: Union[SigmaProfile, Sequence[float]],
    gamma: float = 0.0,
    alpha: float = 2.0,
) -> TailQuery:
    """TailQuery with the boundedness flag implied by the variant."""
    variant = TailVariant(variant)
    return TailQuery(
        alpha=alpha,
        gamma=gamma,
        kappa=kappa,
        profile=_as_profile(profile),
        variant=variant,
        bounded=variant.item == "iii",
    )
