from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import InputError
from .settings import settings


def _check_exponent(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 2:
        raise InputError(f"exponent p must lie in [2, inf], got {p}")
    return p


def _check_dim(name: str, value: int) -> int:
    if int(value) != value or value < 1:
        raise InputError(f"{name} must be a positive integer, got {value}")
    return int(value)


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Euclidean:
    n: int

    def __post_init__(self) -> None:
        _check_dim("n", self.n)


@dataclass(frozen=True)
class Lp:
    n: int
    p: float

    def __post_init__(self) -> None:
        _check_dim("n", self.n)
        object.__setattr__(self, "p", _check_exponent(self.p))


@dataclass(frozen=True)
class Schatten:
    m: int
    n: int
    p: float

    def __post_init__(self) -> None:
        _check_dim("m", self.m)
        _check_dim("n", self.n)
        object.__setattr__(self, "p", _check_exponent(self.p))


@dataclass(frozen=True)
class BlockLp:
    children: Tuple["SpaceDescriptor", ...]
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InputError("BlockLp needs at least one child space")
        object.__setattr__(self, "p", _check_exponent(self.p))


@dataclass(frozen=True)
class SumOfNorms:
    children: Tuple["SpaceDescriptor", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InputError("SumOfNorms needs at least one child norm")
        shapes = {point_shape(c) for c in self.children}
        if len(shapes) != 1:
            raise InputError(f"SumOfNorms children must share one ambient shape, got {sorted(shapes)}")


SpaceDescriptor = Union[Euclidean, Lp, Schatten, BlockLp, SumOfNorms]


def point_shape(space: SpaceDescriptor) -> tuple:
    """Trailing array shape of a point; BlockLp returns a tuple of child shapes."""
    if isinstance(space, (Euclidean, Lp)):
        return (space.n,)
    if isinstance(space, Schatten):
        return (space.m, space.n)
    if isinstance(space, BlockLp):
        return tuple(point_shape(c) for c in space.children)
    if isinstance(space, SumOfNorms):
        return point_shape(space.children[0])
    raise InputError(f"unknown space descriptor: {space!r}")


@dataclass(frozen=True)
class HuberParams:
    beta: float

    def __post_init__(self) -> None:
        if not (self.beta > 0) or math.isinf(self.beta):
            raise InputError(f"Huber scaling beta must be a positive finite real, got {self.beta}")


# ---------------------------------------------------------------------------
# Regularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityCertificate:
    kappa: float
    kappa_plus: float
    smooth_exponent_rho: float
    # which rule produced the certificate: lp / schatten / product / sum / euclidean / dimension
    source: str = "euclidean"

    def __post_init__(self) -> None:
        if self.kappa < 1 or not (1 <= self.kappa_plus <= self.kappa * (1 + 1e-12)):
            raise InputError(
                f"certificate needs 1 <= kappa_plus <= kappa, got kappa={self.kappa} kappa_plus={self.kappa_plus}"
            )
        if not (2 <= self.smooth_exponent_rho < math.inf):
            raise InputError(f"smooth exponent must lie in [2, inf), got {self.smooth_exponent_rho}")

    @property
    def compatibility(self) -> float:
        return self.kappa / self.kappa_plus


@dataclass
class SmoothnessReport:
    trials: int
    worst_violation_ratio: float
    claimed_kappa: float
    sandwich_min: float
    sandwich_max: float
    sandwich_bound: float
    passed: bool
    seed: int

    @property
    def empirical_kappa(self) -> float:
        return self.worst_violation_ratio


@dataclass
class Witness:
    x: np.ndarray
    y: np.ndarray
    ratio: float


@dataclass
class CharCheckReport:
    trials: int
    kappa: float
    worst_monotone_ratio: float
    worst_lipschitz_ratio: float
    worst_dual_ratio: Optional[float]
    passed: bool
    seed: int
    witness: Optional[Witness] = None


# ---------------------------------------------------------------------------
# Tail bounds
# ---------------------------------------------------------------------------


class TailVariant(str, Enum):
    regular_i = "regular_i"
    regular_ii = "regular_ii"
    regular_iii = "regular_iii"
    smooth_i = "smooth_i"
    smooth_ii = "smooth_ii"
    smooth_iii = "smooth_iii"
    scalar_i = "scalar_i"
    scalar_subgauss = "scalar_subgauss"
    scalar_bounded = "scalar_bounded"

    @property
    def family(self) -> str:
        return self.value.split("_", 1)[0]

    @property
    def item(self) -> str:
        """Which bound shape applies: i (light tail), ii (subgaussian) or iii (bounded)."""
        return {"scalar_i": "i", "scalar_subgauss": "ii", "scalar_bounded": "iii"}.get(
            self.value, self.value.split("_", 1)[1]
        )


class Regime(str, Enum):
    quadratic = "quadratic"
    alpha_tail = "alpha_tail"
    not_applicable = "not_applicable"


class SigmaProfile:
    """Positive scale sequence sigma_1..sigma_N with cached norms."""

    def __init__(self, values: Sequence[float]) -> None:
        arr = np.asarray(values, dtype=float).reshape(-1)
        if arr.size < 1:
            raise InputError("sigma profile must contain at least one value")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InputError("sigma profile entries must be positive finite reals")
        self.values = arr
        self.values.setflags(write=False)

    @classmethod
    def constant(cls, value: float, n: int) -> "SigmaProfile":
        return cls(np.full(_check_dim("N", n), float(value)))

    def __len__(self) -> int:
        return int(self.values.size)

    @cached_property
    def l2(self) -> float:
        return float(np.linalg.norm(self.values))

    @cached_property
    def linf(self) -> float:
        return float(np.max(self.values))

    @cached_property
    def sum_sq(self) -> float:
        return float(np.sum(self.values**2))

    def norm(self, q: float) -> float:
        if math.isinf(q):
            return self.linf
        if q > settings.LOGSPACE_P:
            return float(np.exp(logsumexp(q * np.log(self.values)) / q))
        return float(np.sum(self.values**q) ** (1.0 / q))

    def log_norm(self, q: float) -> float:
        if math.isinf(q):
            return math.log(self.linf)
        return float(logsumexp(q * np.log(self.values)) / q)


@dataclass
class TailQuery:
    alpha: float
    gamma: float
    kappa: float
    profile: SigmaProfile
    variant: TailVariant
    bounded: bool = False

    def __post_init__(self) -> None:
        self.variant = TailVariant(self.variant)
        if not (1 <= self.alpha <= 2):
            raise InputError(f"alpha must lie in [1, 2], got {self.alpha}")
        if not (self.gamma >= 0):
            raise InputError(f"gamma must be nonnegative, got {self.gamma}")
        if not (self.kappa >= 1):
            raise InputError(f"kappa must be >= 1, got {self.kappa}")


@dataclass(frozen=True)
class TailResult:
    threshold: float
    prob_bound: float
    gamma_star: float
    regime: Regime


# ---------------------------------------------------------------------------
# Martingale schemes and simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RademacherBasis:
    n: int

    def __post_init__(self) -> None:
        _check_dim("n", self.n)


@dataclass(frozen=True)
class FixedDirectionRademacher:
    space: SpaceDescriptor
    direction: np.ndarray = field(compare=False)
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0):
            raise InputError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class GaussianIso:
    n: int
    # only rule shipped: the largest sigma with E exp{|g|^2/sigma^2} <= e
    target_sigma_rule: str = "exp_moment"

    def __post_init__(self) -> None:
        _check_dim("n", self.n)
        if self.target_sigma_rule != "exp_moment":
            raise InputError(f"unknown sigma rule: {self.target_sigma_rule}")


@dataclass(frozen=True)
class BoundedSphere:
    space: SpaceDescriptor
    n: int
    sigma: float = 1.0

    def __post_init__(self) -> None:
        _check_dim("n", self.n)
        if not (self.sigma > 0):
            raise InputError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class CustomScheme:
    """User-supplied increments; (alpha, sigma) are declared, not derived."""

    sampler: Callable[[int, np.random.Generator, int], np.ndarray] = field(compare=False)
    dim: int
    alpha: float
    sigma: float
    bounded: bool = False
    name: str = "custom"


Scheme = Union[RademacherBasis, FixedDirectionRademacher, GaussianIso, BoundedSphere, CustomScheme]


@dataclass(frozen=True)
class ConditionCertificate:
    alpha: float
    profile: SigmaProfile
    bounded: bool
    certified: bool = True


@dataclass
class SimConfig:
    scheme: Scheme
    space: SpaceDescriptor
    N: int
    trials: int
    seed: int
    gammas: Sequence[float]
    variant: TailVariant = TailVariant.regular_ii

    def __post_init__(self) -> None:
        self.variant = TailVariant(self.variant)
        _check_dim("N", self.N)
        _check_dim("trials", self.trials)
        if any(g < 0 for g in self.gammas):
            raise InputError("gammas must be nonnegative")
        self.gammas = [float(g) for g in self.gammas]


@dataclass
class SimRow:
    gamma: float
    threshold: float
    hits: int
    trials: int
    freq: float
    freq_upper_conf: float
    analytic_bound: float
    regime: Regime


@dataclass
class SimReport:
    rows: list
    mean_sq_norm: float
    mean_sq_norm_stderr: float
    second_moment_bound: float
    kappa: float
    l1_min: float
    l1_max: float
    seed: int
    certified: bool
    elapsed: float = 0.0


@dataclass
class TraceCheckReport:
    function: str
    n: int
    samples: int
    seed: int
    max_rel_error: float
    bounds_hold: bool
    passed: bool


@dataclass
class HuberCheckReport:
    beta: float
    samples: int
    seed: int
    worst_lipschitz_excess: float
    worst_legendre_excess: float
    worst_grad_dual: Optional[float]
    passed: bool
