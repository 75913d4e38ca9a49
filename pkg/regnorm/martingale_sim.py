"""Seeded Monte Carlo validation of the martingale tail bounds.

Randomness is drawn from counter-based Philox substreams keyed by
(seed, block, step). A block is a fixed run of ``SIM_BLOCK_SIZE`` trials, so the
report depends on the block size but never on how many worker threads run.
"""
from __future__ import annotations

import logging
import math
import time
from typing import List, Optional

import numpy as np
from scipy.stats import beta as beta_dist

from . import norm_core as nc
from .deviation_bounds import second_moment_bound, tail_bound
from .errors import ConfigError, InputError
from .runner import BlockExecutor
from .settings import settings
from .smoothness import kappa_space, smooth_constant
from .types import (
    BlockLp,
    BoundedSphere,
    ConditionCertificate,
    CustomScheme,
    Euclidean,
    FixedDirectionRademacher,
    GaussianIso,
    RademacherBasis,
    Schatten,
    Scheme,
    SigmaProfile,
    SimConfig,
    SimReport,
    SimRow,
    SpaceDescriptor,
    SumOfNorms,
    TailQuery,
)

logger = logging.getLogger(__name__)


def substream(seed: int, block: int, step: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(block), int(step)))))


def scheme_dimension(scheme: Scheme) -> int:
    if isinstance(scheme, (RademacherBasis, GaussianIso)):
        return scheme.n
    if isinstance(scheme, (FixedDirectionRademacher, BoundedSphere)):
        return nc.dimension(scheme.space)
    return scheme.dim


def gaussian_sigma(n: int) -> float:
    """Largest scale with E exp{|g|^2 / sigma^2} <= e for a standard normal n-vector."""
    s = -math.expm1(-2.0 / n) / 2.0
    return 1.0 / math.sqrt(s)


def _unit_direction(scheme: FixedDirectionRademacher) -> np.ndarray:
    flat = nc.flatten_point(scheme.space, scheme.direction)
    length = float(nc.norm(scheme.space, scheme.direction))
    if abs(length - 1.0) > 1e-9:
        raise InputError(f"fixed direction must have unit norm, got {length:.12g}")
    return flat


def draw_increment(scheme: Scheme, i: int, stream: np.random.Generator, size: Optional[int] = None):
    """Increment xi_i in flat coordinates, shape (size, d); a single Point when size is None."""
    count = 1 if size is None else int(size)
    d = scheme_dimension(scheme)
    if isinstance(scheme, RademacherBasis):
        if not (1 <= i <= scheme.n):
            raise InputError(f"RademacherBasis{{{scheme.n}}} is defined for steps 1..{scheme.n}, got {i}")
        out = np.zeros((count, d))
        out[:, i - 1] = 2.0 * stream.integers(0, 2, size=count) - 1.0
    elif isinstance(scheme, FixedDirectionRademacher):
        signs = 2.0 * stream.integers(0, 2, size=count) - 1.0
        out = scheme.sigma * signs[:, None] * _unit_direction(scheme)[None, :]
    elif isinstance(scheme, GaussianIso):
        out = stream.standard_normal((count, d))
    elif isinstance(scheme, BoundedSphere):
        g = stream.standard_normal((count, d))
        lengths = np.asarray(nc.norm(scheme.space, nc.unflatten_point(scheme.space, g)))
        out = scheme.sigma * g / lengths[:, None]
    else:
        out = np.asarray(scheme.sampler(i, stream, count), dtype=float).reshape(count, d)
    if size is None:
        if isinstance(scheme, (FixedDirectionRademacher, BoundedSphere)):
            return nc.unflatten_point(scheme.space, out[0])
        return out[0]
    return out


def certify_condition(scheme: Scheme, N: Optional[int] = None) -> ConditionCertificate:
    """Analytic (alpha, sigma, bounded) certificate, constant over N steps."""
    if N is None:
        N = scheme.n if isinstance(scheme, RademacherBasis) else 1
    if isinstance(scheme, RademacherBasis):
        return ConditionCertificate(2.0, SigmaProfile.constant(1.0, N), bounded=True)
    if isinstance(scheme, (FixedDirectionRademacher, BoundedSphere)):
        # |xi| <= sigma surely, so E exp{|xi|^2/sigma^2} <= e
        return ConditionCertificate(2.0, SigmaProfile.constant(scheme.sigma, N), bounded=True)
    if isinstance(scheme, GaussianIso):
        return ConditionCertificate(2.0, SigmaProfile.constant(gaussian_sigma(scheme.n), N), bounded=False)
    return ConditionCertificate(
        scheme.alpha, SigmaProfile.constant(scheme.sigma, N), bounded=scheme.bounded, certified=False
    )


def binomial_upper_ci(hits: int, trials: int, level: float) -> float:
    """Exact Clopper-Pearson upper limit."""
    if not (0 <= hits <= trials) or trials < 1:
        raise InputError(f"need 0 <= hits <= trials and trials >= 1, got {hits}/{trials}")
    if not (0.0 < level < 1.0):
        raise InputError(f"confidence level must lie in (0, 1), got {level}")
    if hits == trials:
        return 1.0
    return float(beta_dist.ppf(level, hits + 1, trials - hits))


# ---------------------------------------------------------------------------
# compatibility
# ---------------------------------------------------------------------------


def _schatten_nodes(space: SpaceDescriptor) -> List[Schatten]:
    if isinstance(space, Schatten):
        return [space]
    if isinstance(space, (BlockLp, SumOfNorms)):
        return [s for c in space.children for s in _schatten_nodes(c)]
    return []


def _variant_kappa(config: SimConfig) -> float:
    family = config.variant.family
    if family == "regular":
        return kappa_space(config.space).kappa
    if family == "smooth":
        return smooth_constant(config.space)
    raise ConfigError(f"variant {config.variant.value} is a scalar bound; simulations compare vector bounds")


def check_compatible(config: SimConfig, cert: ConditionCertificate) -> None:
    scheme, space = config.scheme, config.space
    d = nc.dimension(space)
    if scheme_dimension(scheme) != d:
        raise ConfigError(f"scheme dimension {scheme_dimension(scheme)} does not match space dimension {d}")
    if isinstance(scheme, (FixedDirectionRademacher, BoundedSphere)) and scheme.space != space:
        raise ConfigError("scheme certificate is stated in its own space; simulate in that space")
    if isinstance(scheme, RademacherBasis) and config.N > scheme.n:
        raise ConfigError(f"RademacherBasis{{{scheme.n}}} supports N <= {scheme.n}, got {config.N}")
    if isinstance(scheme, GaussianIso) and not nc.euclidean_dominated(space):
        raise ConfigError("Gaussian certificate transfers only to spaces with ||x|| <= ||x||_2")
    edge = settings.MAX_SCHATTEN_SIM_EDGE
    for node in _schatten_nodes(space):
        if max(node.m, node.n) > edge:
            raise ConfigError(f"Schatten simulation is limited to {edge}x{edge} matrices")
    item = config.variant.item
    if item == "iii" and not cert.bounded:
        raise ConfigError(f"variant {config.variant.value} needs a bounded scheme")
    if item == "ii" and cert.alpha != 2.0:
        raise ConfigError(f"variant {config.variant.value} needs alpha = 2, scheme has {cert.alpha}")


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _block_sizes(trials: int, block: int) -> List[int]:
    full, rest = divmod(trials, block)
    return [block] * full + ([rest] if rest else [])


def _simulate_block(config: SimConfig, block: int, size: int):
    d = nc.dimension(config.space)
    S = np.zeros((size, d))
    for step in range(1, config.N + 1):
        S += draw_increment(config.scheme, step, substream(config.seed, block, step), size)
    norms = np.asarray(nc.norm(config.space, nc.unflatten_point(config.space, S)), dtype=float)
    l1 = np.sum(np.abs(S), axis=-1)
    return norms, l1


def run(config: SimConfig, workers: Optional[int] = None) -> SimReport:
    cert = certify_condition(config.scheme, config.N)
    check_compatible(config, cert)
    kappa = _variant_kappa(config)
    profile = cert.profile

    results = []
    for gamma in config.gammas:
        query = TailQuery(
            alpha=cert.alpha, gamma=gamma, kappa=kappa, profile=profile,
            variant=config.variant, bounded=cert.bounded,
        )
        results.append(tail_bound(query))

    sizes = _block_sizes(config.trials, settings.SIM_BLOCK_SIZE)
    executor = BlockExecutor(workers)
    started = time.perf_counter()
    parts = executor.run(lambda b: _simulate_block(config, b, sizes[b]), range(len(sizes)))
    elapsed = time.perf_counter() - started

    norms = np.concatenate([p[0] for p in parts])
    l1 = np.concatenate([p[1] for p in parts])
    sq = norms**2
    mean_sq = float(np.mean(sq))
    stderr = float(np.std(sq, ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else 0.0

    rows = []
    level = settings.CONFIDENCE_LEVEL
    for gamma, res in zip(config.gammas, results):
        hits = int(np.count_nonzero(norms >= res.threshold))
        rows.append(
            SimRow(
                gamma=gamma,
                threshold=res.threshold,
                hits=hits,
                trials=config.trials,
                freq=hits / config.trials,
                freq_upper_conf=binomial_upper_ci(hits, config.trials, level),
                analytic_bound=res.prob_bound,
                regime=res.regime,
            )
        )
        if res.prob_bound < rows[-1].freq_upper_conf:
            logger.warning(
                "[sim] gamma=%g: upper confidence %.6g above analytic bound %.6g",
                gamma, rows[-1].freq_upper_conf, res.prob_bound,
            )

    logger.info(
        "[sim] %d trials x %d steps in %d blocks on %d workers: %.3fs",
        config.trials, config.N, len(sizes), executor.workers, elapsed,
    )
    if not cert.certified:
        logger.warning("[sim] scheme %s declares its own (alpha, sigma); report is uncertified", getattr(config.scheme, "name", "custom"))
    return SimReport(
        rows=rows,
        mean_sq_norm=mean_sq,
        mean_sq_norm_stderr=stderr,
        second_moment_bound=second_moment_bound(kappa_space(config.space).kappa, profile),
        kappa=kappa,
        l1_min=float(np.min(l1)),
        l1_max=float(np.max(l1)),
        seed=config.seed,
        certified=cert.certified,
        elapsed=elapsed,
    )


def l1_path(n: int, k_max: Optional[int] = None, seed: int = 0) -> List[float]:
    """||S_k||_1 for k = 1..k_max along one RademacherBasis{n} path."""
    k_max = n if k_max is None else k_max
    scheme = RademacherBasis(n)
    S = np.zeros(n)
    out = []
    for k in range(1, k_max + 1):
        S += draw_increment(scheme, k, substream(seed, 0, k))
        out.append(float(np.sum(np.abs(S))))
    return out


def default_space(scheme: Scheme) -> SpaceDescriptor:
    if isinstance(scheme, (FixedDirectionRademacher, BoundedSphere)):
        return scheme.space
    return Euclidean(scheme_dimension(scheme))
