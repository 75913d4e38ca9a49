"""Regular norms, martingale large-deviation bounds and their Monte Carlo checks."""
from __future__ import annotations

from .deviation_bounds import gamma_star, invert_gamma, second_moment_bound, tail_bound
from .errors import RegnormError
from .norm_core import dual_norm, grad_sq_norm, norm
from .smoothness import kappa_space
from .types import BlockLp, Euclidean, Lp, Schatten, SigmaProfile, SumOfNorms, TailQuery, TailVariant

__all__ = [
    "BlockLp",
    "Euclidean",
    "Lp",
    "RegnormError",
    "Schatten",
    "SigmaProfile",
    "SumOfNorms",
    "TailQuery",
    "TailVariant",
    "dual_norm",
    "gamma_star",
    "grad_sq_norm",
    "invert_gamma",
    "kappa_space",
    "norm",
    "second_moment_bound",
    "tail_bound",
]
