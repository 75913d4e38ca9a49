import os
from typing import Optional

from dotenv import load_dotenv
load_dotenv()  # 加载 .env 文件


def _float(name: str, default: str) -> float:
    return float(os.environ.get(name, default))


class Settings:
    """Centralized numeric settings with sensible desk-scale defaults.

    Values can be overridden via environment variables (or a local .env file).
    """

    # Monte Carlo concurrency. Worker count never changes results; block size does.
    SIM_WORKERS: int = int(os.environ.get("REGNORM_SIM_WORKERS", "4"))
    SIM_BLOCK_SIZE: int = int(os.environ.get("REGNORM_SIM_BLOCK_SIZE", "4096"))
    MAX_SCHATTEN_SIM_EDGE: int = int(os.environ.get("REGNORM_MAX_SCHATTEN_SIM_EDGE", "16"))
    CONFIDENCE_LEVEL: float = _float("REGNORM_CONFIDENCE_LEVEL", "0.999")
    DEFAULT_SEED: int = int(os.environ.get("REGNORM_DEFAULT_SEED", "20240101"))

    # rho search
    RHO_CAP_MIN: float = _float("REGNORM_RHO_CAP_MIN", "20")
    GOLDEN_TOL: float = _float("REGNORM_GOLDEN_TOL", "1e-12")
    GOLDEN_MAX_ITER: int = int(os.environ.get("REGNORM_GOLDEN_MAX_ITER", "200"))

    # Linear algebra tolerances
    SVD_RANK_TOL: float = _float("REGNORM_SVD_RANK_TOL", "1e-12")
    NEAR_DEGENERATE_REL: float = _float("REGNORM_NEAR_DEGENERATE_REL", "1e-8")
    LOGSPACE_P: float = _float("REGNORM_LOGSPACE_P", "50")

    # Sampled verifiers
    VIOLATION_TOL: float = _float("REGNORM_VIOLATION_TOL", "1e-7")
    TRACE_GRID_POINTS: int = int(os.environ.get("REGNORM_TRACE_GRID_POINTS", "201"))
    TRACE_GRID_SPAN: float = _float("REGNORM_TRACE_GRID_SPAN", "10")
    BLEND_DIRECTIONS: int = int(os.environ.get("REGNORM_BLEND_DIRECTIONS", "10000"))
    BLEND_MAX_DIM: int = int(os.environ.get("REGNORM_BLEND_MAX_DIM", "4"))
    BISECTION_TOL: float = _float("REGNORM_BISECTION_TOL", "1e-10")

    # Output
    OUTPUT_DIGITS: int = int(os.environ.get("REGNORM_OUTPUT_DIGITS", "12"))
    LOG_LEVEL: str = os.environ.get("REGNORM_LOG_LEVEL", "WARNING")
    # Optional default for --out; stdout when unset
    DEFAULT_OUT: Optional[str] = os.environ.get("REGNORM_DEFAULT_OUT")


settings = Settings()
