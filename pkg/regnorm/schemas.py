from __future__ import annotations

from typing import Generic, List, Literal, Optional, TypeVar

from pydantic import BaseModel, Field

from .textio import render_space, round_sig
from .types import (
    CharCheckReport,
    HuberCheckReport,
    RegularityCertificate,
    SimReport,
    SmoothnessReport,
    SpaceDescriptor,
    TailQuery,
    TailResult,
    TraceCheckReport,
)

T = TypeVar("T")

RegimeName = Literal["quadratic", "alpha_tail", "not_applicable"]


class ApiError(BaseModel):
    message: str
    code: Optional[str] = None


class ApiResponse(BaseModel, Generic[T]):
    ok: bool = Field(..., description="Indicates success")
    data: Optional[T] = None
    error: Optional[ApiError] = None


class CertificateOut(BaseModel):
    space: str
    kappa: float
    kappa_plus: float
    rho_opt: float
    source: str
    display_bound: Optional[float] = None


class GammaStarOut(BaseModel):
    alpha: float
    N: int
    # null means +inf
    gamma_star: Optional[float] = None


class TailOut(BaseModel):
    variant: str
    alpha: float
    gamma: float
    kappa: float
    N: int
    threshold: float
    bound: float
    gamma_star: Optional[float] = None
    regime: RegimeName


class InvertOut(BaseModel):
    variant: str
    alpha: float
    kappa: float
    N: int
    eps: float
    gamma: float
    threshold: float


class SmoothnessOut(BaseModel):
    space: str
    trials: int
    seed: int
    worst_violation_ratio: float
    empirical_kappa: float
    claimed_kappa: float
    sandwich_min: float
    sandwich_max: float
    sandwich_bound: float
    passed: bool


class CharCheckOut(BaseModel):
    space: str
    kappa: float
    trials: int
    seed: int
    worst_monotone_ratio: float
    worst_lipschitz_ratio: float
    worst_dual_ratio: Optional[float] = None
    witness_ratio: Optional[float] = None
    witness_x: Optional[List[float]] = None
    witness_y: Optional[List[float]] = None
    passed: bool


class TraceCheckOut(BaseModel):
    function: str
    n: int
    samples: int
    seed: int
    max_rel_error: float
    bounds_hold: bool
    passed: bool


class HuberCheckOut(BaseModel):
    space: str
    beta: float
    samples: int
    seed: int
    worst_lipschitz_excess: float
    worst_legendre_excess: float
    worst_grad_dual: Optional[float] = None
    passed: bool


class SimRowOut(BaseModel):
    gamma: float
    threshold: float
    hits: int
    trials: int
    freq: float
    freq_upper_conf: float
    bound: float
    regime: RegimeName


class SimReportOut(BaseModel):
    scheme: str
    space: str
    variant: str
    N: int
    trials: int
    seed: int
    kappa: float
    mean_sq_norm: float
    mean_sq_norm_stderr: float
    second_moment_bound: float
    l1_min: float
    l1_max: float
    certified: bool
    rows: List[SimRowOut]


def ok(data: BaseModel) -> ApiResponse:
    return ApiResponse(ok=True, data=data)


def fail(message: str, code: Optional[str] = None) -> ApiResponse:
    return ApiResponse(ok=False, error=ApiError(message=message, code=code))


# ---------------------------------------------------------------------------
# builders; every float passes through round_sig so output is stable
# ---------------------------------------------------------------------------


def certificate_out(space: SpaceDescriptor, cert: RegularityCertificate, display: Optional[float]) -> CertificateOut:
    return CertificateOut(
        space=render_space(space),
        kappa=round_sig(cert.kappa),
        kappa_plus=round_sig(cert.kappa_plus),
        rho_opt=round_sig(cert.smooth_exponent_rho),
        source=cert.source,
        display_bound=round_sig(display) if display is not None else None,
    )


def tail_out(query: TailQuery, result: TailResult) -> TailOut:
    return TailOut(
        variant=query.variant.value,
        alpha=round_sig(query.alpha),
        gamma=round_sig(query.gamma),
        kappa=round_sig(query.kappa),
        N=len(query.profile),
        threshold=round_sig(result.threshold),
        bound=round_sig(result.prob_bound),
        gamma_star=round_sig(result.gamma_star),
        regime=result.regime.value,
    )


def smoothness_out(space: SpaceDescriptor, report: SmoothnessReport) -> SmoothnessOut:
    return SmoothnessOut(
        space=render_space(space),
        trials=report.trials,
        seed=report.seed,
        worst_violation_ratio=round_sig(report.worst_violation_ratio),
        empirical_kappa=round_sig(report.empirical_kappa),
        claimed_kappa=round_sig(report.claimed_kappa),
        sandwich_min=round_sig(report.sandwich_min),
        sandwich_max=round_sig(report.sandwich_max),
        sandwich_bound=round_sig(report.sandwich_bound),
        passed=report.passed,
    )


def char_check_out(space: SpaceDescriptor, report: CharCheckReport) -> CharCheckOut:
    w = report.witness
    return CharCheckOut(
        space=render_space(space),
        kappa=round_sig(report.kappa),
        trials=report.trials,
        seed=report.seed,
        worst_monotone_ratio=round_sig(report.worst_monotone_ratio),
        worst_lipschitz_ratio=round_sig(report.worst_lipschitz_ratio),
        worst_dual_ratio=round_sig(report.worst_dual_ratio) if report.worst_dual_ratio is not None else None,
        witness_ratio=round_sig(w.ratio) if w else None,
        witness_x=[round_sig(float(v)) for v in w.x] if w else None,
        witness_y=[round_sig(float(v)) for v in w.y] if w else None,
        passed=report.passed,
    )


def trace_check_out(report: TraceCheckReport) -> TraceCheckOut:
    return TraceCheckOut(
        function=report.function,
        n=report.n,
        samples=report.samples,
        seed=report.seed,
        max_rel_error=round_sig(report.max_rel_error),
        bounds_hold=report.bounds_hold,
        passed=report.passed,
    )


def huber_check_out(space: SpaceDescriptor, report: HuberCheckReport) -> HuberCheckOut:
    return HuberCheckOut(
        space=render_space(space),
        beta=round_sig(report.beta),
        samples=report.samples,
        seed=report.seed,
        worst_lipschitz_excess=round_sig(report.worst_lipschitz_excess),
        worst_legendre_excess=round_sig(report.worst_legendre_excess),
        worst_grad_dual=round_sig(report.worst_grad_dual) if report.worst_grad_dual is not None else None,
        passed=report.passed,
    )


def sim_report_out(scheme: str, space: SpaceDescriptor, variant: str, N: int, trials: int, report: SimReport) -> SimReportOut:
    return SimReportOut(
        scheme=scheme,
        space=render_space(space),
        variant=variant,
        N=N,
        trials=trials,
        seed=report.seed,
        kappa=round_sig(report.kappa),
        mean_sq_norm=round_sig(report.mean_sq_norm),
        mean_sq_norm_stderr=round_sig(report.mean_sq_norm_stderr),
        second_moment_bound=round_sig(report.second_moment_bound),
        l1_min=round_sig(report.l1_min),
        l1_max=round_sig(report.l1_max),
        certified=report.certified,
        rows=[
            SimRowOut(
                gamma=round_sig(r.gamma),
                threshold=round_sig(r.threshold),
                hits=r.hits,
                trials=r.trials,
                freq=round_sig(r.freq),
                freq_upper_conf=round_sig(r.freq_upper_conf),
                bound=round_sig(r.analytic_bound),
                regime=r.regime.value,
            )
            for r in report.rows
        ],
    )
