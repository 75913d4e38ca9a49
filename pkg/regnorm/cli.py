"""
regnorm 命令行工具

用法示例：
  # regularity constant of a space
  python regnorm_cli.py kappa --space lp:n=10,p=inf

  # tail bound for a sigma profile
  python regnorm_cli.py bound --variant regular_ii --kappa 1 --sigma const:1x4 --gamma 3

  # Monte Carlo check of the bounds
  python regnorm_cli.py simulate --scheme rademacher-basis:n=100 --N 100 --trials 10 --gammas 0

说明：
  - 标准输出只写结果（table / csv / structured），日志写到标准错误。
  - exit 0 成功；2 参数或配置错误；3 数值计算失败。
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from . import deviation_bounds as db
from . import martingale_sim as ms
from . import smoothness as sm
from . import schemas
from .errors import InputError, NumericError, RegnormError
from .settings import settings
from .textio import fmt, parse_function, parse_profile, parse_scheme, parse_space, render_scheme
from .types import HuberParams, RademacherBasis, SimConfig, TailVariant

logger = logging.getLogger("regnorm")

SIM_CSV_COLUMNS = ["gamma", "threshold", "hits", "trials", "freq", "freq_upper_conf", "bound", "regime"]


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "inf"
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, list):
        return " ".join(_cell(v) for v in value)
    return str(value)


def render_table(model: BaseModel) -> str:
    data = model.model_dump()
    rows = data.pop("rows", None)
    lines = [f"{k}={_cell(v)}" for k, v in data.items()]
    if rows is not None:
        lines.append("")
        widths = [max(len(c), 14) for c in SIM_CSV_COLUMNS]
        lines.append("  ".join(f"{c:>{w}}" for c, w in zip(SIM_CSV_COLUMNS, widths)))
        for row in rows:
            lines.append("  ".join(f"{_cell(row[c]):>{w}}" for c, w in zip(SIM_CSV_COLUMNS, widths)))
    return "\n".join(lines) + "\n"


def render_csv(model: BaseModel) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    data = model.model_dump()
    rows = data.pop("rows", None)
    if rows is not None:
        writer.writerow(SIM_CSV_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in SIM_CSV_COLUMNS])
    else:
        writer.writerow(list(data))
        writer.writerow([_cell(v) for v in data.values()])
    return buf.getvalue()


def render(model: BaseModel, output_format: str) -> str:
    if output_format == "structured":
        return schemas.ok(model).model_dump_json() + "\n"
    if output_format == "csv":
        return render_csv(model)
    return render_table(model)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        parent = os.path.dirname(os.path.abspath(out))
        os.makedirs(parent, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        logger.info("[cli] wrote %s", out)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands: each validates everything first, then returns a zero-arg job
# ---------------------------------------------------------------------------


def _gammas(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"gammas must be a comma-separated list of reals, got {text!r}") from None
    if not values:
        raise InputError("at least one gamma is required")
    return values


def _variant(text: str) -> TailVariant:
    try:
        return TailVariant(text)
    except ValueError:
        raise InputError(f"unknown variant {text!r}; choose from {', '.join(v.value for v in TailVariant)}") from None


def cmd_kappa(args: argparse.Namespace) -> Callable[[], BaseModel]:
    space = parse_space(args.space)

    def job() -> BaseModel:
        return schemas.certificate_out(space, sm.kappa_space(space), sm.display_bound(space))

    return job


def cmd_gamma_star(args: argparse.Namespace) -> Callable[[], BaseModel]:
    profile = parse_profile(args.sigma)
    alpha = db.check_alpha(args.alpha)

    def job() -> BaseModel:
        value = db.gamma_star(alpha, profile)
        return schemas.GammaStarOut(alpha=alpha, N=len(profile), gamma_star=schemas.round_sig(value))

    return job


def cmd_bound(args: argparse.Namespace) -> Callable[[], BaseModel]:
    query = db.tail_query(_variant(args.variant), args.kappa, parse_profile(args.sigma), args.gamma, args.alpha)
    db.validate_variant(query)

    def job() -> BaseModel:
        return schemas.tail_out(query, db.tail_bound(query))

    return job


def cmd_invert(args: argparse.Namespace) -> Callable[[], BaseModel]:
    query = db.tail_query(_variant(args.variant), args.kappa, parse_profile(args.sigma), 0.0, args.alpha)
    db.validate_variant(query)
    if not (0.0 < args.eps < 1.0):
        raise InputError(f"--eps must lie in (0, 1), got {args.eps}")

    def job() -> BaseModel:
        gamma = db.invert_gamma(args.eps, query)
        query.gamma = gamma
        res = db.tail_bound(query)
        return schemas.InvertOut(
            variant=query.variant.value,
            alpha=schemas.round_sig(query.alpha),
            kappa=schemas.round_sig(query.kappa),
            N=len(query.profile),
            eps=schemas.round_sig(args.eps),
            gamma=schemas.round_sig(gamma),
            threshold=schemas.round_sig(res.threshold),
        )

    return job


def cmd_verify_smooth(args: argparse.Namespace) -> Callable[[], BaseModel]:
    space = parse_space(args.space)
    cert = sm.kappa_space(space)

    def job() -> BaseModel:
        report = sm.verify_smoothness(space, cert, trials=args.trials, seed=args.seed, embed=args.embed)
        return schemas.smoothness_out(space, report)

    return job


def cmd_char_check(args: argparse.Namespace) -> Callable[[], BaseModel]:
    space = parse_space(args.space)
    kappa = args.kappa if args.kappa is not None else sm.smooth_constant(space)

    def job() -> BaseModel:
        return schemas.char_check_out(space, sm.char_check(space, kappa, trials=args.trials, seed=args.seed))

    return job


def cmd_trace_check(args: argparse.Namespace) -> Callable[[], BaseModel]:
    constants = {}
    for name in ("theta_minus", "theta_plus", "mu_minus", "mu_plus"):
        value = getattr(args, name)
        if value is not None:
            constants[name] = value
    if args.delta:
        lo, _, hi = args.delta.partition(",")
        constants["delta"] = (float(lo), float(hi))
    explicit = [k for k in constants if k != "delta"]
    if explicit and not args.function.startswith("poly"):
        raise InputError("explicit constants are only accepted for poly:... functions")
    tf = parse_function(args.function, **constants)

    def job() -> BaseModel:
        return schemas.trace_check_out(sm.trace_check(tf, n=args.n, samples=args.samples, seed=args.seed))

    return job


def cmd_huber_check(args: argparse.Namespace) -> Callable[[], BaseModel]:
    space = parse_space(args.space)
    params = HuberParams(args.beta)

    def job() -> BaseModel:
        return schemas.huber_check_out(space, sm.huber_check(space, params, samples=args.samples, seed=args.seed))

    return job


def cmd_simulate(args: argparse.Namespace) -> Callable[[], BaseModel]:
    space = parse_space(args.space) if args.space else None
    scheme = parse_scheme(args.scheme, space)
    space = space or ms.default_space(scheme)
    cert = ms.certify_condition(scheme)
    variant = _variant(args.variant) if args.variant else (
        TailVariant.regular_iii if cert.bounded else TailVariant.regular_ii
    )
    if args.N is not None:
        N = args.N
    else:
        N = scheme.n if isinstance(scheme, RademacherBasis) else 64
    config = SimConfig(
        scheme=scheme, space=space, N=N, trials=args.trials, seed=args.seed,
        gammas=_gammas(args.gammas), variant=variant,
    )
    ms.check_compatible(config, ms.certify_condition(scheme, N))

    def job() -> BaseModel:
        report = ms.run(config, workers=args.workers)
        logger.info("[cli] simulate finished in %.3fs", report.elapsed)
        return schemas.sim_report_out(render_scheme(scheme), space, variant.value, N, config.trials, report)

    return job


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["table", "csv", "structured"], default="table")
    common.add_argument("--out", default=settings.DEFAULT_OUT, help="write the artifact here instead of stdout")
    common.add_argument("--verbose", "-v", action="count", default=0)
    return common


def _seeded() -> argparse.ArgumentParser:
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    return seeded


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regnorm", description="regular norms, martingale tail bounds and their Monte Carlo checks")
    sub = parser.add_subparsers(dest="command", required=True)
    common, seeded = _common(), _seeded()

    p = sub.add_parser("kappa", parents=[common], help="regularity certificate of a space")
    p.add_argument("--space", required=True)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("gamma-star", parents=[common], help="crossover constant gamma_*")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma", required=True, help="const:<v>x<N> or file:<path>")
    p.set_defaults(func=cmd_gamma_star)

    for name, func, help_text in (
        ("bound", cmd_bound, "tail bound at a given gamma"),
        ("invert", cmd_invert, "smallest gamma reaching a target probability"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--variant", required=True)
        p.add_argument("--kappa", type=float, required=True)
        p.add_argument("--sigma", required=True)
        p.add_argument("--alpha", type=float, default=2.0)
        if name == "bound":
            p.add_argument("--gamma", type=float, required=True)
        else:
            p.add_argument("--eps", type=float, required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("verify-smooth", parents=[common, seeded], help="sampled smoothness of the certificate surrogate")
    p.add_argument("--space", required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--embed", action="store_true", help="check Schatten spaces through the symmetric embedding")
    p.set_defaults(func=cmd_verify_smooth)

    p = sub.add_parser("char-check", parents=[common, seeded], help="sampled monotone/Lipschitz characterizations")
    p.add_argument("--space", required=True)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_char_check)

    p = sub.add_parser("trace-check", parents=[common, seeded], help="trace-function Hessian calculus")
    p.add_argument("--function", required=True, help="cube | quartic | exp | poly:c0,c1,...")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--delta", default=None, help="lo,hi")
    p.add_argument("--theta-minus", dest="theta_minus", type=float, default=None)
    p.add_argument("--theta-plus", dest="theta_plus", type=float, default=None)
    p.add_argument("--mu-minus", dest="mu_minus", type=float, default=None)
    p.add_argument("--mu-plus", dest="mu_plus", type=float, default=None)
    p.set_defaults(func=cmd_trace_check)

    p = sub.add_parser("huber-check", parents=[common, seeded], help="sampled Huber surrogate properties")
    p.add_argument("--space", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_huber_check)

    p = sub.add_parser("simulate", parents=[common, seeded], help="Monte Carlo check of the tail bounds")
    p.add_argument("--scheme", required=True)
    p.add_argument("--space", default=None)
    p.add_argument("--N", dest="N", type=int, default=None)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--gammas", default="0.5,1,2,3")
    p.add_argument("--variant", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def _configure_logging(verbose: int) -> None:
    level = settings.LOG_LEVEL.upper()
    if verbose >= 2:
        level = "DEBUG"
    elif verbose == 1:
        level = "INFO"
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s %(message)s", force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    def failure(exc: Exception, code: str, status: int) -> int:
        message = getattr(exc, "message", str(exc)).splitlines()[0] if str(exc) else type(exc).__name__
        sys.stderr.write(f"regnorm {args.command}: {code}: {message}\n")
        if args.format == "structured":
            sys.stdout.write(schemas.fail(message, code).model_dump_json() + "\n")
        return status

    try:
        job = args.func(args)
    except NumericError as exc:
        return failure(exc, exc.code, 3)
    except RegnormError as exc:
        return failure(exc, exc.code, 2)
    except ValueError as exc:
        return failure(exc, "input_error", 2)

    try:
        model = job()
    except NumericError as exc:
        return failure(exc, exc.code, 3)
    except RegnormError as exc:
        return failure(exc, exc.code, 2)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.debug("[cli] numeric failure", exc_info=True)
        return failure(exc, "numeric_failure", 3)

    _emit(render(model, args.format), args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
