"""Plain-text formats: space descriptors, schemes, sigma profiles, points, trace functions."""
from __future__ import annotations

import math
import os
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import norm_core as nc
from .errors import InputError
from .settings import settings
from .smoothness import TraceFunction
from .types import (
    BlockLp,
    BoundedSphere,
    Euclidean,
    FixedDirectionRademacher,
    GaussianIso,
    Lp,
    RademacherBasis,
    Schatten,
    Scheme,
    SigmaProfile,
    SpaceDescriptor,
    SumOfNorms,
)


def fmt(value: Optional[float], digits: Optional[int] = None) -> str:
    if value is None:
        return "inf"
    digits = digits or settings.OUTPUT_DIGITS
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}g}"


def round_sig(value: Optional[float], digits: Optional[int] = None) -> Optional[float]:
    """Round to significant digits; +inf maps to None for structured output."""
    if value is None or math.isinf(value):
        return None
    if value == 0 or math.isnan(value):
        return float(value)
    return float(fmt(value, digits))


def _number(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise InputError(f"not a number: {text!r}") from None


def _integer(text: str) -> int:
    value = _number(text)
    if not math.isfinite(value) or value != int(value):
        raise InputError(f"not an integer: {text!r}")
    return int(value)


def _params(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    if not text:
        return out
    for part in _split_top(text, ","):
        key, sep, value = part.partition("=")
        if not sep or not key.strip():
            raise InputError(f"expected key=value, got {part!r}")
        value = value.strip()
        # {...} quotes a nested descriptor that may itself hold commas
        if value.startswith("{") and value.endswith("}"):
            value = value[1:-1].strip()
        out[key.strip().lower()] = value
    return out


def _require(params: Dict[str, str], allowed: Tuple[str, ...], required: Tuple[str, ...], what: str) -> None:
    unknown = set(params) - set(allowed)
    if unknown:
        raise InputError(f"unknown {what} parameter(s): {', '.join(sorted(unknown))}")
    missing = [k for k in required if k not in params]
    if missing:
        raise InputError(f"{what} is missing: {', '.join(missing)}")


def _split_top(text: str, sep: str = ";") -> List[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise InputError(f"unbalanced braces in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise InputError(f"unbalanced braces in {text!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts]


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


def parse_space(text: str) -> SpaceDescriptor:
    text = text.strip()
    if not text:
        raise InputError("empty space descriptor")
    if text.endswith("}"):
        head, sep, body = text.partition("{")
        if not sep:
            raise InputError(f"bad space descriptor: {text!r}")
        children = tuple(parse_space(c) for c in _split_top(body[:-1]))
        kind, _, rest = head.partition(":")
        kind = kind.strip().lower()
        params = _params(rest)
        if kind == "block":
            _require(params, ("p",), ("p",), "block")
            return BlockLp(children, _number(params["p"]))
        if kind == "sum":
            _require(params, (), (), "sum")
            return SumOfNorms(children)
        raise InputError(f"unknown composite space: {kind!r}")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    params = _params(rest)
    if kind == "euclidean":
        _require(params, ("n",), ("n",), "euclidean")
        return Euclidean(_integer(params["n"]))
    if kind == "lp":
        _require(params, ("n", "p"), ("n", "p"), "lp")
        return Lp(_integer(params["n"]), _number(params["p"]))
    if kind == "schatten":
        _require(params, ("m", "n", "p"), ("m", "n", "p"), "schatten")
        return Schatten(_integer(params["m"]), _integer(params["n"]), _number(params["p"]))
    raise InputError(f"unknown space kind: {kind!r}")


def _exact(value: float) -> str:
    """Shortest text that parses back to the same float."""
    if math.isinf(value):
        return "inf"
    short = f"{value:g}"
    return short if float(short) == value else repr(float(value))


def render_space(space: SpaceDescriptor) -> str:
    if isinstance(space, Euclidean):
        return f"euclidean:n={space.n}"
    if isinstance(space, Lp):
        return f"lp:n={space.n},p={_exact(space.p)}"
    if isinstance(space, Schatten):
        return f"schatten:m={space.m},n={space.n},p={_exact(space.p)}"
    inner = ";".join(render_space(c) for c in space.children)
    if isinstance(space, BlockLp):
        return f"block:p={_exact(space.p)}{{{inner}}}"
    return f"sum{{{inner}}}"


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------


def _direction(space: SpaceDescriptor, text: str) -> np.ndarray:
    d = nc.dimension(space)
    text = text.strip().lower()
    if text.startswith("[") and text.endswith("]"):
        flat = np.array([_number(v) for v in text[1:-1].split()], dtype=float)
        if flat.size != d:
            raise InputError(f"direction has {flat.size} coordinates, space has {d}")
        point = nc.unflatten_point(space, flat)
        length = float(nc.norm(space, point))
        if abs(length - 1.0) > 1e-9:
            raise InputError(f"explicit direction must have unit norm, got {length:.12g}")
        return point
    if text == "ones":
        flat = np.ones(d)
    elif text.startswith("e"):
        k = _integer(text[1:])
        if not 1 <= k <= d:
            raise InputError(f"basis direction {text} outside 1..{d}")
        flat = np.zeros(d)
        flat[k - 1] = 1.0
    else:
        raise InputError(f"direction must be e<k>, ones or [v1 v2 ...], got {text!r}")
    point = nc.unflatten_point(space, flat)
    return nc.scale_point(space, point, 1.0 / float(nc.norm(space, point)))


def parse_scheme(text: str, space: Optional[SpaceDescriptor] = None) -> Scheme:
    """Scheme text.

    fixed-direction and bounded-sphere live in a space: ``space={...}`` in the text wins,
    then the ``space`` argument, then euclidean:n=1.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    params = _params(rest)
    if kind == "rademacher-basis":
        _require(params, ("n",), ("n",), kind)
        return RademacherBasis(_integer(params["n"]))
    if kind == "gaussian-iso":
        _require(params, ("n",), ("n",), kind)
        return GaussianIso(_integer(params["n"]))
    if "space" in params:
        space = parse_space(params["space"])
    space = space or Euclidean(1)
    if kind == "fixed-direction":
        _require(params, ("sigma", "direction", "space"), (), kind)
        return FixedDirectionRademacher(
            space, _direction(space, params.get("direction", "e1")), _number(params.get("sigma", "1"))
        )
    if kind == "bounded-sphere":
        _require(params, ("sigma", "space"), (), kind)
        return BoundedSphere(space, nc.dimension(space), _number(params.get("sigma", "1")))
    raise InputError(f"unknown scheme kind: {kind!r}")


def render_scheme(scheme: Scheme) -> str:
    """Inverse of parse_scheme for the built-in schemes; custom ones render as their name."""
    if isinstance(scheme, RademacherBasis):
        return f"rademacher-basis:n={scheme.n}"
    if isinstance(scheme, GaussianIso):
        return f"gaussian-iso:n={scheme.n}"
    if isinstance(scheme, FixedDirectionRademacher):
        flat = nc.flatten_point(scheme.space, scheme.direction)
        coords = " ".join(_exact(float(v)) for v in flat)
        return (
            f"fixed-direction:sigma={_exact(scheme.sigma)},"
            f"space={{{render_space(scheme.space)}}},direction=[{coords}]"
        )
    if isinstance(scheme, BoundedSphere):
        return f"bounded-sphere:sigma={_exact(scheme.sigma)},space={{{render_space(scheme.space)}}}"
    return scheme.name


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


def parse_profile(text: str) -> SigmaProfile:
    """``const:<v>x<N>`` or ``file:<path>`` with one positive decimal per line."""
    kind, sep, rest = text.strip().partition(":")
    if not sep:
        raise InputError(f"sigma profile must be const:<v>x<N> or file:<path>, got {text!r}")
    kind = kind.lower()
    if kind == "const":
        value, sep, count = rest.rpartition("x")
        if not sep or not value:
            raise InputError(f"expected const:<v>x<N>, got {text!r}")
        return SigmaProfile.constant(_number(value), _integer(count))
    if kind == "file":
        if not os.path.isfile(rest):
            raise InputError(f"sigma profile file not found: {rest}")
        with open(rest, "r", encoding="utf-8") as fh:
            values = [_number(line) for line in fh if line.strip()]
        return SigmaProfile(values)
    raise InputError(f"unknown sigma profile kind: {kind!r}")


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


def render_point(space: SpaceDescriptor, x) -> str:
    """Vectors as one whitespace-separated line; matrices with an ``m n`` header line."""
    if isinstance(space, Schatten):
        X = np.asarray(x, dtype=float).reshape(space.m, space.n)
        rows = [" ".join(fmt(v) for v in row) for row in X]
        return "\n".join([f"{space.m} {space.n}"] + rows)
    flat = nc.flatten_point(space, x)
    return " ".join(fmt(v) for v in flat)


def parse_point(space: SpaceDescriptor, text: str):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if isinstance(space, Schatten):
        if not lines:
            raise InputError("empty matrix text")
        header = lines[0].split()
        if len(header) != 2 or (_integer(header[0]), _integer(header[1])) != (space.m, space.n):
            raise InputError(f"matrix header must read '{space.m} {space.n}', got {lines[0]!r}")
        values = [_number(tok) for ln in lines[1:] for tok in ln.split()]
        if len(values) != space.m * space.n:
            raise InputError(f"expected {space.m * space.n} matrix entries, got {len(values)}")
        return np.asarray(values).reshape(space.m, space.n)
    values = [_number(tok) for ln in lines for tok in ln.split()]
    return nc.unflatten_point(space, np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# trace functions
# ---------------------------------------------------------------------------


def parse_function(text: str, **constants) -> TraceFunction:
    """``cube``, ``quartic``, ``exp`` or ``poly:c0,c1,...`` (poly needs explicit constants)."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    delta = constants.pop("delta", (-math.inf, math.inf))
    if kind == "cube":
        return TraceFunction.cube(delta)
    if kind == "quartic":
        return TraceFunction.quartic(delta)
    if kind == "exp":
        return TraceFunction.exponential(delta)
    if kind == "poly":
        coeffs = [_number(c) for c in rest.split(",") if c.strip()]
        if not coeffs:
            raise InputError("poly needs at least one coefficient")
        return TraceFunction.polynomial(coeffs, delta=delta, **constants)
    raise InputError(f"unknown trace function: {kind!r}")
