"""Norm families, their duals, gradients of squared norms and the Huber surrogate.

Every evaluator accepts leading batch axes: vectors are ``(..., n)``, matrices
``(..., m, n)`` and BlockLp points are tuples of child arrays sharing one batch
shape.  Results carry the batch shape (a 0-d result is returned as float).
"""
from __future__ import annotations

import math
from typing import Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import InputError, NonsmoothNormError, NumericError, UnsupportedError
from .settings import settings
from .types import (
    BlockLp,
    Euclidean,
    HuberParams,
    Lp,
    Schatten,
    SpaceDescriptor,
    SumOfNorms,
    point_shape,
)

Point = Union[np.ndarray, Tuple["Point", ...]]


def dual_exponent(p: float) -> float:
    if math.isinf(p):
        return 1.0
    if p == 1:
        return math.inf
    return p / (p - 1.0)


def _out(value):
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


# ---------------------------------------------------------------------------
# shape handling
# ---------------------------------------------------------------------------


def _trailing_ndim(space: SpaceDescriptor) -> int:
    if isinstance(space, Schatten):
        return 2
    if isinstance(space, SumOfNorms):
        return _trailing_ndim(space.children[0])
    return 1


def check_point(space: SpaceDescriptor, x) -> Tuple[Point, tuple]:
    """Validate ``x`` against ``space``; returns (point as float arrays, batch shape)."""
    if isinstance(space, BlockLp):
        if not isinstance(x, (tuple, list)) or len(x) != len(space.children):
            raise InputError(
                f"BlockLp point needs {len(space.children)} child blocks, got {type(x).__name__}"
            )
        parts, batches = [], set()
        for child, xi in zip(space.children, x):
            part, batch = check_point(child, xi)
            parts.append(part)
            batches.add(batch)
        if len(batches) != 1:
            raise InputError(f"BlockLp child blocks disagree on batch shape: {sorted(batches)}")
        return tuple(parts), batches.pop()
    if isinstance(x, (tuple, list)) and x and isinstance(x[0], np.ndarray):
        raise InputError(f"expected a single array for {type(space).__name__}, got a tuple")
    arr = np.asarray(x, dtype=float)
    shape = point_shape(space)
    k = len(shape)
    if arr.ndim < k or tuple(arr.shape[arr.ndim - k:]) != shape:
        raise InputError(f"shape mismatch: {type(space).__name__} expects trailing shape {shape}, got {arr.shape}")
    return arr, tuple(arr.shape[: arr.ndim - k])


def dimension(space: SpaceDescriptor) -> int:
    if isinstance(space, (Euclidean, Lp)):
        return space.n
    if isinstance(space, Schatten):
        return space.m * space.n
    if isinstance(space, BlockLp):
        return sum(dimension(c) for c in space.children)
    return dimension(space.children[0])


def flatten_point(space: SpaceDescriptor, x) -> np.ndarray:
    x, batch = check_point(space, x)
    if isinstance(space, BlockLp):
        return np.concatenate([flatten_point(c, xi) for c, xi in zip(space.children, x)], axis=-1)
    return np.reshape(x, batch + (dimension(space),))


def unflatten_point(space: SpaceDescriptor, flat) -> Point:
    flat = np.asarray(flat, dtype=float)
    d = dimension(space)
    if flat.ndim < 1 or flat.shape[-1] != d:
        raise InputError(f"flat point needs trailing length {d}, got {flat.shape}")
    batch = flat.shape[:-1]
    if isinstance(space, BlockLp):
        parts, start = [], 0
        for child in space.children:
            k = dimension(child)
            parts.append(unflatten_point(child, flat[..., start:start + k]))
            start += k
        return tuple(parts)
    return np.reshape(flat, batch + point_shape(space))


def _scale(space: SpaceDescriptor, x: Point, c) -> Point:
    c = np.asarray(c, dtype=float)
    if isinstance(space, BlockLp):
        return tuple(_scale(ch, xi, c) for ch, xi in zip(space.children, x))
    return x * c.reshape(c.shape + (1,) * _trailing_ndim(space))


def scale_point(space: SpaceDescriptor, x, c) -> Point:
    x, _ = check_point(space, x)
    return _scale(space, x, c)


def add_points(space: SpaceDescriptor, x: Point, y: Point) -> Point:
    if isinstance(space, BlockLp):
        return tuple(add_points(c, a, b) for c, a, b in zip(space.children, x, y))
    return np.asarray(x, dtype=float) + np.asarray(y, dtype=float)


def inner(space: SpaceDescriptor, xi, x):
    """The pairing <xi, x> (batched)."""
    xi, b1 = check_point(space, xi)
    x, b2 = check_point(space, x)
    return _out(_inner(space, xi, x))


def _inner(space: SpaceDescriptor, xi: Point, x: Point):
    if isinstance(space, BlockLp):
        return sum(_inner(c, a, b) for c, a, b in zip(space.children, xi, x))
    axes = tuple(range(-_trailing_ndim(space), 0))
    return np.sum(xi * x, axis=axes)


# ---------------------------------------------------------------------------
# vector p-norms along the last axis
# ---------------------------------------------------------------------------


def _lp(v: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(v)
    if math.isinf(p):
        return np.max(a, axis=-1)
    if p == 2:
        return np.linalg.norm(a, axis=-1)
    if p > settings.LOGSPACE_P:
        with np.errstate(divide="ignore"):
            return np.exp(logsumexp(p * np.log(a), axis=-1) / p)
    peak = np.max(a, axis=-1, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    return np.squeeze(safe, -1) * np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)


def _lp_sq_grad(v: np.ndarray, p: float) -> np.ndarray:
    # 2 |v|_p^{2-p} |v_i|^{p-1} sign(v_i), written in the scaled form 2|v| (|v_i|/|v|)^{p-1}
    if p == 2:
        return 2.0 * v
    nrm = _lp(v, p)[..., None]
    safe = np.where(nrm > 0, nrm, 1.0)
    g = 2.0 * safe * (np.abs(v) / safe) ** (p - 1.0) * np.sign(v)
    return np.where(nrm > 0, g, 0.0)


def _singular_values(X: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.svd(X, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for a {X.shape[-2]}x{X.shape[-1]} matrix: {exc}") from exc


# ---------------------------------------------------------------------------
# public evaluators
# ---------------------------------------------------------------------------


def norm(space: SpaceDescriptor, x):
    """||x|| in the given space."""
    x, _ = check_point(space, x)
    return _out(_norm(space, x))


def _norm(space: SpaceDescriptor, x: Point):
    if isinstance(space, Euclidean):
        return np.linalg.norm(x, axis=-1)
    if isinstance(space, Lp):
        return _lp(x, space.p)
    if isinstance(space, Schatten):
        return _lp(_singular_values(x), space.p)
    if isinstance(space, BlockLp):
        blocks = np.stack([np.asarray(_norm(c, xi)) for c, xi in zip(space.children, x)], axis=-1)
        return _lp(blocks, space.p)
    if isinstance(space, SumOfNorms):
        return sum(np.asarray(_norm(c, x)) for c in space.children)
    raise InputError(f"unknown space descriptor: {space!r}")


def dual_norm(space: SpaceDescriptor, xi):
    """||xi||_* for the norm dual to ``space``."""
    xi, _ = check_point(space, xi)
    return _out(_dual_norm(space, xi))


def _dual_norm(space: SpaceDescriptor, xi: Point):
    if isinstance(space, Euclidean):
        return np.linalg.norm(xi, axis=-1)
    if isinstance(space, Lp):
        return _lp(xi, dual_exponent(space.p))
    if isinstance(space, Schatten):
        return _lp(_singular_values(xi), dual_exponent(space.p))
    if isinstance(space, BlockLp):
        blocks = np.stack([np.asarray(_dual_norm(c, a)) for c, a in zip(space.children, xi)], axis=-1)
        return _lp(blocks, dual_exponent(space.p))
    raise UnsupportedError("dual norm of a sum of norms has no closed form; evaluation only")


def is_smooth(space: SpaceDescriptor) -> bool:
    if isinstance(space, Euclidean):
        return True
    if isinstance(space, (Lp, Schatten)):
        return not math.isinf(space.p)
    if isinstance(space, BlockLp):
        return not math.isinf(space.p) and all(is_smooth(c) for c in space.children)
    return False


def grad_sq_norm(space: SpaceDescriptor, x) -> Point:
    """Gradient of ||x||^2 (a dual element); zero at the origin."""
    x, _ = check_point(space, x)
    return _grad_sq_norm(space, x)


def _grad_sq_norm(space: SpaceDescriptor, x: Point) -> Point:
    if isinstance(space, SumOfNorms):
        raise UnsupportedError("sum-of-norms spaces are evaluation only; no gradient is exposed")
    if not is_smooth(space):
        raise NonsmoothNormError(
            "squared norm is not differentiable at p = inf; use the smooth surrogate exponent rho "
            "from kappa_space() instead"
        )
    if isinstance(space, Euclidean):
        return 2.0 * x
    if isinstance(space, Lp):
        return _lp_sq_grad(x, space.p)
    if isinstance(space, Schatten):
        return _schatten_sq_grad(x, space.p)
    # BlockLp: d/dx^i = (a_i / r)^{p-2} * grad_child(x^i), a_i = ||x^i||, r = ||a||_p
    a = np.stack([np.asarray(_norm(c, xi)) for c, xi in zip(space.children, x)], axis=-1)
    r = _lp(a, space.p)[..., None]
    safe = np.where(r > 0, r, 1.0)
    coef = np.where(r > 0, (a / safe) ** (space.p - 2.0), 0.0)
    return tuple(
        _scale(c, _grad_sq_norm(c, xi), coef[..., k]) for k, (c, xi) in enumerate(zip(space.children, x))
    )


def _schatten_sq_grad(X: np.ndarray, p: float) -> np.ndarray:
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for a {X.shape[-2]}x{X.shape[-1]} matrix: {exc}") from exc
    top = np.max(s, axis=-1, keepdims=True)
    s = np.where(s > settings.SVD_RANK_TOL * top, s, 0.0)
    # chain rule on F(X) = sum s_i^p, then squared: same weights as the vector case
    w = _lp_sq_grad(s, p)
    return U @ (w[..., :, None] * Vt)


def dual_witness(space: SpaceDescriptor, x) -> Point:
    """Element xi with ||xi||_* = 1 and <xi, x> = ||x|| (zero at the origin)."""
    x, _ = check_point(space, x)
    if isinstance(space, (Lp, Euclidean)) and not is_smooth(space):
        a = np.abs(x)
        k = np.argmax(a, axis=-1)
        onehot = np.zeros_like(x)
        np.put_along_axis(onehot, k[..., None], 1.0, axis=-1)
        return onehot * np.sign(x)
    nrm = np.asarray(_norm(space, x))
    safe = np.where(nrm > 0, nrm, 1.0)
    return _scale(space, _grad_sq_norm(space, x), np.where(nrm > 0, 0.5 / safe, 0.0))


def euclidean_dominated(space: SpaceDescriptor) -> bool:
    """True when ||x|| <= ||x||_2 for every x in the space."""
    if isinstance(space, (Euclidean, Lp, Schatten)):
        return True
    if isinstance(space, BlockLp):
        return all(euclidean_dominated(c) for c in space.children)
    return len(space.children) == 1 and euclidean_dominated(space.children[0])


def embed_symmetric(X) -> np.ndarray:
    """S(X) = [[0, X], [X^T, 0]]; its eigenvalues are +-sigma(X) (padded with zeros)."""
    X = np.asarray(X, dtype=float)
    if X.ndim < 2:
        raise InputError(f"embed_symmetric needs a matrix, got shape {X.shape}")
    m, n = X.shape[-2:]
    S = np.zeros(X.shape[:-2] + (m + n, m + n))
    S[..., :m, m:] = X
    S[..., m:, :m] = np.swapaxes(X, -1, -2)
    return S


# ---------------------------------------------------------------------------
# Huber surrogate V_beta(xi) = beta * V(xi / beta)
# ---------------------------------------------------------------------------


def huber(space: SpaceDescriptor, params: HuberParams, xi):
    xi, _ = check_point(space, xi)
    r = np.asarray(_norm(space, xi)) / params.beta
    v = np.where(r <= 1.0, 0.5 * r**2, r - 0.5)
    return _out(params.beta * v)


def huber_grad(space: SpaceDescriptor, params: HuberParams, xi) -> Point:
    """Gradient of V_beta; its dual norm never exceeds 1."""
    xi, _ = check_point(space, xi)
    nrm = np.asarray(_norm(space, xi))
    safe = np.where(nrm > 0, nrm, 1.0)
    coef = np.where(nrm <= params.beta, 0.5 / params.beta, 0.5 / safe)
    return _scale(space, _grad_sq_norm(space, xi), coef)
