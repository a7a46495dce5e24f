"""Dense matrix norms and the scalar helpers the bound evaluators rely on."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

#: ``base`` values within this distance of 1 use the limit ``steps``.
UNIT_BASE_ATOL = 1e-12
#: Above this magnitude the geometric ratio is carried as a logarithm.
OVERFLOW_THRESHOLD = 1e300

_LOG_OVERFLOW = math.log(OVERFLOW_THRESHOLD)
_SECOND_START_SEED = 20190601


def as_matrix(M, name="matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float64 array or raise."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def _scaled(M):
    A = as_matrix(M)
    scale = float(np.abs(A).max())
    return (A / scale if scale > 0 else A), scale


def _power_iterate(G: np.ndarray, v: np.ndarray, tol: float, max_iter: int) -> float:
    # G is symmetric PSD; returns its top Rayleigh quotient reached from v.
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return 0.0
    v = v / norm
    rq = float(v @ G @ v)
    for _ in range(max_iter):
        w = G @ v
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0
        v = w / wn
        new_rq = float(v @ G @ v)
        if abs(new_rq - rq) <= tol * abs(new_rq):
            return new_rq
        rq = new_rq
    return rq


def spectral_norm(M, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Largest singular value of ``M`` by power iteration on the Gram matrix.

    The iteration is started from the normalized all-ones vector and from a
    fixed pseudo-random vector, and the larger result is kept, so the answer
    is deterministic and does not collapse when the all-ones vector happens to
    be orthogonal to the top singular direction (common for circulant
    operators).
    """
    if not (0.0 < tol <= 1e-3):
        raise InvalidInputError(f"tol must lie in (0, 1e-3], got {tol}")
    # normalize first so the Gram matrix cannot overflow
    A, scale = _scaled(M)
    if scale == 0.0:
        return 0.0
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    n = G.shape[0]
    if n == 1:
        return scale * math.sqrt(float(G[0, 0]))
    starts = (
        np.ones(n),
        np.random.default_rng(_SECOND_START_SEED).standard_normal(n),
    )
    lam = max(_power_iterate(G, v, tol, max_iter) for v in starts)
    return scale * math.sqrt(max(lam, 0.0))


def frobenius_norm(M) -> float:
    A, scale = _scaled(M)
    return scale * float(math.sqrt(np.sum(A * A)))


def two_one_norm(M) -> float:
    """Sum of the Euclidean norms of the columns of ``M``."""
    A, scale = _scaled(M)
    return scale * float(np.sum(np.sqrt(np.sum(A * A, axis=0))))


def stable_rank(M) -> float:
    """Unsquared ratio ``||M||_F / ||M||_2`` (1.0 for the zero matrix)."""
    s = spectral_norm(M)
    return frobenius_norm(M) / s if s > 0 else 1.0


def scale_spectral(M, target: float) -> np.ndarray:
    """Rescale ``M`` by a positive scalar so its spectral norm equals ``target``."""
    if target < 0 or not math.isfinite(target):
        raise InvalidInputError(f"target must be a finite non-negative real, got {target}")
    A = as_matrix(M)
    if target == 0:
        return np.zeros_like(A)
    s = spectral_norm(A)
    if s == 0:
        raise InvalidInputError("cannot rescale a zero matrix to a positive spectral norm")
    return A * (target / s)


def hadamard(u, v) -> np.ndarray:
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape} vs {b.shape}")
    return a * b


@dataclass(frozen=True)
class GeomRatio:
    """The accumulated gain ``(base**steps - 1) / (base - 1)``.

    ``log_value`` is always populated.  When the ratio would exceed
    ``OVERFLOW_THRESHOLD`` the flag ``computed_in_log_domain`` is set and
    ``value`` is ``inf`` unless it still fits in a double.
    """

    base: float
    steps: int
    value: float
    log_value: float
    computed_in_log_domain: bool = False


def geometric_ratio(base: float, steps: int) -> GeomRatio:
    if base < 0 or not math.isfinite(base):
        raise InvalidInputError(f"base must be a finite non-negative real, got {base}")
    if int(steps) != steps or steps < 1:
        raise InvalidInputError(f"steps must be a positive integer, got {steps}")
    steps = int(steps)
    if abs(base - 1.0) <= UNIT_BASE_ATOL:
        return GeomRatio(base, steps, float(steps), math.log(steps))
    if base == 0.0:
        return GeomRatio(base, steps, 1.0, 0.0)
    far = abs(base - 1.0) >= 0.5
    # log1p keeps precision near 1 but fails when base - 1 rounds to -1
    log_base = math.log(base) if far else math.log1p(base - 1.0)
    exponent = steps * log_base
    if far and exponent <= _LOG_OVERFLOW:
        # no cancellation in base**steps - 1 this far from 1
        value = (base**steps - 1.0) / (base - 1.0)
        return GeomRatio(base, steps, value, math.log(value))
    if base < 1.0:
        value = -math.expm1(steps * log_base) / (1.0 - base)
        return GeomRatio(base, steps, value, math.log(value))
    if exponent <= _LOG_OVERFLOW:
        value = math.expm1(exponent) / (base - 1.0)
        return GeomRatio(base, steps, value, math.log(value))
    # base**steps > 1e300: log((b^t - 1)/(b - 1)) = t log b + log(1 - b^-t) - log(b - 1)
    log_value = exponent + math.log1p(-math.exp(-exponent)) - math.log(base - 1.0)
    value = math.exp(log_value) if log_value < 709.0 else math.inf
    return GeomRatio(base, steps, value, log_value, computed_in_log_domain=True)
