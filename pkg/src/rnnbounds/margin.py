"""Functional margin, ramp loss and empirical risks for K-class outputs.

Labels are 1-based, ``z in {1, ..., K}``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def _check_labels(z, K):
    z = np.asarray(z)
    if K < 2:
        raise InvalidInputError(f"need at least two classes, got K={K}")
    if np.any(z < 1) or np.any(z > K):
        raise InvalidInputError(f"labels must lie in 1..{K}")
    return z.astype(np.int64)


def margins(Y, z) -> np.ndarray:
    """Vectorized margin ``y_z - max_{j != z} y_j`` over the last axis of ``Y``."""
    Y = np.asarray(Y, dtype=np.float64)
    z = _check_labels(z, Y.shape[-1])
    idx = np.expand_dims(z - 1, -1)
    own = np.take_along_axis(Y, idx, axis=-1)[..., 0]
    others = Y.copy()
    np.put_along_axis(others, idx, -np.inf, axis=-1)
    return own - others.max(axis=-1)


def margin(y, z: int) -> float:
    return float(margins(np.asarray(y, dtype=np.float64)[None, :], [z])[0])


def ramp_loss(a, gamma: float):
    """1 for ``a > 0``, ``1 + a/gamma`` on ``[-gamma, 0]``, 0 below ``-gamma``."""
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    a = np.asarray(a, dtype=np.float64)
    out = np.clip(1.0 + a / gamma, 0.0, 1.0)
    out = np.where(a > 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def _stack(outputs):
    outputs = list(outputs)
    if not outputs:
        raise InvalidInputError("outputs must be non-empty")
    Y = np.array([np.asarray(y, dtype=np.float64) for y, _ in outputs])
    z = np.array([int(z) for _, z in outputs])
    return Y, z


def empirical_ramp_risk(outputs, gamma: float) -> float:
    """Mean ramp loss of the negated margins of ``(y, z)`` pairs."""
    Y, z = _stack(outputs)
    return ramp_risk_arrays(Y, z, gamma)


def zero_one_error(outputs) -> float:
    """Fraction of pairs whose argmax misses ``z``; ties count as errors."""
    Y, z = _stack(outputs)
    return zero_one_arrays(Y, z)


def ramp_risk_arrays(Y, z, gamma: float) -> float:
    if np.asarray(Y).shape[0] == 0:
        raise InvalidInputError("outputs must be non-empty")
    return float(np.mean(ramp_loss(-margins(Y, z), gamma)))


def zero_one_arrays(Y, z) -> float:
    if np.asarray(Y).shape[0] == 0:
        raise InvalidInputError("outputs must be non-empty")
    # margin <= 0 means a competitor ties or beats the labelled class
    return float(np.mean(margins(Y, z) <= 0))
