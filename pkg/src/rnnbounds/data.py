"""Synthetic labelled sequence data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cells import ModelWeights, vanilla_forward
from .errors import InvalidInputError
from .linalg import scale_spectral


@dataclass
class SequenceDataset:
    """``m`` sequences of length ``T``.

    ``inputs`` has shape ``(m, T, d_x)`` with every ``||x_{i,t}||_2 <= B_x``;
    ``labels`` has shape ``(m, T)`` with entries in ``1..K``.
    """

    inputs: np.ndarray
    labels: np.ndarray
    K: int
    B_x: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 3:
            raise InvalidInputError(f"inputs must be (m, T, d_x), got {self.inputs.shape}")
        if self.labels.shape != self.inputs.shape[:2]:
            raise InvalidInputError(
                f"labels shape {self.labels.shape} does not match inputs {self.inputs.shape[:2]}"
            )
        if self.K < 2:
            raise InvalidInputError(f"need K >= 2, got {self.K}")
        if self.labels.size and (self.labels.min() < 1 or self.labels.max() > self.K):
            raise InvalidInputError(f"labels must lie in 1..{self.K}")

    @property
    def m(self) -> int:
        return self.inputs.shape[0]

    @property
    def T(self) -> int:
        return self.inputs.shape[1]

    @property
    def d_x(self) -> int:
        return self.inputs.shape[2]

    def max_input_norm(self) -> float:
        return float(np.linalg.norm(self.inputs, axis=-1).max()) if self.m else 0.0

    def subset(self, idx) -> "SequenceDataset":
        return SequenceDataset(self.inputs[idx], self.labels[idx], self.K, self.B_x, self.seed)

    def split(self, fraction: float = 0.5, seed: int = 0):
        """Random split into two datasets, the first holding ``fraction`` of the rows."""
        perm = np.random.default_rng(seed).permutation(self.m)
        cut = int(round(fraction * self.m))
        return self.subset(np.sort(perm[:cut])), self.subset(np.sort(perm[cut:]))

    def __eq__(self, other):
        if not isinstance(other, SequenceDataset):
            return NotImplemented
        return (
            self.K == other.K
            and self.B_x == other.B_x
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.labels, other.labels)
        )


def project_to_ball(X, radius: float = 1.0) -> np.ndarray:
    """Scale each vector on the last axis down onto the ball of ``radius``."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    out = X * np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
    # rounding can leave a norm one ulp above the radius
    shrink = np.nextafter(1.0, 0.0)
    for _ in range(64):
        over = np.linalg.norm(out, axis=-1, keepdims=True) > radius
        if not over.any():
            break
        out = np.where(over, out * shrink, out)
    return out


def teacher_network(d_x: int, K: int, seed: int, d_h: int = 8, recurrent_norm: float = 0.9):
    """Fixed random vanilla RNN used to label the ``teacher`` rule."""
    rng = np.random.default_rng([seed, 1])
    U = scale_spectral(rng.standard_normal((d_h, d_h)), recurrent_norm)
    W = rng.standard_normal((d_h, d_x)) * 2.0
    V = rng.standard_normal((K, d_h))
    return ModelWeights("vanilla", {"U": U, "V": V, "W": W})


def _sector_labels(X, K, rng):
    # running sums of two fixed linear functionals; label = angular sector
    a, b = rng.standard_normal((2, X.shape[-1]))
    s = np.cumsum(X @ a, axis=1)
    c = np.cumsum(X @ b, axis=1)
    if K == 2:
        return np.where(s > 0, 1, 2)
    angle = np.mod(np.arctan2(c, s), 2 * np.pi)
    return 1 + np.minimum((angle / (2 * np.pi) * K).astype(np.int64), K - 1)


def gen_synthetic(m: int, T: int, d_x: int, K: int, rule: str = "teacher", seed: int = 0,
                  B_x: float = 1.0) -> SequenceDataset:
    """Sample inputs in the ``B_x`` ball and label them by ``rule``.

    ``teacher`` labels each step by the argmax output of
    :func:`teacher_network`; ``running-sign`` labels by the sign (K = 2) or
    angular sector (K > 2) of running sums of fixed linear functionals of the
    input prefix.
    """
    if K < 2:
        raise InvalidInputError(f"need K >= 2, got {K}")
    if min(m, T, d_x) < 1 or B_x <= 0:
        raise InvalidInputError("m, T, d_x and B_x must be positive")
    rng = np.random.default_rng([seed, 0])
    X = rng.standard_normal((m, T, d_x)) / np.sqrt(d_x)
    X = project_to_ball(X, B_x)
    if rule == "teacher":
        y = vanilla_forward(teacher_network(d_x, K, seed), X).y
        labels = 1 + np.argmax(y, axis=-1)
    elif rule == "running-sign":
        labels = _sector_labels(X, K, rng)
    else:
        raise InvalidInputError(f"unknown labelling rule {rule!r}")
    return SequenceDataset(X, labels, K, B_x, seed)
