"""Minibatch SGD for vanilla RNN classifiers with analytic backpropagation through time.

The surrogate is softmax cross-entropy on the output at the final step; the
ramp risk and zero-one error are logged but never differentiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cells import IDENTITY, TANH, ModelWeights, vanilla_forward
from .data import SequenceDataset
from .errors import InvalidInputError, TrainingError
from .linalg import scale_spectral, spectral_norm
from .margin import ramp_risk_arrays, zero_one_arrays


@dataclass
class TrainConfig:
    lr: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    gamma: float = 1.0
    hidden_dim: int = 8
    target_spectral_U: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0 or self.epochs < 0:
            raise InvalidInputError("learning rate and epochs must be non-negative")
        if self.batch_size < 1 or self.hidden_dim < 1:
            raise InvalidInputError("batch_size and hidden_dim must be positive")
        if not self.gamma > 0:
            raise InvalidInputError("gamma must be positive")


def init_vanilla(d_x: int, d_h: int, K: int, seed: int = 0) -> ModelWeights:
    rng = np.random.default_rng([seed, 2])
    return ModelWeights("vanilla", {
        "U": rng.standard_normal((d_h, d_h)) * (0.5 / math.sqrt(d_h)),
        "V": rng.standard_normal((K, d_h)) / math.sqrt(d_h),
        "W": rng.standard_normal((d_h, d_x)) / math.sqrt(d_x),
    }, activations={"h": TANH, "y": IDENTITY})


def _log_softmax(Y):
    Y = Y - Y.max(axis=-1, keepdims=True)
    return Y - np.log(np.exp(Y).sum(axis=-1, keepdims=True))


def vanilla_loss_and_grad(w: ModelWeights, X, z):
    """Mean cross-entropy of ``softmax(y_T)`` against labels ``z`` and its gradients.

    ``X`` is ``(n, T, d_x)``, ``z`` holds 1-based labels of length ``n``.
    Returns ``(loss, {"U": dU, "V": dV, "W": dW})``.
    """
    sigma_h, sigma_y = w.activations["h"], w.activations["y"]
    U, V, W = w["U"], w["V"], w["W"]
    X = np.asarray(X, dtype=float)
    n, T, _ = X.shape
    idx = np.asarray(z, dtype=np.int64) - 1
    hs = np.zeros((T + 1, n, w.d_h))
    pres = np.empty((T, n, w.d_h))
    for t in range(T):
        pres[t] = hs[t] @ U.T + X[:, t, :] @ W.T
        hs[t + 1] = sigma_h(pres[t])
    out_pre = hs[T] @ V.T
    Y = sigma_y(out_pre)
    logp = _log_softmax(Y)
    loss = -float(np.mean(logp[np.arange(n), idx]))

    dY = np.exp(logp)
    dY[np.arange(n), idx] -= 1.0
    dY /= n
    d_out = dY * sigma_y.derivative(out_pre)
    grads = {"V": d_out.T @ hs[T], "U": np.zeros_like(U), "W": np.zeros_like(W)}
    dh = d_out @ V
    for t in range(T - 1, -1, -1):
        da = dh * sigma_h.derivative(pres[t])
        grads["U"] += da.T @ hs[t]
        grads["W"] += da.T @ X[:, t, :]
        dh = da @ U
    return loss, grads


def finite_difference_grad(w: ModelWeights, X, z, step: float = 1e-5) -> dict:
    """Central differences of :func:`vanilla_loss_and_grad`'s loss, coordinate by coordinate."""
    out = {}
    for name in ("U", "V", "W"):
        A = w[name]
        G = np.zeros_like(A)
        for ij in np.ndindex(A.shape):
            plus, minus = A.copy(), A.copy()
            plus[ij] += step
            minus[ij] -= step
            lp, _ = vanilla_loss_and_grad(w.replace(**{name: plus}), X, z)
            lm, _ = vanilla_loss_and_grad(w.replace(**{name: minus}), X, z)
            G[ij] = (lp - lm) / (2 * step)
        out[name] = G
    return out


def gradient_check(w: ModelWeights, X, z, step: float = 1e-5, floor: float = 1e-8) -> float:
    """Largest coordinatewise ``|g - f| / max(|g|, |f|, floor)`` between BPTT and finite differences."""
    _, g = vanilla_loss_and_grad(w, X, z)
    f = finite_difference_grad(w, X, z, step)
    worst = 0.0
    for name in g:
        denom = np.maximum(np.maximum(np.abs(g[name]), np.abs(f[name])), floor)
        worst = max(worst, float(np.max(np.abs(g[name] - f[name]) / denom)))
    return worst


def evaluate(w: ModelWeights, data: SequenceDataset, gamma: float, t: int | None = None):
    """``(ramp_risk, zero_one)`` of the outputs at step ``t`` (default: last)."""
    t = data.T if t is None else t
    Y = vanilla_forward(w, data.inputs[:, :t, :]).y[:, -1, :]
    z = data.labels[:, t - 1]
    return ramp_risk_arrays(Y, z, gamma), zero_one_arrays(Y, z)


def train_vanilla(data: SequenceDataset, cfg: TrainConfig, init: ModelWeights | None = None):
    """Train on the final-step labels; returns ``(weights, log)``.

    ``log`` has one dict per epoch (epoch 0 is the initial state) with the
    surrogate loss, ramp risk, zero-one error and spectral norm of ``U``.
    When ``cfg.target_spectral_U`` is set, ``U`` is rescaled to that norm after
    every epoch.  A non-finite loss raises :class:`TrainingError` carrying the
    last finite weights.
    """
    if data.m == 0:
        raise InvalidInputError("cannot train on an empty dataset")
    w = init.copy() if init is not None else init_vanilla(data.d_x, cfg.hidden_dim, data.K, cfg.seed)
    if w.d_x != data.d_x or w.d_y != data.K:
        raise InvalidInputError("initial weights do not match the dataset dimensions")
    rng = np.random.default_rng([cfg.seed, 3])
    X, z = data.inputs, data.labels[:, -1]
    log = []

    def record(epoch, loss):
        ramp, err = evaluate(w, data, cfg.gamma)
        log.append({"epoch": epoch, "loss": loss, "ramp_risk": ramp, "zero_one": err,
                    "B_U": spectral_norm(w["U"])})

    record(0, vanilla_loss_and_grad(w, X, z)[0])
    for epoch in range(1, cfg.epochs + 1):
        last = w
        order = rng.permutation(data.m)
        for start in range(0, data.m, cfg.batch_size):
            b = order[start : start + cfg.batch_size]
            # overflow is caught by the finiteness check below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, g = vanilla_loss_and_grad(w, X[b], z[b])
            if not math.isfinite(loss) or not all(np.all(np.isfinite(G)) for G in g.values()):
                raise TrainingError(f"non-finite loss at epoch {epoch}", weights=last, log=log)
            if cfg.lr > 0:
                w = w.replace(**{n: w[n] - cfg.lr * g[n] for n in g})
        if cfg.target_spectral_U is not None:
            w = w.replace(U=scale_spectral(w["U"], cfg.target_spectral_U))
        with np.errstate(over="ignore", invalid="ignore"):
            loss = vanilla_loss_and_grad(w, X, z)[0]
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}", weights=last, log=log)
        record(epoch, loss)
    return w, log
