"""Randomized falsification of the norm and Lipschitz inequalities, and a
Monte Carlo lower bound on the empirical Rademacher complexity.

Every check draws trial ``i`` from ``numpy.random.default_rng([seed, i])``,
so reports are reproducible and independent of evaluation order.  A trial is
a violation when any of its ``LHS > RHS * (1 + RTOL)``.

Spectral norms of sampled matrices are taken from LAPACK (``numpy.linalg.norm``
with ``ord=2``) rather than from :func:`rnnbounds.linalg.spectral_norm`, so the
right-hand sides never inherit power-iteration error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cells import (
    CELL_MATRICES,
    IDENTITY,
    TANH,
    ActivationSpec,
    ModelWeights,
    build_conv_operator,
    conv_forward,
    lstm_forward,
    mgu_forward,
    vanilla_forward,
)
from .data import SequenceDataset, project_to_ball
from .errors import InvalidInputError
from .linalg import UNIT_BASE_ATOL
from .margin import margins, ramp_loss

RTOL = 1e-9
_TINY = np.finfo(float).tiny


@dataclass
class TrialReport:
    kind: str
    trials: int
    violations: int
    worst_ratio: float
    seed: int
    extra: dict = field(default_factory=dict)

    CSV_COLUMNS = ("trial_kind", "trials", "violations", "worst_ratio", "seed")

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_row(self) -> dict:
        return {"trial_kind": self.kind, "trials": self.trials, "violations": self.violations,
                "worst_ratio": self.worst_ratio, "seed": self.seed}


def merge(a: TrialReport, b: TrialReport) -> TrialReport:
    """Combine reports of the same kind: counts add, worst ratios take the max."""
    if a.kind != b.kind:
        raise InvalidInputError(f"cannot merge {a.kind} with {b.kind}")
    extra = dict(a.extra)
    for k, v in b.extra.items():
        if k in extra and isinstance(v, (int, float)) and k.endswith("violations"):
            extra[k] = extra[k] + v
        elif k in extra and isinstance(v, (int, float)):
            extra[k] = max(extra[k], v)
        else:
            extra.setdefault(k, v)
    return TrialReport(a.kind, a.trials + b.trials, a.violations + b.violations,
                       max(a.worst_ratio, b.worst_ratio), a.seed, extra)


class _Tally:
    def __init__(self):
        self.trials = 0
        self.violations = 0
        self.worst = 0.0

    def add(self, lhs, rhs) -> bool:
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        ratio = np.where(lhs == 0, 0.0, lhs / np.maximum(rhs, _TINY))
        self.worst = max(self.worst, float(np.max(ratio, initial=0.0)))
        bad = bool(np.any(lhs > rhs * (1 + RTOL)))
        self.trials += 1
        self.violations += bad
        return bad

    def add_each(self, lhs, rhs) -> None:
        """Count every element of ``lhs`` as its own trial."""
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        ratio = np.where(lhs == 0, 0.0, lhs / np.maximum(rhs, _TINY))
        self.worst = max(self.worst, float(np.max(ratio, initial=0.0)))
        self.trials += lhs.size
        self.violations += int(np.count_nonzero(lhs > rhs * (1 + RTOL)))

    def report(self, kind, seed, **extra):
        return TrialReport(kind, self.trials, self.violations, self.worst, seed, extra)


def _spec(A) -> float:
    return float(np.linalg.norm(A, 2))


def _ratio(base, t):
    """Vectorized geometric ratio ``(base**t - 1)/(base - 1)``, ``t`` at base 1."""
    base, t = np.broadcast_arrays(np.asarray(base, dtype=float), np.asarray(t, dtype=float))
    out = t.copy()
    off = np.abs(base - 1.0) > UNIT_BASE_ATOL
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        b = base[off]
        out[off] = np.expm1(t[off] * np.log(b)) / (b - 1.0)
    return out


# samplers ------------------------------------------------------------------

def random_matrix(rng, shape, target=None, s=1.0) -> np.ndarray:
    """Entries uniform in ``[-s, s]``, optionally rescaled to spectral norm ``target``."""
    A = rng.uniform(-s, s, size=shape)
    if target is not None:
        n = _spec(A)
        A = A * (target / n) if n > 0 else A
    return A


def orthogonal_filters(rng, k: int, scaled: bool = True) -> np.ndarray:
    """Haar-random ``k x k`` orthogonal matrix, divided by ``sqrt(k)`` when ``scaled``."""
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    Q = Q * np.sign(np.diag(R))
    return Q / math.sqrt(k) if scaled else Q


def _log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def sample_weights(cell_type: str, rng, max_dim: int = 8) -> ModelWeights:
    """Random weights spanning all three recurrent regimes."""
    if cell_type == "conv":
        d = int(rng.integers(2, max_dim + 3))
        k = int(rng.integers(1, min(d, 4) + 1))
        K = int(rng.integers(1, d + 1))
        mats = {n: orthogonal_filters(rng, k) for n in CELL_MATRICES["conv"]}
        return ModelWeights("conv", mats, d=d, K=K, activations={"h": TANH, "y": IDENTITY})
    d_h = int(rng.integers(1, max_dim + 1))
    d_x = int(rng.integers(1, 7))
    d_y = int(rng.integers(2, 6))
    mats = {}
    for n in CELL_MATRICES[cell_type]:
        shape = (d_h, d_h) if n.startswith("U") else (d_y, d_h) if n == "V" else (d_h, d_x)
        hi = 2.5 if cell_type == "vanilla" else 1.5
        mats[n] = random_matrix(rng, shape, _log_uniform(rng, 0.05, hi))
    acts = {"h": TANH, "y": IDENTITY}
    if cell_type == "vanilla" and rng.random() < 0.25:
        acts["h"] = ActivationSpec.of("relu")
    if rng.random() < 0.25:
        acts["y"] = ActivationSpec.of(str(rng.choice(["tanh", "relu"])))
    return ModelWeights(cell_type, mats, activations=acts)


def sample_inputs(rng, d_x: int, max_T: int = 30, n_seq: int = 4):
    """``n_seq`` sequences inside a ball of random radius ``B_x``; returns ``(X, B_x)``."""
    T = int(rng.integers(1, max_T + 1))
    B_x = float(rng.uniform(0.5, 2.0))
    X = rng.standard_normal((n_seq, T, d_x)) * (2.0 * B_x / math.sqrt(d_x))
    return project_to_ball(X, B_x), B_x


def perturb(w: ModelWeights, rng, scale: float) -> ModelWeights:
    """Add Gaussian noise of Frobenius size about ``scale`` to a random subset of matrices."""
    names = list(w.matrices)
    chosen = [n for n in names if rng.random() < 0.6] or [names[int(rng.integers(len(names)))]]
    noise = {}
    for n in chosen:
        G = rng.standard_normal(w[n].shape)
        noise[n] = w[n] + scale * G / max(np.linalg.norm(G), _TINY)
    return w.replace(**noise)


# hidden-state norms ---------------------------------------------------------

def _steps(T):
    return np.arange(1, T + 1, dtype=float)


def _prefix_max(a):
    return np.maximum.accumulate(a, axis=-1)


def _inf(v):
    return np.abs(v).max(axis=-1)


def _hidden_vanilla(w, X, B_x):
    sigma_h = w.activations["h"]
    traj = vanilla_forward(w, X)
    d = w.d_h
    R = _ratio(sigma_h.rho * _spec(w["U"]), _steps(X.shape[1]))
    rhs = np.minimum(sigma_h.b * math.sqrt(d), sigma_h.rho * _spec(w["W"]) * B_x * R)
    return [(np.linalg.norm(traj.h, axis=-1), np.broadcast_to(rhs, traj.h.shape[:-1]))]


def _hidden_mgu(w, X, B_x):
    traj = mgu_forward(w, X)
    r = traj.gates["r"]
    beta = _prefix_max(_inf(1.0 - r) + _spec(w["U_h"]) * _inf(r) ** 2)
    R = _ratio(beta, _steps(X.shape[1]))
    rhs = np.minimum(math.sqrt(w.d_h), _spec(w["W_h"]) * B_x * R)
    return [(np.linalg.norm(traj.h, axis=-1), rhs)]


def _lstm_beta(gates, B_Uc, same_step=True):
    g, r, o = (_inf(gates[k]) for k in ("g", "r", "o"))
    if not same_step:
        # the recursion multiplies r_t by ||h_{t-1}|| <= ||o_{t-1}|| ||c_{t-1}||
        o = np.concatenate([np.zeros_like(o[..., :1]), o[..., :-1]], axis=-1)
    return _prefix_max(g + B_Uc * r * o)


def _hidden_lstm(w, X, B_x):
    traj = lstm_forward(w, X)
    h = np.linalg.norm(traj.h, axis=-1)
    c = np.linalg.norm(traj.c, axis=-1)
    B_Uc = _spec(w["U_c"])
    steps = _steps(X.shape[1])
    rhs_c = _spec(w["W_c"]) * B_x * _ratio(_lstm_beta(traj.gates, B_Uc), steps)
    return [(h, np.minimum(c, math.sqrt(w.d_h))), (c, rhs_c)]


def _hidden_conv(w, X, B_x):
    traj = conv_forward(w, X)
    rhs = np.minimum(math.sqrt(w.d), B_x * _steps(X.shape[1]))
    return [(np.linalg.norm(traj.h, axis=-1), np.broadcast_to(rhs, traj.h.shape[:-1]))]


_HIDDEN = {"vanilla": _hidden_vanilla, "mgu": _hidden_mgu, "lstm": _hidden_lstm, "conv": _hidden_conv}


def verify_hidden_norm(cell_type: str, trials: int = 1000, seed: int = 0, weight_sampler=None,
                       data_sampler=None, max_dim: int = 8, max_T: int = 30) -> TrialReport:
    """Check the hidden-state norm bound at every step of every sampled sequence.

    ``weight_sampler(rng) -> ModelWeights`` and ``data_sampler(rng, w) -> (X, B_x)``
    default to :func:`sample_weights` and :func:`sample_inputs`.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if cell_type not in _HIDDEN:
        raise InvalidInputError(f"unsupported cell type {cell_type!r}")
    weight_sampler = weight_sampler or (lambda rng: sample_weights(cell_type, rng, max_dim))
    data_sampler = data_sampler or (lambda rng, w: sample_inputs(rng, w.d_x, max_T))
    tally = _Tally()
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        w = weight_sampler(rng)
        X, B_x = data_sampler(rng, w)
        pairs = _HIDDEN[cell_type](w, X, B_x)
        lhs = np.concatenate([np.ravel(a) for a, _ in pairs])
        rhs = np.concatenate([np.ravel(b) for _, b in pairs])
        tally.add(lhs, rhs)
    return tally.report(f"hidden_norm_{cell_type}", seed)


# output Lipschitz continuity --------------------------------------------------

def _fro(A):
    return float(np.linalg.norm(A))


def _pair_B(w, w2, names):
    return {n: max(_spec(w[n]), _spec(w2[n])) for n in names}


def _lip_vanilla(w, w2, X, B_x):
    sigma_h, sigma_y = w.activations["h"], w.activations["y"]
    y = vanilla_forward(w, X).y
    y2 = vanilla_forward(w2, X).y
    B = _pair_B(w, w2, ("U", "V", "W"))
    steps = _steps(X.shape[1])
    a = sigma_y.rho * sigma_h.rho * B_x * _ratio(sigma_h.rho * B["U"], steps)
    L_U = sigma_h.rho * B["V"] * B["W"] * steps * a
    L_V = B["W"] * a
    L_W = B["V"] * a
    rhs = L_U * _fro(w["U"] - w2["U"]) + L_V * _fro(w["V"] - w2["V"]) + L_W * _fro(w["W"] - w2["W"])
    return np.linalg.norm(y - y2, axis=-1), np.broadcast_to(rhs, y.shape[:-1]), None


def _lip_mgu(w, w2, X, B_x):
    t1, t2 = mgu_forward(w, X), mgu_forward(w2, X)
    rho_y = w.activations["y"].rho
    B = _pair_B(w, w2, CELL_MATRICES["mgu"])
    D = {n: _spec(w[n] - w2[n]) for n in CELL_MATRICES["mgu"]}
    sd = math.sqrt(w.d_h)
    beta = np.maximum(
        _prefix_max(_inf(1.0 - t1.gates["r"]) + B["U_h"] * _inf(t1.gates["r"]) ** 2),
        _prefix_max(_inf(1.0 - t2.gates["r"]) + B["U_h"] * _inf(t2.gates["r"]) ** 2),
    )
    theta = beta + 2 * B["U_r"] + B["U_r"] * B["U_h"]
    R = _ratio(theta, _steps(X.shape[1]))
    inner = sd * D["U_h"] + B_x * D["W_h"] + (2 + B["U_h"]) * (sd * D["U_r"] + B_x * D["W_r"])
    rhs = rho_y * B["V"] * R * inner + rho_y * sd * D["V"]
    return np.linalg.norm(t1.y - t2.y, axis=-1), rhs, None


def _lip_lstm(w, w2, X, B_x):
    t1, t2 = lstm_forward(w, X), lstm_forward(w2, X)
    rho_y = w.activations["y"].rho
    B = _pair_B(w, w2, CELL_MATRICES["lstm"])
    D = {n: _spec(w[n] - w2[n]) for n in CELL_MATRICES["lstm"]}
    sd = math.sqrt(w.d_h)
    steps = _steps(X.shape[1])
    lhs = np.linalg.norm(t1.y - t2.y, axis=-1)

    def both(key):
        return np.maximum(_prefix_max(_inf(t1.gates[key])), _prefix_max(_inf(t2.gates[key])))

    # corrected recursion on max(||dh||, ||dc||); kappa bounds ||c'||_inf
    kappa = np.maximum(1.0, np.maximum(_prefix_max(_inf(t1.c)), _prefix_max(_inf(t2.c))))
    theta = both("g") + both("r") * B["U_c"] + kappa * B["U_g"] + B["U_r"] + B["U_o"]
    drive = (B_x * (D["W_c"] + kappa * D["W_g"] + D["W_r"] + D["W_o"])
             + sd * (D["U_c"] + kappa * D["U_g"] + D["U_r"] + D["U_o"]))
    rhs = rho_y * B["V"] * _ratio(theta, steps) * drive + rho_y * sd * D["V"]

    beta_p = np.maximum(_lstm_beta(t1.gates, B["U_c"]), _lstm_beta(t2.gates, B["U_c"]))
    theta_p = beta_p + B["U_g"] + B["U_r"] + B["U_o"]
    s = B["U_c"] + B["U_g"] + B["U_r"]
    drive_p = (B_x * (D["W_c"] + D["W_g"] + D["W_r"] + s * D["W_o"])
               + sd * (D["U_c"] + D["U_g"] + D["U_r"] + s * D["U_o"]))
    rhs_p = rho_y * B["V"] * _ratio(theta_p, steps) * drive_p + rho_y * sd * D["V"]
    return lhs, rhs, (lhs, rhs_p)


def _lip_conv(w, w2, X, B_x):
    # only the base weights w need orthogonal filters
    y = conv_forward(w, X).y
    y2 = conv_forward(w2, X).y
    d = w.d
    steps = _steps(X.shape[1])
    rhs = (d * _fro(w["V_cal"] - w2["V_cal"]) + B_x * math.sqrt(d) * steps * _fro(w["W_cal"] - w2["W_cal"])
           + d * steps * _fro(w["U_cal"] - w2["U_cal"]))
    return np.linalg.norm(y - y2, axis=-1), np.broadcast_to(rhs, y.shape[:-1]), None


_LIP = {"vanilla": _lip_vanilla, "mgu": _lip_mgu, "lstm": _lip_lstm, "conv": _lip_conv}


def verify_output_lipschitz(cell_type: str, trials: int = 1000, seed: int = 0, scale=None,
                            base_sampler=None, data_sampler=None, max_dim: int = 8,
                            max_T: int = 30) -> TrialReport:
    """Check the parameter-Lipschitz bound on ``||y_t - y'_t||`` for random weight pairs.

    The perturbation size is log-uniform in ``[1e-4, 1]`` unless ``scale`` is
    given.  For LSTM cells the report's ``extra["uncorrected_violations"]`` counts
    trials that break the uncorrected coefficient chain (see the README).
    """
    if scale is not None and not scale > 0:
        raise InvalidInputError("perturbation scale must be positive")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if cell_type not in _LIP:
        raise InvalidInputError(f"unsupported cell type {cell_type!r}")
    base_sampler = base_sampler or (lambda rng: sample_weights(cell_type, rng, max_dim))
    data_sampler = data_sampler or (lambda rng, w: sample_inputs(rng, w.d_x, max_T))
    tally, loose = _Tally(), _Tally()
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        w = base_sampler(rng)
        X, B_x = data_sampler(rng, w)
        size = scale if scale is not None else _log_uniform(rng, 1e-4, 1.0)
        w2 = perturb(w, rng, size)
        lhs, rhs, alt = _LIP[cell_type](w, w2, X, B_x)
        tally.add(lhs, rhs)
        if alt is not None:
            loose.add(*alt)
    extra = {}
    if cell_type == "lstm":
        extra = {"uncorrected_violations": loose.violations, "uncorrected_worst_ratio": loose.worst}
    return tally.report(f"output_lipschitz_{cell_type}", seed, **extra)


def output_lipschitz_pair(w: ModelWeights, w2: ModelWeights, X, B_x: float, uncorrected: bool = False):
    """``(lhs, rhs)`` arrays of the Lipschitz check for one explicit weight pair.

    ``uncorrected=True`` returns the uncorrected LSTM right-hand side instead.
    """
    if w.cell_type != w2.cell_type:
        raise InvalidInputError("weight sets must share a cell type")
    lhs, rhs, alt = _LIP[w.cell_type](w, w2, np.asarray(X, dtype=float), B_x)
    if uncorrected:
        if alt is None:
            raise InvalidInputError("only LSTM cells have a separate uncorrected form")
        return alt
    return lhs, rhs


# margin operator --------------------------------------------------------------

def margin_lipschitz_pair(y, y2, z: int):
    """``(|M(y,z) - M(y',z)|, ||y - y'||_2)`` for one pair of score vectors."""
    y, y2 = np.asarray(y, dtype=float), np.asarray(y2, dtype=float)
    lhs = float(abs(margins(y[None], [z])[0] - margins(y2[None], [z])[0]))
    return lhs, float(np.linalg.norm(y - y2))


def verify_margin_lipschitz(trials: int = 10_000, dim: int | None = None, seed: int = 0) -> TrialReport:
    """Check ``|M(y,z) - M(y',z)| <= 2 ||y - y'||_2`` on random pairs.

    The report also carries the violation count of the tighter constant-1 form
    in ``extra["uncorrected_violations"]``; that form is known to fail.
    """
    if dim is not None and dim < 2:
        raise InvalidInputError("dim must be >= 2")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    groups = {}
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        K = dim if dim is not None else int(rng.integers(2, 9))
        y = rng.standard_normal(K) * rng.uniform(0.1, 5.0)
        if rng.random() < 0.5:
            y2 = y + rng.standard_normal(K) * _log_uniform(rng, 1e-6, 2.0)
        else:
            y2 = rng.standard_normal(K) * rng.uniform(0.1, 5.0)
        groups.setdefault(K, []).append((y, y2, int(rng.integers(1, K + 1))))
    # pairs are drawn per trial and scored in batches of equal dimension
    safe, loose = _Tally(), _Tally()
    for rows in groups.values():
        Y, Y2, z = (np.array(c) for c in zip(*rows))
        lhs = np.abs(margins(Y, z) - margins(Y2, z))
        dist = np.linalg.norm(Y - Y2, axis=-1)
        safe.add_each(lhs, 2.0 * dist)
        loose.add_each(lhs, dist)
    return safe.report("margin_lipschitz", seed, uncorrected_violations=loose.violations,
                       uncorrected_worst_ratio=loose.worst)


# conv filter banks -------------------------------------------------------------

def verify_conv_orthogonality(k: int, d: int, trials: int = 100, seed: int = 0,
                              scaled: bool = True) -> TrialReport:
    """Check that orthogonal banks give a nearly diagonal Gram and ``||W||_2 <= 1``.

    A trial is violated if an off-diagonal entry of ``W^T W`` exceeds ``1e-10``
    or ``||W||_2 > 1 + 1e-8``; ``worst_ratio`` is the largest ``||W||_2``.
    ``scaled=False`` skips the ``1/sqrt(k)`` normalization (negative control).
    ``extra["pooling_norm"]`` is the measured ``||P||_2``, which equals ``1/sqrt(k)``.
    """
    if not 1 <= k <= d:
        raise InvalidInputError(f"need 1 <= k <= d, got k={k}, d={d}")
    violations, worst, max_off = 0, 0.0, 0.0
    P_norm = None
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        W, P = build_conv_operator(orthogonal_filters(rng, k, scaled), d)
        G = W.T @ W
        off = float(np.abs(G - np.diag(np.diag(G))).max())
        s = _spec(W)
        violations += off > 1e-10 or s > 1 + 1e-8
        worst, max_off = max(worst, s), max(max_off, off)
        P_norm = _spec(P)
    return TrialReport("conv_orthogonality", trials, violations, worst, seed,
                       {"max_offdiag": max_off, "pooling_norm": P_norm,
                        "pooling_norm_at_most_one": P_norm <= 1 + 1e-12})


# empirical Rademacher complexity --------------------------------------------------

@dataclass
class ErcEstimate:
    estimate: float
    rademacher_draws: int
    candidates_per_draw: int
    seed: int
    std_error: float = 0.0


class ResponseClass:
    """A finite class given by its response table, one row per member."""

    def __init__(self, responses):
        self.table = np.atleast_2d(np.asarray(responses, dtype=float))
        if self.table.shape[1] == 0:
            raise InvalidInputError("empty sample")
        self.m = self.table.shape[1]
        self.n_params = 1

    def sample(self, rng, n):
        return np.arange(min(n, len(self.table)), dtype=float)[:, None]

    def responses(self, params):
        return self.table[params[:, 0].astype(int)]

    def project(self, params):
        return params


class VanillaClass:
    """Capped vanilla RNNs scored by the ramp loss of the negated margin at step ``t``.

    Parameters are flat vectors ``[U, V, W]``; candidates are evaluated in
    batches.  Every sampled or refined candidate satisfies the spectral caps.
    """

    def __init__(self, data: SequenceDataset, d_h: int, t: int, gamma: float, caps=(1.0, 1.0, 1.0),
                 sigma_h: ActivationSpec = TANH):
        if data.m == 0:
            raise InvalidInputError("empty dataset")
        if not 1 <= t <= data.T:
            raise InvalidInputError(f"t must lie in 1..{data.T}")
        self.X = data.inputs[:, :t, :]
        self.z = data.labels[:, t - 1]
        self.m, self.t, self.gamma = data.m, t, gamma
        self.d_h, self.d_x, self.d_y = d_h, data.d_x, data.K
        self.caps = dict(zip(("U", "V", "W"), caps))
        self.sigma_h = sigma_h
        self.shapes = {"U": (d_h, d_h), "V": (data.K, d_h), "W": (d_h, data.d_x)}
        self.n_params = sum(a * b for a, b in self.shapes.values())

    def unpack(self, params):
        out, i = {}, 0
        for n, (a, b) in self.shapes.items():
            out[n] = params[:, i : i + a * b].reshape(-1, a, b)
            i += a * b
        return out

    def pack(self, mats):
        return np.concatenate([mats[n].reshape(len(mats[n]), -1) for n in self.shapes], axis=1)

    def sample(self, rng, n):
        # one candidate at a time, so a larger pool extends a smaller one
        mats = {name: np.empty((n,) + shape) for name, shape in self.shapes.items()}
        for i in range(n):
            for name, shape in self.shapes.items():
                A = rng.uniform(-1, 1, size=shape)
                target = self.caps[name] * (1.0 if rng.random() < 0.5 else rng.random())
                mats[name][i] = A * (target / max(_spec(A), _TINY))
        return self.pack(mats)

    def project(self, params):
        mats = self.unpack(params.copy())
        for name, A in mats.items():
            norms = np.linalg.norm(A, 2, axis=(1, 2))
            mats[name] = A * np.minimum(1.0, self.caps[name] / np.maximum(norms, _TINY))[:, None, None]
        return self.pack(mats)

    def responses(self, params):
        mats = self.unpack(params)
        U, V, W = mats["U"], mats["V"], mats["W"]
        h = np.zeros((len(params), self.m, self.d_h))
        for s in range(self.t):
            pre = np.einsum("nij,nmj->nmi", U, h) + np.einsum("nij,mj->nmi", W, self.X[:, s, :])
            h = self.sigma_h(pre)
        y = np.einsum("nij,nmj->nmi", V, h)
        z = np.broadcast_to(self.z, y.shape[:2])
        return ramp_loss(-margins(y, z), self.gamma)


_STEPS = (0.3, 0.05, 0.005)


def _climb(cls, params, eps, rounds):
    best = params[None, :]
    best_score = float((cls.responses(best) @ eps)[0]) / cls.m
    P = params.size
    for _ in range(rounds):
        moves = np.concatenate([s * np.eye(P) for s in _STEPS] + [-s * np.eye(P) for s in _STEPS])
        cand = cls.project(best + moves)
        scores = cls.responses(cand) @ eps / cls.m
        j = int(np.argmax(scores))
        if scores[j] <= best_score:
            break
        best, best_score = cand[j : j + 1], float(scores[j])
    return best_score


def estimate_erc_mc(cls, draws: int = 200, candidates: int = 500, seed: int = 0,
                    hill_climb: bool = True, climb_rounds: int = 5,
                    exhaustive: bool = False) -> ErcEstimate:
    """Mean over sign draws of the best correlation found among class members.

    Each draw scores a shared pool of ``candidates`` sampled members; with
    ``hill_climb`` the best of them is refined by coordinate search inside the
    caps.  ``exhaustive`` replaces random signs by all ``2**m`` patterns.
    The result never exceeds the true ERC of the class.
    """
    if draws < 1 or candidates < 1:
        raise InvalidInputError("draws and candidates must be >= 1")
    m = cls.m
    if exhaustive:
        if m > 20:
            raise InvalidInputError("exhaustive enumeration is limited to m <= 20")
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    else:
        signs = np.random.default_rng([seed, 0]).choice((-1.0, 1.0), size=(draws, m))
    pool = cls.sample(np.random.default_rng([seed, 1]), candidates)
    H = cls.responses(pool)
    scores = signs @ H.T / m
    best = scores.max(axis=1)
    if hill_climb and cls.n_params > 1:
        arg = scores.argmax(axis=1)
        best = np.array([max(b, _climb(cls, pool[a], e, climb_rounds))
                         for b, a, e in zip(best, arg, signs)])
    n = len(signs)
    se = float(best.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ErcEstimate(float(best.mean()), n, len(pool), seed, se)
