"""Forward passes for vanilla, MGU, LSTM and convolutional recurrent cells.

Every forward function accepts inputs of shape ``(T, d_x)`` or a batch
``(n, T, d_x)`` and returns a :class:`Trajectory` whose arrays carry the same
leading batch axes.  Hidden states start at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .linalg import as_matrix

CELL_MATRICES = {
    "vanilla": ("U", "V", "W"),
    "mgu": ("W_r", "W_h", "U_r", "U_h", "V"),
    "lstm": ("W_g", "W_r", "W_o", "W_c", "U_g", "U_r", "U_o", "U_c", "V"),
    "conv": ("U_cal", "V_cal", "W_cal"),
}

_KINDS = {
    # kind: (rho, b, sigma(0) == 0)
    "tanh": (1.0, 1.0, True),
    "sigmoid": (0.25, 1.0, False),
    "relu": (1.0, math.inf, True),
    "identity": (1.0, math.inf, True),
}


@dataclass(frozen=True)
class ActivationSpec:
    """Entrywise activation with Lipschitz constant ``rho`` and bound ``b``."""

    kind: str
    rho: float
    b: float

    @classmethod
    def of(cls, kind: str) -> "ActivationSpec":
        if kind not in _KINDS:
            raise InvalidInputError(f"unknown activation kind {kind!r}")
        rho, b, _ = _KINDS[kind]
        return cls(kind, rho, b)

    @property
    def zero_at_origin(self) -> bool:
        return _KINDS[self.kind][2]

    def __call__(self, a):
        if self.kind == "tanh":
            return np.tanh(a)
        if self.kind == "sigmoid":
            return sigmoid(a)
        if self.kind == "relu":
            return np.maximum(a, 0.0)
        return np.asarray(a, dtype=np.float64)

    def derivative(self, a):
        """Derivative evaluated at the pre-activation ``a``."""
        if self.kind == "tanh":
            return 1.0 - np.tanh(a) ** 2
        if self.kind == "sigmoid":
            s = sigmoid(a)
            return s * (1.0 - s)
        if self.kind == "relu":
            return (np.asarray(a) > 0).astype(np.float64)
        return np.ones_like(np.asarray(a, dtype=np.float64))


TANH = ActivationSpec.of("tanh")
IDENTITY = ActivationSpec.of("identity")


def sigmoid(a):
    a = np.asarray(a, dtype=np.float64)
    # split by sign so exp never overflows
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _default_activations():
    return {"h": TANH, "y": IDENTITY}


@dataclass
class ModelWeights:
    """Named weight matrices of one recurrent cell family.

    For ``conv`` the three matrices are ``k x k`` filter banks whose columns
    are the filters, and ``d``/``K`` give the data and class dimensions.
    """

    cell_type: str
    matrices: dict
    d: int | None = None
    K: int | None = None
    activations: dict = field(default_factory=_default_activations)

    def __post_init__(self):
        if self.cell_type not in CELL_MATRICES:
            raise InvalidInputError(f"unsupported cell type {self.cell_type!r}")
        names = CELL_MATRICES[self.cell_type]
        missing = [n for n in names if n not in self.matrices]
        if missing:
            raise InvalidInputError(f"{self.cell_type} weights missing {missing}")
        extra = set(self.matrices) - set(names)
        if extra:
            raise InvalidInputError(f"unexpected matrices for {self.cell_type}: {sorted(extra)}")
        self.matrices = {n: as_matrix(self.matrices[n], n) for n in names}
        self._check_dims()

    def _check_dims(self):
        m = self.matrices
        if self.cell_type == "conv":
            k = m["U_cal"].shape[0]
            for n in CELL_MATRICES["conv"]:
                if m[n].shape != (k, k):
                    raise InvalidInputError(f"{n} must be {k}x{k}, got {m[n].shape}")
            if self.d is None or self.K is None:
                raise InvalidInputError("conv weights need data dimension d and class count K")
            if k > self.d:
                raise InvalidInputError(f"filter size k={k} exceeds data dimension d={self.d}")
            if not 1 <= self.K <= self.d:
                raise InvalidInputError(f"class count K={self.K} must lie in [1, d={self.d}]")
            return
        d_h = m["V"].shape[1]
        d_y = m["V"].shape[0]
        w_names = [n for n in m if n.startswith("W")]
        d_x = m[w_names[0]].shape[1]
        for n, A in m.items():
            if n.startswith("U"):
                want = (d_h, d_h)
            elif n.startswith("W"):
                want = (d_h, d_x)
            else:
                want = (d_y, d_h)
            if A.shape != want:
                raise InvalidInputError(f"{n} has shape {A.shape}, expected {want}")

    def __getitem__(self, name):
        return self.matrices[name]

    @property
    def k(self) -> int | None:
        return self.matrices["U_cal"].shape[0] if self.cell_type == "conv" else None

    @property
    def d_h(self) -> int:
        return self.d if self.cell_type == "conv" else self.matrices["V"].shape[1]

    @property
    def d_x(self) -> int:
        if self.cell_type == "conv":
            return self.d
        return next(A for n, A in self.matrices.items() if n.startswith("W")).shape[1]

    @property
    def d_y(self) -> int:
        return self.K if self.cell_type == "conv" else self.matrices["V"].shape[0]

    def replace(self, **mats) -> "ModelWeights":
        new = dict(self.matrices)
        new.update(mats)
        return ModelWeights(self.cell_type, new, self.d, self.K, dict(self.activations))

    def copy(self) -> "ModelWeights":
        return self.replace(**{n: A.copy() for n, A in self.matrices.items()})

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        return (
            self.cell_type == other.cell_type
            and self.d == other.d
            and self.K == other.K
            and self.activations == other.activations
            and self.matrices.keys() == other.matrices.keys()
            and all(np.array_equal(A, other.matrices[n]) for n, A in self.matrices.items())
        )


@dataclass
class Trajectory:
    """Hidden states ``h[..., t, :]`` and outputs ``y[..., t, :]`` for t = 1..T.

    ``c`` is the LSTM memory cell and ``gates`` holds the gate vectors of the
    gated cells, keyed by name (``r`` for MGU; ``g``, ``r``, ``o`` for LSTM).
    """

    h: np.ndarray
    y: np.ndarray
    c: np.ndarray | None = None
    gates: dict = field(default_factory=dict)


def _inputs(xs, d_x):
    X = np.asarray(xs, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim < 2 or X.shape[-1] != d_x:
        raise InvalidInputError(f"inputs must end in dimension d_x={d_x}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("inputs have non-finite entries")
    return X


def _check_kind(w, kind):
    if w.cell_type != kind:
        raise InvalidInputError(f"expected {kind} weights, got {w.cell_type}")


def _acts(w, acts):
    if acts is None:
        return w.activations["h"], w.activations["y"]
    return acts


def vanilla_forward(w: ModelWeights, xs, acts=None) -> Trajectory:
    """``h_t = s_h(U h_{t-1} + W x_t)``, ``y_t = s_y(V h_t)``."""
    _check_kind(w, "vanilla")
    sigma_h, sigma_y = _acts(w, acts)
    X = _inputs(xs, w.d_x)
    U, V, W = w["U"], w["V"], w["W"]
    T = X.shape[-2]
    h = np.zeros(X.shape[:-2] + (w.d_h,))
    hs = np.empty(X.shape[:-1] + (w.d_h,))
    for t in range(T):
        h = sigma_h(h @ U.T + X[..., t, :] @ W.T)
        hs[..., t, :] = h
    return Trajectory(h=hs, y=sigma_y(hs @ V.T))


def mgu_forward(w: ModelWeights, xs, sigma_y=None) -> Trajectory:
    """Minimal gated unit with sigmoid forget gate and tanh candidate."""
    _check_kind(w, "mgu")
    sigma_y = sigma_y or w.activations["y"]
    X = _inputs(xs, w.d_x)
    W_r, W_h, U_r, U_h, V = (w[n] for n in CELL_MATRICES["mgu"])
    T = X.shape[-2]
    h = np.zeros(X.shape[:-2] + (w.d_h,))
    hs = np.empty(X.shape[:-1] + (w.d_h,))
    rs = np.empty_like(hs)
    for t in range(T):
        x = X[..., t, :]
        r = sigmoid(x @ W_r.T + h @ U_r.T)
        cand = np.tanh(x @ W_h.T + (r * h) @ U_h.T)
        h = (1.0 - r) * h + r * cand
        hs[..., t, :] = h
        rs[..., t, :] = r
    return Trajectory(h=hs, y=sigma_y(hs @ V.T), gates={"r": rs})


def lstm_forward(w: ModelWeights, xs, sigma_y=None) -> Trajectory:
    """LSTM with forget gate ``g``, input gate ``r`` and output gate ``o``."""
    _check_kind(w, "lstm")
    sigma_y = sigma_y or w.activations["y"]
    X = _inputs(xs, w.d_x)
    T = X.shape[-2]
    shape = X.shape[:-1] + (w.d_h,)
    h = np.zeros(X.shape[:-2] + (w.d_h,))
    c = np.zeros_like(h)
    hs, cs = np.empty(shape), np.empty(shape)
    gates = {k: np.empty(shape) for k in ("g", "r", "o")}
    for t in range(T):
        x = X[..., t, :]
        g = sigmoid(x @ w["W_g"].T + h @ w["U_g"].T)
        r = sigmoid(x @ w["W_r"].T + h @ w["U_r"].T)
        o = sigmoid(x @ w["W_o"].T + h @ w["U_o"].T)
        cand = np.tanh(x @ w["W_c"].T + h @ w["U_c"].T)
        c = g * c + r * cand
        h = o * np.tanh(c)
        hs[..., t, :], cs[..., t, :] = h, c
        gates["g"][..., t, :], gates["r"][..., t, :], gates["o"][..., t, :] = g, r, o
    return Trajectory(h=hs, y=sigma_y(hs @ w["V"].T), c=cs, gates=gates)


def build_conv_operator(filters, d: int):
    """Stacked sliding-window matrix ``W`` and channel-averaging matrix ``P``.

    ``filters`` is ``k x k`` with one filter per column.  Inputs are padded
    with ``k - 1`` trailing zeros, so the padded columns of each window matrix
    are dropped and ``W`` has shape ``(k*d, d)``.  ``P @ W @ x`` is the
    channel-averaged convolution, of dimension ``d``.
    """
    F = as_matrix(filters, "filters")
    k = F.shape[0]
    if F.shape != (k, k):
        raise InvalidInputError(f"filter bank must be square, got {F.shape}")
    if k > d:
        raise InvalidInputError(f"filter size k={k} exceeds data dimension d={d}")
    W = np.zeros((k * d, d))
    for i in range(k):
        for j in range(d):
            n = min(k, d - j)
            W[i * d + j, j : j + n] = F[:n, i]
    P = np.hstack([np.eye(d)] * k) / k
    return W, P


def conv_matrix(filters, d: int) -> np.ndarray:
    """The ``d x d`` matrix of ``x -> P W x``."""
    W, P = build_conv_operator(filters, d)
    return P @ W


def pooling_matrix(d: int, K: int) -> np.ndarray:
    """Blockwise averaging of ``d`` coordinates into ``K`` contiguous blocks.

    Blocks have ``d // K`` coordinates and the last block absorbs the remainder.
    """
    if not 1 <= K <= d:
        raise InvalidInputError(f"need 1 <= K <= d, got K={K}, d={d}")
    size = d // K
    Q = np.zeros((K, d))
    for b in range(K):
        lo = b * size
        hi = d if b == K - 1 else lo + size
        Q[b, lo:hi] = 1.0 / (hi - lo)
    return Q


def conv_forward(w: ModelWeights, xs, acts=None) -> Trajectory:
    """Conv RNN: ``h_t = s_h(U*h_{t-1} + W*x_t)``, ``y_t = s_y(pool(V*h_t))``."""
    _check_kind(w, "conv")
    sigma_h, sigma_y = _acts(w, acts)
    X = _inputs(xs, w.d)
    A_U = conv_matrix(w["U_cal"], w.d)
    A_W = conv_matrix(w["W_cal"], w.d)
    A_V = pooling_matrix(w.d, w.K) @ conv_matrix(w["V_cal"], w.d)
    T = X.shape[-2]
    h = np.zeros(X.shape[:-2] + (w.d,))
    hs = np.empty(X.shape[:-1] + (w.d,))
    for t in range(T):
        h = sigma_h(h @ A_U.T + X[..., t, :] @ A_W.T)
        hs[..., t, :] = h
    return Trajectory(h=hs, y=sigma_y(hs @ A_V.T))


_FORWARD = {
    "vanilla": lambda w, xs: vanilla_forward(w, xs),
    "mgu": lambda w, xs: mgu_forward(w, xs),
    "lstm": lambda w, xs: lstm_forward(w, xs),
    "conv": lambda w, xs: conv_forward(w, xs),
}


def forward(w: ModelWeights, xs) -> Trajectory:
    """Dispatch on ``w.cell_type`` using the activations stored on ``w``."""
    return _FORWARD[w.cell_type](w, xs)
