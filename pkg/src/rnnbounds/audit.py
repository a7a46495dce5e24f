"""Norm audits of weight sets, gate statistics and assumption checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import NamedTuple

import numpy as np

from .cells import ModelWeights, build_conv_operator, lstm_forward, mgu_forward, pooling_matrix
from .data import SequenceDataset
from .errors import InvalidInputError
from .linalg import frobenius_norm, spectral_norm, two_one_norm


def display(x: float, decimals: int = 1) -> str:
    """Round half-up to ``decimals`` places, as a string."""
    q = Decimal(1).scaleb(-decimals)
    return str(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class NormProfile:
    """Spectral, Frobenius and (2,1) norms of every matrix of a model.

    ``width`` is the combined width ``sqrt(d_x d_h + d_h^2 + d_h d_y)`` for
    vanilla cells and the data dimension for conv cells; ``max_dim`` is
    ``max(d_x, d_y, d_h)``.  Either may be overridden when a profile is built
    by hand.
    """

    cell_type: str
    d_x: int
    d_h: int
    d_y: int
    spectral: dict
    frobenius: dict
    two_one: dict
    k: int | None = None
    B_x: float | None = None
    beta: float | None = None
    theta: float | None = None
    width: float | None = None
    max_dim: int | None = None

    def __post_init__(self):
        if self.width is None:
            if self.cell_type == "conv":
                self.width = float(self.d_h)
            else:
                self.width = math.sqrt(self.d_x * self.d_h + self.d_h**2 + self.d_h * self.d_y)
        if self.max_dim is None:
            self.max_dim = max(self.d_x, self.d_y, self.d_h)

    def B(self, name: str) -> float:
        try:
            return self.spectral[name]
        except KeyError:
            raise InvalidInputError(f"profile has no spectral norm for {name!r}") from None

    def M(self, name: str) -> float:
        try:
            return self.two_one[name]
        except KeyError:
            raise InvalidInputError(f"profile has no (2,1) norm for {name!r}") from None

    def F(self, name: str) -> float:
        try:
            return self.frobenius[name]
        except KeyError:
            raise InvalidInputError(f"profile has no Frobenius norm for {name!r}") from None

    @property
    def stable_rank(self) -> dict:
        return {n: (self.frobenius[n] / s if s > 0 else 1.0) for n, s in self.spectral.items()}

    @property
    def two_one_ratio(self) -> dict:
        return {n: (self.two_one[n] / f if f > 0 else 1.0) for n, f in self.frobenius.items()}

    def rows(self):
        """One dict per matrix, for CSV reports."""
        sr, tr = self.stable_rank, self.two_one_ratio
        for n in self.spectral:
            yield {
                "matrix": n,
                "spectral": self.spectral[n],
                "frobenius": self.frobenius[n],
                "two_one": self.two_one[n],
                "stable_rank": round(sr[n], 4),
                "two_one_over_frobenius": round(tr[n], 4),
            }


def audit(w: ModelWeights, B_x: float | None = None, data: SequenceDataset | None = None) -> NormProfile:
    """Measure every norm of ``w``.

    Conv filter banks are audited through their ``k*d x d`` operator matrices,
    since that is what the bounds consume.  When ``data`` is given and the
    cell is gated, the gate statistics are filled in from it.
    """
    if w.cell_type == "conv":
        mats = {n: build_conv_operator(w[n], w.d)[0] for n in w.matrices}
    else:
        mats = w.matrices
    if B_x is None and data is not None:
        B_x = data.B_x
    profile = NormProfile(
        cell_type=w.cell_type,
        d_x=w.d_x,
        d_h=w.d_h,
        d_y=w.d_y,
        spectral={n: spectral_norm(A) for n, A in mats.items()},
        frobenius={n: frobenius_norm(A) for n, A in mats.items()},
        two_one={n: two_one_norm(A) for n, A in mats.items()},
        k=w.k,
        B_x=B_x,
    )
    if data is not None and w.cell_type in ("mgu", "lstm"):
        profile.beta, profile.theta = gate_stats(w, data)
    return profile


class GateStats(NamedTuple):
    beta: float
    theta: float


def gate_stats(w: ModelWeights, data: SequenceDataset, sigma_y=None) -> GateStats:
    """Data-conditional decay factors of a gated cell over every sequence and step.

    MGU: ``beta = max ||1 - r||_inf + B_{U_h} ||r||_inf^2`` and
    ``theta = beta + 2 B_{U_r} + B_{U_r} B_{U_h}``.
    LSTM: ``beta = max ||g||_inf + B_{U_c} ||r||_inf ||o||_inf`` and
    ``theta = beta + B_{U_g} + B_{U_r} + B_{U_o}``.
    """
    if data.m == 0 or data.T == 0:
        raise InvalidInputError("gate statistics need a non-empty dataset")
    if w.cell_type == "mgu":
        r = mgu_forward(w, data.inputs, sigma_y).gates["r"]
        B_Uh, B_Ur = spectral_norm(w["U_h"]), spectral_norm(w["U_r"])
        beta = float(np.max(np.abs(1.0 - r).max(-1) + B_Uh * np.abs(r).max(-1) ** 2))
        return GateStats(beta, beta + 2 * B_Ur + B_Ur * B_Uh)
    if w.cell_type == "lstm":
        gates = lstm_forward(w, data.inputs, sigma_y).gates
        inf = {k: np.abs(v).max(-1) for k, v in gates.items()}
        B = {n: spectral_norm(w[n]) for n in ("U_c", "U_g", "U_r", "U_o")}
        beta = float(np.max(inf["g"] + B["U_c"] * inf["r"] * inf["o"]))
        return GateStats(beta, beta + B["U_g"] + B["U_r"] + B["U_o"])
    raise InvalidInputError(f"gate statistics are defined for mgu/lstm, not {w.cell_type}")


@dataclass
class AssumptionCheck:
    id: str
    passed: bool
    measured: float
    threshold: float


@dataclass
class AssumptionReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, id_):
        for c in self.checks:
            if c.id == id_:
                return c
        raise KeyError(id_)

    def __iter__(self):
        return iter(self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


_CAP_NORMS = {
    "spectral": ("A2", spectral_norm),
    "two_one": ("A7", two_one_norm),
    "frobenius": ("A8", frobenius_norm),
}


def check_assumptions(w: ModelWeights, data: SequenceDataset | None = None, acts=None,
                      norm_caps: dict | None = None, B_x: float | None = None,
                      orth_tol: float = 1e-10) -> AssumptionReport:
    """Check the input-norm, activation, norm-cap and conv-filter assumptions.

    ``norm_caps`` maps ``"spectral"``, ``"two_one"`` or ``"frobenius"`` to a
    dict of per-matrix caps.  Failures are entries in the report, never errors.
    """
    report = AssumptionReport()
    add = report.checks.append
    if data is not None:
        bound = data.B_x if B_x is None else B_x
        worst = data.max_input_norm()
        add(AssumptionCheck("A1_input_norm", worst <= bound, worst, bound))
    sigma_h, sigma_y = acts if acts is not None else (w.activations["h"], w.activations["y"])
    for slot, act in (("sigma_h", sigma_h), ("sigma_y", sigma_y)):
        value = float(abs(np.asarray(act(np.zeros(1)))[0]))
        add(AssumptionCheck(f"A3_{slot}_zero", value == 0.0, value, 0.0))
    if w.cell_type in ("vanilla", "conv"):
        add(AssumptionCheck("A3_sigma_h_bounded", math.isfinite(sigma_h.b), sigma_h.b, math.inf))
    for kind, caps in (norm_caps or {}).items():
        if kind not in _CAP_NORMS:
            raise InvalidInputError(f"unknown norm cap kind {kind!r}")
        tag, norm = _CAP_NORMS[kind]
        for name, cap in caps.items():
            value = norm(w[name])
            add(AssumptionCheck(f"{tag}_{kind}_{name}", value <= cap, value, cap))
    if w.cell_type == "conv":
        k = w.k
        target = np.eye(k) / k
        for name in ("U_cal", "V_cal", "W_cal"):
            F = w[name]
            dev = max(np.abs(F.T @ F - target).max(), np.abs(F @ F.T - target).max())
            add(AssumptionCheck(f"A6_orthogonal_{name}", dev <= orth_tol, float(dev), orth_tol))
        Q = pooling_matrix(w.d, w.K)
        q = spectral_norm(Q)
        add(AssumptionCheck("A6_pooling_norm", q <= 1.0 + 1e-12, q, 1.0))
    return report
