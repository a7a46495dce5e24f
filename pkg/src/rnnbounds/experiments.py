"""Regime sweeps and growth-rate fits for the vanilla bounds."""

from __future__ import annotations

import numpy as np

from .audit import NormProfile, audit
from .bounds import BoundQuery, comparison_bounds, regime_classify, vanilla_erc_bound
from .data import SequenceDataset
from .errors import InvalidInputError
from .train import TrainConfig, evaluate, train_vanilla


def loglog_slope(ts, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ts)``."""
    ts, values = np.asarray(ts, dtype=float), np.asarray(values, dtype=float)
    if np.any(ts <= 0) or np.any(values <= 0):
        raise InvalidInputError("slopes need positive abscissae and values")
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])


def synthetic_profile(B_U: float, B_V: float = 1.0, B_W: float = 1.0, d_x: int = 4,
                      d_h: int = 16, d_y: int = 3, B_x: float = 1.0) -> NormProfile:
    """A hand-made profile whose Frobenius and (2,1) norms equal the spectral ones."""
    spec = {"U": B_U, "V": B_V, "W": B_W}
    return NormProfile("vanilla", d_x, d_h, d_y, spec, dict(spec), dict(spec), B_x=B_x)


def ours_growth(profile: NormProfile, ts, m: int = 1000, gamma: float = 1.0):
    """The comparison-table complexity of ``profile`` at each horizon in ``ts``."""
    return np.array([comparison_bounds(BoundQuery(profile, t=int(t), m=m, gamma=gamma))["ours"].value
                     for t in ts])


def regime_sweep(data: SequenceDataset, norms, gamma: float = 1.0, seeds: int = 5,
                 epochs: int = 20, hidden_dim: int = 8, lr: float = 0.5, t: int | None = None,
                 delta: float = 0.05):
    """Train with ``||U||_2`` pinned to each value in ``norms`` and collect gaps and bounds.

    For each norm and seed the data are split 50/50, a model is trained on
    the first half and ``|train ramp risk - held-out ramp risk|`` is recorded.
    Rows report the median gap over seeds next to the bounds of the median
    seed's model.  Gaps are measured, never asserted against the bounds.
    """
    if seeds < 1:
        raise InvalidInputError("seeds must be >= 1")
    t = data.T if t is None else t
    rows = []
    for norm in norms:
        gaps, runs = [], []
        for s in range(seeds):
            train, held = data.split(0.5, seed=s)
            cfg = TrainConfig(lr=lr, epochs=epochs, batch_size=16, gamma=gamma,
                              hidden_dim=hidden_dim, target_spectral_U=norm, seed=s)
            w, _ = train_vanilla(train, cfg)
            r_train, _ = evaluate(w, train, gamma, t)
            r_held, _ = evaluate(w, held, gamma, t)
            gaps.append(abs(r_train - r_held))
            runs.append((w, train.m, r_train, r_held))
        order = np.argsort(gaps)
        w, m, r_train, r_held = runs[order[len(order) // 2]]
        q = BoundQuery(audit(w, B_x=data.B_x), t=t, m=m, gamma=gamma, delta=delta)
        rows.append({
            "target_B_U": float(norm),
            "regime": regime_classify(float(norm)).label,
            "gap_median": float(np.median(gaps)),
            "vanilla_erc": vanilla_erc_bound(q).value,
            "ours": comparison_bounds(q)["ours"].value,
            "train_ramp_risk": r_train,
            "heldout_ramp_risk": r_held,
        })
    return rows

