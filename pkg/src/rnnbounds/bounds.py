"""Complexity and generalization bounds for recurrent cells.

All bounds are evaluated in log space and exponentiated at the end, so huge
geometric ratios (``base**t`` beyond the double range) still give finite
log values and an ``overflow`` flag instead of ``inf``/``nan`` arithmetic.
Logarithms are natural, and every ``log(x)`` that sits under a square root or
acts as a multiplier is clamped to ``log(max(x, e))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .audit import NormProfile
from .errors import InvalidInputError
from .linalg import UNIT_BASE_ATOL, geometric_ratio

_LOG_MAX = math.log(np.finfo(float).max)


def _log(x: float) -> float:
    if x < 0:
        raise InvalidInputError(f"expected a non-negative quantity, got {x}")
    return -math.inf if x == 0 else math.log(x)


def _clamped(log_arg: float) -> float:
    """``log(max(arg, e))`` given ``log(arg)``."""
    return max(1.0, log_arg)


def _lse(*logs) -> float:
    return float(np.logaddexp.reduce(np.array(logs, dtype=float)))


@dataclass
class BoundQuery:
    """Everything a bound evaluator needs besides the norms themselves.

    ``B_x`` falls back to ``profile.B_x``; ``b`` is the entrywise bound of
    the hidden activation.
    """

    profile: NormProfile
    t: int
    m: int
    gamma: float
    rho_h: float = 1.0
    rho_y: float = 1.0
    b: float = 1.0
    delta: float = 0.05
    K: int | None = None
    B_x: float | None = None

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 1:
            raise InvalidInputError(f"t must be a positive integer, got {self.t}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidInputError(f"m must be a positive integer, got {self.m}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.delta < 1:
            raise InvalidInputError(f"delta must lie in (0, 1), got {self.delta}")
        if self.B_x is None:
            self.B_x = self.profile.B_x
        if self.B_x is None:
            raise InvalidInputError("input norm bound B_x missing from query and profile")

    @classmethod
    def from_model(cls, profile, acts, **kw):
        sigma_h, sigma_y = acts
        return cls(profile, rho_h=sigma_h.rho, rho_y=sigma_y.rho, b=sigma_h.b, **kw)


@dataclass
class BoundReport:
    bound_id: str
    value: float
    log_value: float
    overflow: bool
    regime: str
    d: float
    t: int
    m: int
    gamma: float
    order_only: bool
    intermediates: dict = field(default_factory=dict)

    CSV_COLUMNS = ("bound_id", "value", "log_value", "overflow", "regime", "d", "t", "m",
                   "gamma", "order_only")

    def as_row(self) -> dict:
        return {c: getattr(self, c) for c in self.CSV_COLUMNS}


def _report(bound_id, log_value, q, d, base, order_only, **intermediates):
    overflow = log_value > _LOG_MAX
    value = math.inf if overflow else math.exp(log_value)
    return BoundReport(
        bound_id, value, log_value, overflow, regime_classify(base).label, d, q.t, q.m,
        q.gamma, order_only, intermediates,
    )


class Regime(NamedTuple):
    label: str
    order: str


def regime_classify(x: float) -> Regime:
    """Contractive (I), critical (II) or expansive (III) recurrent gain."""
    if x < 0:
        raise InvalidInputError(f"recurrent gain must be non-negative, got {x}")
    if x < 1 - UNIT_BASE_ATOL:
        return Regime("I", "d/(sqrt(m) gamma)")
    if x <= 1 + UNIT_BASE_ATOL:
        return Regime("II", "d t/(sqrt(m) gamma)")
    return Regime("III", "sqrt(d^3 t)/(sqrt(m) gamma)")


def _vanilla_parts(q: BoundQuery):
    p = q.profile
    beta = q.rho_h * p.B("U")
    ratio = geometric_ratio(beta, q.t)
    d = p.width
    log_lam = min(_log(q.b) + 0.5 * _log(d), _log(q.rho_h * p.B("W") * q.B_x) + ratio.log_value)
    log_r = _log(q.rho_y * p.B("V")) + log_lam
    log_c = _log(q.rho_y * q.rho_h * p.B("V") * p.B("W") * q.B_x) + _log(max(1.0, beta))
    return beta, ratio, d, log_lam, log_r, log_c


def class_range(q: BoundQuery) -> float:
    """Range ``r`` of the vanilla margin class, ``rho_y B_V min{b sqrt(d), ...}``."""
    _, _, _, _, log_r, _ = _vanilla_parts(q)
    return math.exp(log_r) if log_r < _LOG_MAX else math.inf


def vanilla_erc_bound(q: BoundQuery) -> BoundReport:
    """Explicit-constant Rademacher bound for the vanilla ramp-loss class.

    ``4/(m g) + 24/(sqrt(m) g) * sqrt(3 d^2 r^2 log(24 c sqrt(d m) t R))``
    with ``R`` the geometric ratio of ``rho_h B_U`` over ``t`` steps.
    """
    beta, ratio, d, log_lam, log_r, log_c = _vanilla_parts(q)
    log_arg = math.log(24) + log_c + 0.5 * math.log(d * q.m) + math.log(q.t) + ratio.log_value
    L = _clamped(log_arg)
    log_t1 = math.log(4) - math.log(q.m * q.gamma)
    log_t2 = (math.log(24) - 0.5 * math.log(q.m) - math.log(q.gamma)
              + 0.5 * (math.log(3) + 2 * math.log(d) + 2 * log_r + math.log(L)))
    return _report(
        "vanilla_erc", _lse(log_t1, log_t2), q, d, beta, False,
        beta=beta, ratio=ratio.value, log_ratio=ratio.log_value,
        ratio_log_domain=ratio.computed_in_log_domain, lambda_t=_exp(log_lam), r=_exp(log_r),
        c=_exp(log_c), log_argument=log_arg,
    )


def _exp(x):
    return math.inf if x > _LOG_MAX else math.exp(x)


def delta_term(m: int, delta: float) -> float:
    return 3.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * m))


def vanilla_generalization_bound(q: BoundQuery, empirical_ramp_risk: float) -> float:
    """``risk + 2 * ERC + 3 sqrt(log(2/delta) / (2m))``."""
    if not 0.0 <= empirical_ramp_risk <= 1.0:
        raise InvalidInputError(f"empirical ramp risk must lie in [0, 1], got {empirical_ramp_risk}")
    return empirical_ramp_risk + 2.0 * vanilla_erc_bound(q).value + delta_term(q.m, q.delta)


def lipschitz_constants(q: BoundQuery):
    """``(L_U, L_V, L_W)`` for the output of a vanilla cell after ``t`` steps, as logs."""
    p = q.profile
    ratio = geometric_ratio(q.rho_h * p.B("U"), q.t)
    log_a = _log(q.rho_y * q.rho_h * q.B_x) + ratio.log_value
    return (
        _log(q.rho_h * p.B("V") * p.B("W") * q.t) + log_a,
        _log(p.B("W")) + log_a,
        _log(p.B("V")) + log_a,
    )


def refined_21_bound(q: BoundQuery, squared_21: bool = False) -> BoundReport:
    """Rademacher bound under (2,1)-norm caps, with explicit constants.

    ``4/(m g) + 432/(g sqrt(m)) sqrt(M_U L_U^2 + M_V L_V^2 + M_W L_W^2)
    sqrt(log 2d^2) log(2 m sqrt(d))`` with ``d = max(d_x, d_y, d_h)``.
    ``squared_21`` replaces each ``M`` by ``M^2``.
    """
    p = q.profile
    try:
        Ms = [p.M(n) for n in ("U", "V", "W")]
    except InvalidInputError as exc:
        raise InvalidInputError(f"refined (2,1) bound needs M_U, M_V, M_W: {exc}") from None
    power = 2 if squared_21 else 1
    log_L = lipschitz_constants(q)
    log_S = _lse(*(power * _log(M) + 2 * lg for M, lg in zip(Ms, log_L)))
    d = p.max_dim
    log_t1 = math.log(4) - math.log(q.m * q.gamma)
    log_t2 = (math.log(432) - math.log(q.gamma) - 0.5 * math.log(q.m) + 0.5 * log_S
              + 0.5 * math.log(_clamped(math.log(2 * d * d)))
              + math.log(_clamped(math.log(2 * q.m * math.sqrt(d)))))
    beta = q.rho_h * p.B("U")
    return _report(
        "refined_21_squared" if squared_21 else "refined_21", _lse(log_t1, log_t2), q, d, beta,
        False, beta=beta, L_U=_exp(log_L[0]), L_V=_exp(log_L[1]), L_W=_exp(log_L[2]),
        S=_exp(log_S),
    )


def pacbayes_bound(q: BoundQuery) -> BoundReport:
    """Frobenius-norm (PAC-Bayes route) Rademacher order with constant 1.

    ``a' B_U min{b sqrt(d), rho_h B_x B_W R} S_F R sqrt(d ln d) / (sqrt(m) g)``
    with ``a' = rho_h rho_y B_W B_x`` and ``S_F`` the sum of Frobenius norms.
    """
    if q.m < 2:
        raise InvalidInputError("PAC-Bayes bound needs m >= 2")
    p = q.profile
    beta = q.rho_h * p.B("U")
    ratio = geometric_ratio(beta, q.t)
    d = p.width
    log_lam = min(_log(q.b) + 0.5 * _log(d), _log(q.rho_h * p.B("W") * q.B_x) + ratio.log_value)
    S_F = p.F("U") + p.F("V") + p.F("W")
    log_alpha = _log(q.rho_h * q.rho_y * p.B("W") * q.B_x)
    log_v = (log_alpha + _log(p.B("U")) + log_lam + _log(S_F) + ratio.log_value
             + 0.5 * (math.log(d) + math.log(_clamped(math.log(d))))
             - 0.5 * math.log(q.m) - math.log(q.gamma))
    return _report("pacbayes", log_v, q, d, beta, True, beta=beta, S_F=S_F,
                   lambda_t=_exp(log_lam), ratio=ratio.value)


def pacbayes_gap(kl: float, m: int, delta: float) -> float:
    """``4 sqrt((KL + log(6m/delta)) / (m - 1))`` for a perturbed predictor."""
    if m < 2 or kl < 0 or not 0 < delta < 1:
        raise InvalidInputError("need m >= 2, KL >= 0 and delta in (0, 1)")
    return 4.0 * math.sqrt((kl + math.log(6.0 * m / delta)) / (m - 1))


@dataclass
class Comparison:
    reports: dict

    def __getitem__(self, name):
        return self.reports[name]

    def log_ratio(self, a: str, b: str) -> float:
        return self.reports[a].log_value - self.reports[b].log_value

    def ratios(self) -> dict:
        names = list(self.reports)
        return {(a, b): math.exp(min(self.log_ratio(a, b), _LOG_MAX))
                for a in names for b in names if a != b}


COMPARISON_IDS = ("ours", "bound1", "bound2", "bound3")


def comparison_bounds(q: BoundQuery, divide_by_gamma: bool = True) -> Comparison:
    """The four complexity expressions compared on trained models, log factors dropped.

    ``ours``:   ``d B_V min{sqrt(d), B_W R} sqrt(log R)``
    ``bound1``: ``d t^2 B_V B_W max{1, B_U^t}``
    ``bound2``: ``B_V B_W (M_U + M_V + M_W) t R``
    ``bound3``: ``(min{sqrt(d), B_W R} B_U + B_W) R sqrt(d (B_UF^2 + B_WF^2 + B_VF^2))``

    ``R`` is the geometric ratio of ``B_U`` (no activation constant), ``d``
    the combined width.  With ``divide_by_gamma`` every value carries ``1/gamma``.
    """
    p = q.profile
    B_U, B_V, B_W = p.B("U"), p.B("V"), p.B("W")
    ratio = geometric_ratio(B_U, q.t)
    lR = ratio.log_value
    d = p.width
    ld = math.log(d)
    lmin = min(0.5 * ld, _log(B_W) + lR)
    logs = {
        "ours": ld + _log(B_V) + lmin + 0.5 * math.log(_clamped(lR)),
        "bound1": ld + 2 * math.log(q.t) + _log(B_V) + _log(B_W) + max(0.0, q.t * _log(B_U)),
        "bound2": (_log(B_V) + _log(B_W) + _log(p.M("U") + p.M("V") + p.M("W"))
                   + math.log(q.t) + lR),
        "bound3": (_lse(lmin + _log(B_U), _log(B_W)) + lR
                   + 0.5 * (ld + _log(p.F("U") ** 2 + p.F("W") ** 2 + p.F("V") ** 2))),
    }
    shift = math.log(q.gamma) if divide_by_gamma else 0.0
    return Comparison({
        k: _report(k, v - shift, q, d, B_U, True, ratio=ratio.value, log_ratio=lR)
        for k, v in logs.items()
    })


def _gated_bound(q: BoundQuery, bound_id, W_name, beta, theta):
    p = q.profile
    if beta is None or theta is None:
        beta, theta = p.beta, p.theta
    if beta is None or theta is None:
        raise InvalidInputError(f"{bound_id} needs gate statistics beta and theta")
    d = p.max_dim
    rb = geometric_ratio(beta, q.t)
    rt = geometric_ratio(theta, q.t)
    ld = math.log(d)
    lmin = min(0.5 * ld, _log(p.B(W_name) * q.B_x) + rb.log_value)
    log_arg = rt.log_value + ld + 0.5 * math.log(q.m)
    log_v = (ld + _log(q.rho_y * p.B("V")) + lmin + 0.5 * math.log(_clamped(log_arg))
             - 0.5 * math.log(q.m) - math.log(q.gamma))
    return _report(bound_id, log_v, q, d, beta, True, beta=beta, theta=theta,
                   ratio_beta=rb.value, ratio_theta=rt.value)


def mgu_bound(q: BoundQuery, beta: float | None = None, theta: float | None = None) -> BoundReport:
    """``d rho_y B_V min{sqrt(d), B_Wh B_x R(beta)} sqrt(log(R(theta) d sqrt(m))) / (sqrt(m) g)``."""
    return _gated_bound(q, "mgu", "W_h", beta, theta)


def lstm_bound(q: BoundQuery, beta: float | None = None, theta: float | None = None) -> BoundReport:
    """Same shape as :func:`mgu_bound` with ``B_Wc`` in place of ``B_Wh``."""
    return _gated_bound(q, "lstm", "W_c", beta, theta)


def conv_bound(q: BoundQuery, k: int | None = None) -> BoundReport:
    """``B_x k t sqrt(log(d t sqrt(m))) / (sqrt(m) g)`` for conv cells, constant 1."""
    p = q.profile
    k = k if k is not None else p.k
    if k is None or k < 1:
        raise InvalidInputError("conv bound needs the filter size k")
    d = p.width
    log_arg = math.log(d * q.t) + 0.5 * math.log(q.m)
    log_v = (_log(q.B_x) + math.log(k) + math.log(q.t) + 0.5 * math.log(_clamped(log_arg))
             - 0.5 * math.log(q.m) - math.log(q.gamma))
    return _report("conv", log_v, q, d, q.rho_h, True, k=k)


def covering_log(q: BoundQuery, eps, simplified: bool = False):
    """Log covering number of the vanilla output class at scale ``eps``.

    ``3 d^2 log(1 + 6 c sqrt(d) t R / eps)``, or the small-scale form
    ``3 d^2 log(12 c sqrt(d) t R / eps)`` when ``simplified``.  Accepts arrays.
    """
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise InvalidInputError("covering scale must be positive")
    _, ratio, d, _, _, log_c = _vanilla_parts(q)
    log_k = 0.5 * math.log(d) + math.log(q.t) + ratio.log_value + log_c
    if simplified:
        out = 3 * d * d * (math.log(12) + log_k - np.log(eps))
    else:
        out = 3 * d * d * np.logaddexp(0.0, math.log(6) + log_k - np.log(eps))
    return float(out) if out.ndim == 0 else out


def margin_covering_log(q: BoundQuery):
    """Covering of the margin class at ``eps``, via the output class at ``eps/2``."""
    return lambda eps: covering_log(q, np.asarray(eps, dtype=float) / 2.0)


def matrix_covering_log(d1: int, d2: int, lam: float, eps: float) -> float:
    """Frobenius covering of the spectral ball of radius ``lam`` in ``R^{d1 x d2}``."""
    if eps <= 0:
        raise InvalidInputError("covering scale must be positive")
    return d1 * d2 * math.log1p(2.0 * min(math.sqrt(d1), math.sqrt(d2)) * lam / eps)


def two_one_covering_log(d1: int, d2: int, lam: float, eps: float) -> float:
    """Spectral covering of the (2,1)-ball of radius ``lam``: ``lam^2/eps^2 log(2 d1 d2)``."""
    if eps <= 0:
        raise InvalidInputError("covering scale must be positive")
    return (lam / eps) ** 2 * math.log(2 * d1 * d2)


class DudleyResult(NamedTuple):
    value: float
    alpha: float


def dudley_erc(cov_log, r: float, m: int, n_points: int = 1024, n_alpha: int = 200,
               return_alpha: bool = False):
    """Numerically minimize the entropy integral over a log grid of cut-offs.

    ``4a/sqrt(m) + 12/m * int_a^{2 r sqrt(m)} sqrt(cov_log(eps)) d eps``.  The
    grid always contains ``a = 1/sqrt(m)``.  The integral uses the composite
    midpoint rule in ``log eps`` with ``n_points`` cells.
    """
    if r < 0:
        raise InvalidInputError("class range r must be non-negative")
    if n_points < 1024:
        raise InvalidInputError("use at least 1024 quadrature cells")
    sm = math.sqrt(m)
    upper = 2.0 * r * sm
    top = max(upper, 1.0 / sm)
    alphas = np.unique(np.append(np.logspace(math.log10(top) - 8, math.log10(top), n_alpha), 1.0 / sm))
    values = 4.0 * alphas / sm
    inside = alphas < upper
    if np.any(inside):
        a = alphas[inside]
        la, lu = np.log(a), math.log(upper)
        frac = (np.arange(n_points) + 0.5) / n_points
        u = la[:, None] + (lu - la)[:, None] * frac[None, :]
        eps = np.exp(u)
        integrand = np.sqrt(np.maximum(cov_log(eps.ravel()).reshape(eps.shape), 0.0)) * eps
        integral = integrand.sum(axis=1) * (lu - la) / n_points
        values[inside] += 12.0 / m * integral
    i = int(np.argmin(values))
    res = DudleyResult(float(values[i]), float(alphas[i]))
    return res if return_alpha else res.value
