"""Runtime certificates: the convergence-analysis inequalities along a trace.

Each check compares ``lhs <= rhs`` at every index and records the margin
``rhs - lhs``. A check passes iff ``margin_k >= -slack_k`` for all k, where

    slack_k = ABS_FLOOR + REL_ROUNDOFF * (|lhs_k| + sum |rhs terms|) + oracle_k

and ``oracle_k`` propagates the inner-oracle error bound ``e`` on y*
(``trace.y_error``; zero for closed forms) through every recorded quantity:

* ``delta``: ``2 e sqrt(delta) + e^2``
* ``||grad phi||^2``: ``2 L_xy e ||grad phi|| + (L_xy e)^2``
* ``||y*_{k+1} - y*_k||^2``: ``4 e sqrt(.) + 4 e^2``
* ``phi``: ``mu e^2 / 2``

The inequalities presuppose that the trace really was generated by the
scheme. When the problem is passed in, every report therefore also
replays the update rule (``update_rule``) and recomputes the recorded
oracle quantities (``consistency_*``), so that corrupting any single entry
of a trace is detected.
"""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import OutOfRangeStepSize, TraceIncomplete
from .problem import MinMaxProblem, SmoothnessConstants
from .stepsize import SQRT2, bounds_gdrga, bounds_pdrga, gamma_gdrga, gamma_pdrga, theta_star
from .trace import IterateTrace, annotate

logger = logging.getLogger(__name__)

__all__ = [
    "CheckResult",
    "CertificateReport",
    "check_descent_inequality_gdrga",
    "check_delta_recursion",
    "check_ystar_gap_pdrga",
    "check_descent_inequality_pdrga",
    "check_update_rule",
    "check_consistency",
    "certify",
    "theorem_constants",
    "StationarityReport",
    "stationarity_report",
    "rate_slope",
    "json_safe",
]

ABS_FLOOR = 1e-12
REL_ROUNDOFF = 1e-10


def json_safe(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.floating, np.integer)):
        return json_safe(v.item())
    if isinstance(v, dict):
        return {k: json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [json_safe(x) for x in v]
    return v


@dataclass
class CheckResult:
    name: str
    margins: list
    slack: list
    passed: bool
    skipped: bool = False
    reason: str = ""
    detail: dict = field(default_factory=dict)

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else math.inf

    @property
    def max_slack(self) -> float:
        return max(self.slack) if self.slack else 0.0

    @property
    def worst_index(self) -> Optional[int]:
        if not self.margins:
            return None
        return int(np.argmin(np.asarray(self.margins) + np.asarray(self.slack)))

    def summary(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "skipped": self.skipped,
            "reason": self.reason,
            "n": len(self.margins),
            "min_margin": self.min_margin if self.margins else None,
            "max_slack": self.max_slack,
            "worst_index": self.worst_index,
            "detail": dict(self.detail),
        }

    @classmethod
    def skip(cls, name, reason, **detail):
        return cls(name, [], [], True, True, reason, detail)


@dataclass
class CertificateReport:
    checks: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.skipped)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list:
        return [c.name for c in self.checks]

    def merge(self, other: "CertificateReport") -> "CertificateReport":
        have = set(self.names())
        checks = self.checks + [c for c in other.checks if c.name not in have]
        return CertificateReport(checks, {**self.summary, **other.summary})

    def as_dict(self, margins: bool = False) -> dict:
        out = {"passed": self.passed, "summary": self.summary, "checks": []}
        for c in self.checks:
            d = c.summary()
            if margins:
                d["margins"] = list(c.margins)
                d["slack"] = list(c.slack)
            out["checks"].append(d)
        return json_safe(out)

    def to_json(self, margins: bool = False) -> str:
        return json.dumps(self.as_dict(margins), indent=2, allow_nan=False) + "\n"

    def margins_csv(self) -> str:
        buf = io.StringIO()
        buf.write("check,index,margin,slack\n")
        for c in self.checks:
            for i, (m, s) in enumerate(zip(c.margins, c.slack)):
                buf.write(f"{c.name},{i},{m!r},{s!r}\n")
        return buf.getvalue()


# --------------------------------------------------------------------------
# trace quantities and their error bounds


@dataclass
class _Q:
    phi: np.ndarray
    G: np.ndarray  # ||grad phi(x_k)||^2
    delta: np.ndarray
    step: np.ndarray  # ||y*_{k+1} - y*_k||^2
    gap: np.ndarray  # ||y*_{k+1} - y_k||^2
    e_phi: float
    e_G: np.ndarray
    e_delta: np.ndarray
    e_step: np.ndarray
    e_gap: np.ndarray


def _quantities(trace: IterateTrace, c: SmoothnessConstants) -> _Q:
    if not trace.records:
        raise TraceIncomplete("empty trace")
    for r in trace.records:
        if not (np.all(np.isfinite(r.y_star)) and math.isfinite(r.phi) and math.isfinite(r.grad_norm)):
            raise TraceIncomplete(f"record {r.k} lacks y*, phi or grad phi (was tracing off?)")
    e = float(trace.y_error)
    if not math.isfinite(e):
        raise TraceIncomplete("unknown oracle error bound")
    gn = trace.grad_norms
    G = gn**2
    delta = trace.deltas
    step = trace.ystar_steps_sq()
    gap = trace.ystar_gap_sq()
    le = c.L_xy * e
    return _Q(
        phi=trace.phis,
        G=G,
        delta=delta,
        step=step,
        gap=gap,
        e_phi=c.mu * e * e / 2.0,
        e_G=2.0 * le * gn + le * le,
        e_delta=2.0 * e * np.sqrt(delta) + e * e,
        e_step=4.0 * e * np.sqrt(step) + 4.0 * e * e,
        e_gap=2.0 * e * np.sqrt(gap) + e * e,
    )


def _result(name, lhs, terms, oracle, detail=None) -> CheckResult:
    """Assemble ``lhs <= sum(terms)`` into margins and slack."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.zeros_like(lhs)
    scale = np.abs(lhs).copy()
    for t in terms:
        t = np.broadcast_to(np.asarray(t, dtype=float), lhs.shape)
        rhs = rhs + t
        scale = scale + np.abs(t)
    margins = rhs - lhs
    slack = ABS_FLOOR + REL_ROUNDOFF * scale + np.broadcast_to(np.asarray(oracle, dtype=float), lhs.shape)
    passed = bool(np.all(margins >= -slack))
    return CheckResult(name, margins.tolist(), slack.tolist(), passed, detail=detail or {})


def _geometric_sum(vals, errs, g):
    """``S_k = sum_{j<k} g^{k-1-j} v_j`` for k = 0..len(vals), with errors."""
    S = np.zeros(len(vals) + 1)
    E = np.zeros(len(vals) + 1)
    for k, (v, ev) in enumerate(zip(vals, errs)):
        S[k + 1] = g * S[k] + v
        E[k + 1] = abs(g) * E[k] + ev
    return S, E


def _steps(trace, cfg):
    if cfg is None:
        return trace.eta_x, trace.tau
    return cfg.eta_x, cfg.tau


def _scheme(trace, scheme):
    return str(getattr(scheme, "value", scheme) or trace.scheme).lower()


def _with_integrity(rep: CertificateReport, trace, problem) -> CertificateReport:
    if problem is None:
        return rep
    extra = check_update_rule(trace, problem).merge(check_consistency(trace, problem))
    return rep.merge(extra)


# --------------------------------------------------------------------------
# lemma-level checks


def check_descent_inequality_gdrga(trace: IterateTrace, c: SmoothnessConstants, cfg=None, problem=None) -> CertificateReport:
    """Cumulative descent inequality of the explicit x-step, for every N.

    ``phi_N <= phi_0 - (eta/2)(1 - 2 L_phi eta) sum_{k<N} G_k
    + (eta/2)(1 + 2 L_phi eta) L_xy^2 sum_{k<N} delta_k``.
    Holds for any eta_x; PPGA shares the x-step so its traces qualify too.
    """
    if trace.scheme not in ("gdrga", "ppga"):
        raise ValueError(f"descent inequality for explicit x-steps does not apply to {trace.scheme}")
    q = _quantities(trace, c)
    eta, _ = _steps(trace, cfg)
    a = 0.5 * eta * (1.0 - 2.0 * c.L_phi * eta)
    b = 0.5 * eta * (1.0 + 2.0 * c.L_phi * eta) * c.L_xy**2
    cG = np.concatenate([[0.0], np.cumsum(q.G[:-1])])
    cD = np.concatenate([[0.0], np.cumsum(q.delta[:-1])])
    eG = np.concatenate([[0.0], np.cumsum(q.e_G[:-1])])
    eD = np.concatenate([[0.0], np.cumsum(q.e_delta[:-1])])
    oracle = 2.0 * q.e_phi + abs(a) * eG + b * eD
    res = _result(
        "descent_gdrga",
        q.phi,
        [np.full_like(q.phi, q.phi[0]), -a * cG, b * cD],
        oracle,
        {"grad_coeff": a, "delta_coeff": b},
    )
    return _with_integrity(CertificateReport([res]), trace, problem)


def check_delta_recursion(
    trace: IterateTrace,
    c: SmoothnessConstants,
    cfg=None,
    scheme=None,
    problem=None,
    strict: bool = False,
) -> CertificateReport:
    """General one-step delta recursion plus the scheme's geometric bound.

    * ``delta_general``: ``delta_{k+1} <= (1 - tau/2kappa) delta_k + (kappa/tau) ||y*_{k+1} - y*_k||^2``
    * GD-RGA ``delta_geometric``: ``delta_k <= gamma^k delta_0 + ((gamma - 1 + tau/2kappa)/L_xy^2) sum_j gamma^{k-1-j} G_j``
    * PD-RGA ``delta_geometric``: the same shape with ``1/((1+theta) L_xy^2)``
      and ``G_{j+1}`` at ``theta = tau/(sqrt2 kappa)``, and
      ``ystar_gap_corollary``: the resulting bound on ``||y*_{k+1} - y_k||^2``.

    Geometric bounds are skipped (or raise with ``strict=True``) when eta_x
    is not strictly below the scheme's step-size bound.
    """
    sch = _scheme(trace, scheme)
    q = _quantities(trace, c)
    eta, tau = _steps(trace, cfg)
    k_y = c.kappa_y
    checks = []
    if sch == "ppga":
        checks.append(CheckResult.skip("delta_general", "the ascent step of PPGA reads x_k, not x_{k+1}"))
    else:
        r = 1.0 - tau / (2.0 * k_y)
        checks.append(
            _result(
                "delta_general",
                q.delta[1:],
                [r * q.delta[:-1], (k_y / tau) * q.step],
                q.e_delta[1:] + r * q.e_delta[:-1] + (k_y / tau) * q.e_step,
                {"contraction": r, "step_coeff": k_y / tau},
            )
        )

    def out_of_range(name, bound):
        msg = f"eta_x = {eta:g} is not below the {sch} bound {bound:g}"
        if strict:
            raise OutOfRangeStepSize(msg)
        return CheckResult.skip(name, msg, bound=bound)

    L2 = c.L_xy**2
    if sch == "gdrga":
        bound = bounds_gdrga(c, tau)
        if not eta < bound:
            checks.append(out_of_range("delta_geometric", bound))
        else:
            g = gamma_gdrga(c, tau, eta).value
            coef = (g - 1.0 + tau / (2.0 * k_y)) / L2
            S, E = _geometric_sum(q.G[:-1], q.e_G[:-1], g)
            pw = g ** np.arange(len(q.delta))
            checks.append(
                _result(
                    "delta_geometric",
                    q.delta,
                    [pw * q.delta[0], coef * S],
                    q.e_delta + pw * q.e_delta[0] + coef * E,
                    {"gamma": g, "grad_coeff": coef},
                )
            )
    elif sch == "pdrga":
        bound = bounds_pdrga(c, tau)
        # the weak-convexity part of the bound does not enter these lemmas
        conc = tau * c.beta / (SQRT2 * (SQRT2 * k_y + tau))
        if not eta < conc:
            checks.append(out_of_range("delta_geometric", conc))
            checks.append(out_of_range("ystar_gap_corollary", conc))
        else:
            if not eta < bound:
                logger.warning("eta_x=%g violates eta_x*rho < 1; delta bounds still checked", eta)
            theta = theta_star(tau, k_y).pdrga_theta
            g = gamma_pdrga(c, tau, eta).value
            coef = (g - 1.0 + tau / (2.0 * k_y)) / ((1.0 + theta) * L2)
            S, E = _geometric_sum(q.G[1:], q.e_G[1:], g)
            pw = g ** np.arange(len(q.delta))
            checks.append(
                _result(
                    "delta_geometric",
                    q.delta,
                    [pw * q.delta[0], coef * S],
                    q.e_delta + pw * q.e_delta[0] + coef * E,
                    {"gamma": g, "theta": theta, "grad_coeff": coef},
                )
            )
            s2 = SQRT2 * k_y + tau
            den = c.beta**2 * tau - 2.0 * s2 * eta**2
            P = s2 * c.beta**2 * tau / (SQRT2 * k_y * den)
            Q = 2.0 * s2 * eta**2 / (L2 * den)
            R = (g - 1.0 + tau / (2.0 * k_y)) * c.beta**2 * tau / (L2 * den)
            n = len(q.gap)
            checks.append(
                _result(
                    "ystar_gap_corollary",
                    q.gap,
                    [P * pw[:n] * q.delta[0], Q * q.G[1:], R * S[:n]],
                    q.e_gap + P * pw[:n] * q.e_delta[0] + Q * q.e_G[1:] + R * E[:n],
                    {"gamma": g, "P": P, "Q": Q, "R": R},
                )
            )
    else:
        checks.append(CheckResult.skip("delta_geometric", f"no geometric bound for {sch}"))
    return _with_integrity(CertificateReport(checks), trace, problem)


def check_ystar_gap_pdrga(trace: IterateTrace, c: SmoothnessConstants, cfg=None, theta: Optional[float] = None, problem=None) -> CertificateReport:
    """``||y*_{k+1} - y_k||^2 <= (1+theta) beta^2/(beta^2 - D) delta_k + D/(L_xy^2 (beta^2 - D)) G_{k+1}``

    with ``D = 2 eta_x^2 (1 + 1/theta)``; requires ``beta^2 > D``.
    ``theta`` defaults to ``tau/(sqrt2 kappa)``.
    """
    if trace.scheme != "pdrga":
        raise ValueError("the y* gap lemma is stated for PD-RGA traces")
    eta, tau = _steps(trace, cfg)
    if theta is None:
        theta = theta_star(tau, c.kappa_y).pdrga_theta
    if not theta > 0:
        raise ValueError("theta must be positive")
    D = 2.0 * eta**2 * (1.0 + 1.0 / theta)
    b2 = c.beta**2
    if not b2 > D:
        raise OutOfRangeStepSize(f"need eta_x^2 < beta^2/(2(1+1/theta)); beta^2 - D = {b2 - D:g}")
    q = _quantities(trace, c)
    A = (1.0 + theta) * b2 / (b2 - D)
    B = D / (c.L_xy**2 * (b2 - D))
    res = _result(
        "ystar_gap",
        q.gap,
        [A * q.delta[:-1], B * q.G[1:]],
        q.e_gap + A * q.e_delta[:-1] + B * q.e_G[1:],
        {"theta": theta, "delta_coeff": A, "grad_coeff": B},
    )
    return _with_integrity(CertificateReport([res]), trace, problem)


def check_descent_inequality_pdrga(trace: IterateTrace, c: SmoothnessConstants, cfg=None, problem=None) -> CertificateReport:
    """``phi_N <= phi_0 - (eta/2)(1 - 2 rho eta) sum_{k<N} G_{k+1}
    + (eta/2)(1 + 2 rho eta) L_xy^2 sum_{k<N} ||y*_{k+1} - y_k||^2``."""
    if trace.scheme != "pdrga":
        raise ValueError("the proximal descent inequality is stated for PD-RGA traces")
    q = _quantities(trace, c)
    eta, _ = _steps(trace, cfg)
    a = 0.5 * eta * (1.0 - 2.0 * c.rho * eta)
    b = 0.5 * eta * (1.0 + 2.0 * c.rho * eta) * c.L_xy**2
    cG = np.concatenate([[0.0], np.cumsum(q.G[1:])])
    cP = np.concatenate([[0.0], np.cumsum(q.gap)])
    eG = np.concatenate([[0.0], np.cumsum(q.e_G[1:])])
    eP = np.concatenate([[0.0], np.cumsum(q.e_gap)])
    res = _result(
        "descent_pdrga",
        q.phi,
        [np.full_like(q.phi, q.phi[0]), -a * cG, b * cP],
        2.0 * q.e_phi + abs(a) * eG + b * eP,
        {"grad_coeff": a, "gap_coeff": b},
    )
    return _with_integrity(CertificateReport([res]), trace, problem)


# --------------------------------------------------------------------------
# trace integrity


def _config_of(trace):
    from .solvers import StepSizeConfig

    return StepSizeConfig(trace.eta_x, trace.eta_y, trace.tau)


def check_update_rule(trace: IterateTrace, p: MinMaxProblem, rel: float = 1e-9) -> CertificateReport:
    """Replay each step from ``(x_k, y_k)`` and compare with ``(x_{k+1}, y_{k+1})``.

    Margin is ``-||replayed - recorded||``; slack ``rel * (1 + ||recorded||)``.
    """
    from .solvers import SolverState, step

    cfg = _config_of(trace)
    margins, slack = [], []
    recs = trace.records
    for k in range(len(recs) - 1):
        s = SolverState(recs[k].x, recs[k].y, k)
        nxt = step(p, trace.scheme, s, cfg)
        diff = math.hypot(np.linalg.norm(nxt.x - recs[k + 1].x), np.linalg.norm(nxt.y - recs[k + 1].y))
        margins.append(-diff)
        slack.append(rel * (1.0 + math.hypot(np.linalg.norm(recs[k + 1].x), np.linalg.norm(recs[k + 1].y))))
    passed = all(m >= -s for m, s in zip(margins, slack))
    return CertificateReport([CheckResult("update_rule", margins, slack, passed, detail={"scheme": trace.scheme})])


def check_consistency(trace: IterateTrace, p: MinMaxProblem, rel: float = 1e-9) -> CertificateReport:
    """Recompute phi, ||grad phi|| and delta from the stored ``(x_k, y_k)``.

    Both the stored and the recomputed values carry the oracle error, so
    the allowed deviation is twice the single-evaluation bound.
    """
    _quantities(trace, p.constants)  # raises on incomplete traces
    fresh = annotate(p, trace.xs, trace.ys, trace.scheme, trace.eta_x, trace.eta_y, trace.tau, trace.oracle_tol)
    e = max(trace.y_error, fresh.y_error)
    le = p.constants.L_xy * e
    checks = []
    for name, old, new, err in (
        ("consistency_delta", trace.deltas, fresh.deltas, 2.0 * (2.0 * e * np.sqrt(fresh.deltas) + e * e)),
        ("consistency_phi", trace.phis, fresh.phis, np.full(len(fresh), p.constants.mu * e * e)),
        ("consistency_grad", trace.grad_norms, fresh.grad_norms, np.full(len(fresh), 2.0 * le)),
    ):
        diff = np.abs(old - new)
        sl = ABS_FLOOR + rel * (np.abs(old) + np.abs(new)) + err
        margins = -diff
        checks.append(CheckResult(name, margins.tolist(), sl.tolist(), bool(np.all(margins >= -sl))))
    return CertificateReport(checks)


# --------------------------------------------------------------------------
# stationarity constants and rate


def theorem_constants(
    c: SmoothnessConstants,
    scheme: str,
    tau: float,
    eta_x: float,
    delta0: float,
    phi0: float,
    phi_lower_bound: Optional[float],
) -> dict:
    """Constants ``C1, C2, C3`` and ``C = (C3 + C2)/C1`` of the stationarity bound.

    Two versions are reported. ``printed`` takes the gradient-sum
    coefficient with a plus sign in front of the correction term;
    ``derived`` re-assembles it from the descent and delta lemmas, which
    gives a minus sign (``(gamma - 1 + tau/2kappa)/(1 - gamma) = -1 + tau/(2 kappa (1-gamma))``).
    The certificate uses the weaker of the two (smaller C1, larger C2);
    C is ``None`` when that C1 is not positive or C3 is unknown.
    """
    scheme = str(getattr(scheme, "value", scheme)).lower()
    k_y, b = c.kappa_y, c.beta
    L2 = c.L_xy**2
    out = {"scheme": scheme, "eta_x": eta_x, "tau": tau, "in_range": False}
    if scheme == "gdrga":
        if not eta_x < bounds_gdrga(c, tau):
            return {**out, "C": None, "reason": "eta_x not below the GD-RGA bound"}
        g = gamma_gdrga(c, tau, eta_x).value
        m = 1.0 + 2.0 * c.L_phi * eta_x
        corr = m * tau / (2.0 * k_y * (1.0 - g))
        C2 = eta_x * m * L2 * delta0 / (2.0 * (1.0 - g))
    elif scheme == "pdrga":
        conc = tau * b / (SQRT2 * (SQRT2 * k_y + tau))
        if not eta_x < conc:
            return {**out, "C": None, "reason": "eta_x not below the PD-RGA bound"}
        g = gamma_pdrga(c, tau, eta_x).value
        s2 = SQRT2 * k_y + tau
        E = b * b * tau - 2.0 * s2 * eta_x**2
        m = 1.0 + 2.0 * c.rho * eta_x
        corr = m * tau**2 * b * b / (2.0 * k_y * (1.0 - g) * E)
        C2 = 0.5 * eta_x * m * s2 * tau * b * b * L2 * delta0 / (SQRT2 * k_y * E * (1.0 - g))
    else:
        return {**out, "C": None, "reason": f"no stationarity theorem for {scheme}"}
    C1_printed = 0.5 * eta_x * (2.0 + corr)
    C1_derived = 0.5 * eta_x * (2.0 - corr)
    C3 = None if phi_lower_bound is None else phi0 - phi_lower_bound

    def _C(C1):
        if C3 is None or not C1 > 0:
            return None
        return (C3 + C2) / C1

    C1 = min(C1_printed, C1_derived)
    if C1_printed != C1_derived:
        logger.info("stationarity constant C1: printed %.6g vs re-derived %.6g; using %.6g", C1_printed, C1_derived, C1)
    return {
        **out,
        "in_range": True,
        "gamma": g,
        "C1": C1,
        "C2": C2,
        "C3": C3,
        "C": _C(C1),
        "printed": {"C1": C1_printed, "C": _C(C1_printed)},
        "derived": {"C1": C1_derived, "C": _C(C1_derived)},
    }


@dataclass
class StationarityReport:
    epsilon: float
    first_hit: Optional[int]
    running_min: list
    C: Optional[float] = None
    predicted_N: Optional[int] = None
    rate_ok: Optional[bool] = None
    rate_margins: list = field(default_factory=list)
    hit_within_prediction: Optional[bool] = None

    def as_dict(self) -> dict:
        return json_safe(
            {
                "epsilon": self.epsilon,
                "first_hit": self.first_hit,
                "C": self.C,
                "predicted_N": self.predicted_N,
                "rate_ok": self.rate_ok,
                "hit_within_prediction": self.hit_within_prediction,
                "final_running_min": self.running_min[-1] if self.running_min else None,
            }
        )


def stationarity_report(trace: IterateTrace, epsilon: float, C: Optional[float] = None) -> StationarityReport:
    """First epsilon-stationary iterate, running minima and the rate check.

    With a constant ``C`` the bound ``min_{k<N} ||grad phi(w_k)|| <= sqrt(C/N)``
    is checked for every N the trace covers, where ``w_k = x_k`` for the
    explicit schemes and ``w_k = x_{k+1}`` for PD-RGA.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    gn = trace.grad_norms
    if not np.all(np.isfinite(gn)):
        raise TraceIncomplete("gradient norms not recorded")
    hits = np.nonzero(gn < epsilon)[0]
    first = int(hits[0]) if hits.size else None
    rmin = np.minimum.accumulate(gn)
    rep = StationarityReport(epsilon, first, rmin.tolist())
    if C is None:
        return rep
    shift = 1 if trace.scheme == "pdrga" else 0
    w = gn[shift:]
    wmin = np.minimum.accumulate(w)
    N = np.arange(1, len(w) + 1)
    margins = np.sqrt(C / N) - wmin
    rep.C = C
    rep.predicted_N = int(math.ceil(C / epsilon**2))
    rep.rate_margins = margins.tolist()
    rep.rate_ok = bool(np.all(margins >= 0))
    w_hits = np.nonzero(w < epsilon)[0]
    if w_hits.size:
        rep.hit_within_prediction = bool(w_hits[0] + shift <= rep.predicted_N)
    elif len(w) >= rep.predicted_N:
        rep.hit_within_prediction = False
    return rep


def rate_slope(running_min, lo: int = 1, hi: Optional[int] = None) -> float:
    """Least-squares slope of ``log(running_min[N-1])`` against ``log N`` for N in [lo, hi]."""
    r = np.asarray(running_min, dtype=float)
    hi = len(r) if hi is None else min(hi, len(r))
    N = np.arange(lo, hi + 1)
    vals = r[N - 1]
    keep = vals > 0
    if keep.sum() < 2:
        raise ValueError("need at least two positive values in the window")
    return float(np.polyfit(np.log(N[keep]), np.log(vals[keep]), 1)[0])


# --------------------------------------------------------------------------


def certify(p: MinMaxProblem, trace: IterateTrace, integrity: bool = True) -> CertificateReport:
    """Run every check applicable to the trace's scheme."""
    c = p.constants
    prob = p if integrity else None
    sch = trace.scheme
    rep = CertificateReport()
    if sch in ("gdrga", "ppga"):
        rep = rep.merge(check_descent_inequality_gdrga(trace, c))
    rep = rep.merge(check_delta_recursion(trace, c))
    if sch == "pdrga":
        rep = rep.merge(check_descent_inequality_pdrga(trace, c))
        try:
            rep = rep.merge(check_ystar_gap_pdrga(trace, c))
        except OutOfRangeStepSize as exc:
            rep.checks.append(CheckResult.skip("ystar_gap", str(exc)))
    rep = _with_integrity(rep, trace, prob)
    rec0 = trace.records[0]
    rep.summary = theorem_constants(c, sch, trace.tau, trace.eta_x, rec0.delta, rec0.phi, p.phi_lower_bound)
    return rep
