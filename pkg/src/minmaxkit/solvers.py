"""GD-RGA, PD-RGA and PPGA as pure step functions plus a tracing driver.

All three schemes share the regularized ascent step

    y+ = prox_{eta_y h}(y + eta_y grad_y Phi(x_arg, y))

and differ in the x-update and in ``x_arg``: the new x for the alternating
schemes, the old one for PPGA.
"""
from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IllPosedProx, MissingProxOracle, NonFiniteEvaluation, OutOfRangeStepSize
from .oracle import DEFAULT_TOL, InnerOracle
from .problem import MinMaxProblem, SmoothnessConstants, as_vector
from .trace import IterateTrace, TraceRecord, make_record

logger = logging.getLogger(__name__)

__all__ = [
    "Scheme",
    "SolverState",
    "StepSizeConfig",
    "gd_rga_step",
    "pd_rga_step",
    "ppga_step",
    "step",
    "run_solver",
    "implicit_residual",
]

TAU_TOL = 1e-12


class Scheme(str, enum.Enum):
    GDRGA = "gdrga"
    PDRGA = "pdrga"
    PPGA = "ppga"


@dataclass(frozen=True)
class SolverState:
    x: np.ndarray
    y: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, p: MinMaxProblem, x0, y0) -> "SolverState":
        return cls(as_vector(x0, p.d, "x0"), as_vector(y0, p.n, "y0"), 0)


@dataclass(frozen=True)
class StepSizeConfig:
    """Step sizes ``(eta_x, eta_y)`` with ``tau = eta_y * L_yy``."""

    eta_x: float
    eta_y: float
    tau: float

    @classmethod
    def from_constants(
        cls,
        c: SmoothnessConstants,
        eta_x: float,
        eta_y: Optional[float] = None,
        tau: Optional[float] = None,
    ) -> "StepSizeConfig":
        """Fill in whichever of ``eta_y``/``tau`` is missing (default tau = 1)."""
        if eta_y is None:
            tau = 1.0 if tau is None else float(tau)
            eta_y = tau / c.L_yy
        else:
            eta_y = float(eta_y)
            implied = eta_y * c.L_yy
            if tau is not None and not math.isclose(tau, implied, rel_tol=1e-9):
                raise OutOfRangeStepSize(f"tau={tau} inconsistent with eta_y*L_yy={implied}")
            tau = implied
        cfg = cls(float(eta_x), eta_y, tau)
        cfg.validate(c)
        return cfg

    def validate(self, c: SmoothnessConstants, scheme=None, allow_nonunique_prox: bool = False) -> None:
        if not (self.eta_x >= 0 and math.isfinite(self.eta_x)):
            raise OutOfRangeStepSize(f"eta_x must be finite and nonnegative, got {self.eta_x}")
        if not self.eta_y > 0:
            raise OutOfRangeStepSize(f"eta_y must be positive, got {self.eta_y}")
        if not 0 < self.tau <= 1.0 + TAU_TOL:
            raise OutOfRangeStepSize(f"tau = eta_y*L_yy must lie in (0, 1], got {self.tau}")
        if not math.isclose(self.tau, self.eta_y * c.L_yy, rel_tol=1e-9):
            raise OutOfRangeStepSize("tau does not match eta_y * L_yy")
        if scheme is not None and Scheme(scheme) is Scheme.PDRGA and self.eta_x * c.rho >= 1.0:
            msg = f"eta_x * rho = {self.eta_x * c.rho:g} >= 1: the proximal x-step may be multivalued"
            if not allow_nonunique_prox:
                raise IllPosedProx(msg)
            logger.warning("%s (overridden)", msg)


def _finite(v, name):
    if not np.all(np.isfinite(v)):
        raise NonFiniteEvaluation(f"{name} is not finite")
    return v


def _ascent(p: MinMaxProblem, x_arg, y, eta_y) -> np.ndarray:
    """The regularized ascent step shared by all schemes."""
    y_new = np.asarray(p.h.prox(eta_y, y + eta_y * p.gy(x_arg, y)), dtype=np.float64).reshape(-1)
    return _finite(y_new, "y update")


def _require_smooth(p: MinMaxProblem, name: str):
    if not p.smooth_x:
        raise ValueError(f"{name} needs a problem that is differentiable in x; use PD-RGA")


def gd_rga_step(p: MinMaxProblem, s: SolverState, cfg: StepSizeConfig) -> SolverState:
    """Explicit x-step at ``(x_k, y_k)``, then ascent at ``(x_{k+1}, y_k)``."""
    _require_smooth(p, "GD-RGA")
    x1 = _finite(s.x - cfg.eta_x * p.gx(s.x, s.y), "x update")
    return SolverState(x1, _ascent(p, x1, s.y, cfg.eta_y), s.k + 1)


def implicit_residual(p: MinMaxProblem, s: SolverState, x1, cfg: StepSizeConfig) -> float:
    """``||x1 - x + eta_x grad_x Phi(x1, y)||``, zero for an exact proximal step."""
    return float(np.linalg.norm(x1 - s.x + cfg.eta_x * p.gx(x1, s.y)))


def pd_rga_step(p: MinMaxProblem, s: SolverState, cfg: StepSizeConfig, debug: bool = False) -> SolverState:
    """Proximal x-step ``prox_{eta_x Phi(., y_k)}(x_k)``, then the shared ascent.

    With ``debug=True`` (smooth problems only) the first-order optimality
    of the proximal step is asserted to 1e-8, relative to ``max(1, ||x||)``.
    """
    if p.prox_x is None:
        raise MissingProxOracle(f"problem {p.name!r} has no prox_x")
    x1 = as_vector(p.prox_x(cfg.eta_x, s.x, s.y), p.d, "prox_x")
    _finite(x1, "x update")
    if debug and p.smooth_x:
        r = implicit_residual(p, s, x1, cfg)
        if r > 1e-8 * max(1.0, float(np.linalg.norm(s.x))):
            raise AssertionError(f"proximal step optimality residual {r:g} exceeds 1e-8")
    return SolverState(x1, _ascent(p, x1, s.y, cfg.eta_y), s.k + 1)


def ppga_step(p: MinMaxProblem, s: SolverState, cfg: StepSizeConfig) -> SolverState:
    """Simultaneous variant: the ascent step reads ``x_k``."""
    _require_smooth(p, "PPGA")
    x1 = _finite(s.x - cfg.eta_x * p.gx(s.x, s.y), "x update")
    return SolverState(x1, _ascent(p, s.x, s.y, cfg.eta_y), s.k + 1)


_STEPS = {Scheme.GDRGA: gd_rga_step, Scheme.PDRGA: pd_rga_step, Scheme.PPGA: ppga_step}
# per-step evaluation counts of (grad_x, prox_x, grad_y, prox_h)
_COSTS = {Scheme.GDRGA: (1, 0, 1, 1), Scheme.PDRGA: (0, 1, 1, 1), Scheme.PPGA: (1, 0, 1, 1)}


def step(p: MinMaxProblem, scheme, s: SolverState, cfg: StepSizeConfig) -> SolverState:
    return _STEPS[Scheme(scheme)](p, s, cfg)


def _blank_record(k, x, y, n) -> TraceRecord:
    nan = float("nan")
    return TraceRecord(k, x, y, nan, np.full_like(x, nan), nan, nan, np.full(n, nan))


def run_solver(
    p: MinMaxProblem,
    scheme,
    cfg: StepSizeConfig,
    x0,
    y0,
    max_iter: int = 1000,
    eps: Optional[float] = None,
    trace: bool = True,
    oracle_tol: float = DEFAULT_TOL,
    warm_start: bool = True,
    allow_nonunique_prox: bool = False,
    debug: bool = False,
) -> IterateTrace:
    """Run ``scheme`` from ``(x0, y0)`` for at most ``max_iter`` steps.

    With ``trace=True`` every iterate is annotated through the inner oracle
    (y*, phi, grad phi, delta); those oracle calls are counted separately
    from the solver's own evaluations. ``eps`` stops at the first k with
    ``||grad phi(x_k)|| < eps`` and needs tracing.
    """
    scheme = Scheme(scheme)
    if max_iter < 0:
        raise ValueError("max_iter must be nonnegative")
    if eps is not None and not trace:
        raise ValueError("gradient-based stopping needs trace=True")
    cfg.validate(p.constants, scheme, allow_nonunique_prox)
    if scheme is not Scheme.PDRGA:
        _require_smooth(p, scheme.name)
    elif p.prox_x is None:
        raise MissingProxOracle(f"problem {p.name!r} has no prox_x")
    stepper = _STEPS[scheme]
    kwargs = {"debug": debug} if scheme is Scheme.PDRGA else {}

    oracle = InnerOracle(p, tol=oracle_tol, warm_start=warm_start)
    s = SolverState.initial(p, x0, y0)

    def record(state, prev):
        if trace:
            return make_record(p, oracle, state.k, state.x, state.y, scheme.value, cfg.eta_x, prev)
        return _blank_record(state.k, state.x.copy(), state.y.copy(), p.n)

    t0 = time.perf_counter()
    recs = [record(s, None)]
    stopped = "max_iter"
    if eps is not None and recs[0].grad_norm < eps:
        stopped = "eps"
    else:
        for _ in range(max_iter):
            s = stepper(p, s, cfg, **kwargs)
            recs.append(record(s, recs[-1]))
            if eps is not None and recs[-1].grad_norm < eps:
                stopped = "eps"
                break
    wall = time.perf_counter() - t0

    steps = len(recs) - 1
    names = ("grad_x", "prox_x", "grad_y", "prox_h")
    solver_evals = {n: c * steps for n, c in zip(names, _COSTS[scheme])}
    meta = {
        "steps": steps,
        "stopped": stopped,
        "solver_evaluations": solver_evals,
        "diagnostic_evaluations": oracle.calls,
        "nonunique_prox_allowed": bool(allow_nonunique_prox and scheme is Scheme.PDRGA and cfg.eta_x * p.constants.rho >= 1),
        "traced": trace,
        "wall_time_s": wall,
    }
    return IterateTrace(
        records=recs,
        scheme=scheme.value,
        eta_x=cfg.eta_x,
        eta_y=cfg.eta_y,
        tau=cfg.tau,
        problem=p.name,
        oracle_tol=oracle_tol,
        y_error=oracle.y_error if trace else float("nan"),
        meta=meta,
    )
