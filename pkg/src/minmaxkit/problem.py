"""Min-max problem abstraction and its declared smoothness constants.

A problem is ``min_x max_y Phi(x, y) - h(y)`` with ``Phi`` weakly convex in
``x`` and (strongly) concave in ``y``. Constants are declared by the user;
:func:`validate_problem` only tries to falsify them on samples.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteEvaluation
from .prox import ProxSpec

logger = logging.getLogger(__name__)

__all__ = [
    "ConcavitySource",
    "SmoothnessConstants",
    "MinMaxProblem",
    "ValidationReport",
    "validate_problem",
    "effective_constants",
    "as_vector",
]

Vector = np.ndarray


def as_vector(v, dim: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce to a contiguous 1-D float64 array, checking the length."""
    out = np.ascontiguousarray(np.asarray(v, dtype=np.float64).reshape(-1))
    if dim is not None and out.size != dim:
        raise DimensionMismatch(f"{name} has size {out.size}, expected {dim}")
    return out


class ConcavitySource(str, enum.Enum):
    COUPLING = "coupling_strongly_concave"
    REGULARIZER = "regularizer_strongly_convex"


@dataclass(frozen=True)
class SmoothnessConstants:
    """Block-wise Lipschitz constants, concavity and weak-convexity moduli.

    If ``L_yy < mu`` the condition number would drop below one; ``L_yy`` is
    then inflated to ``mu`` (any larger bound is still a valid Lipschitz
    constant) and ``L_yy_declared`` keeps the user's value.
    """

    L_xx: float
    L_xy: float
    L_yx: float
    L_yy: float
    mu: float
    rho: float = 0.0
    L_yy_declared: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("L_xx", "L_xy", "L_yx", "L_yy", "mu", "rho"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, float(val))
        for name in ("L_xy", "L_yx", "L_yy", "mu"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("L_xx", "rho"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.L_yy < self.mu:
            logger.warning("L_yy=%g < mu=%g: inflating L_yy to mu so that kappa_y = 1", self.L_yy, self.mu)
            object.__setattr__(self, "L_yy_declared", self.L_yy)
            object.__setattr__(self, "L_yy", self.mu)

    @property
    def adjusted(self) -> bool:
        return self.L_yy_declared is not None

    @property
    def kappa_y(self) -> float:
        return self.L_yy / self.mu

    @property
    def beta(self) -> float:
        return self.mu / (self.L_xy * self.L_yx)

    @property
    def L_phi(self) -> float:
        return self.L_xx + self.L_xy * self.L_yx / self.mu

    def as_dict(self) -> dict:
        return {
            "L_xx": self.L_xx,
            "L_xy": self.L_xy,
            "L_yx": self.L_yx,
            "L_yy": self.L_yy,
            "mu": self.mu,
            "rho": self.rho,
        }


def effective_constants(p) -> tuple:
    """Return ``(kappa_y, beta, L_phi)`` for a problem or a constants object."""
    c = p.constants if isinstance(p, MinMaxProblem) else p
    return c.kappa_y, c.beta, c.L_phi


@dataclass(frozen=True)
class MinMaxProblem:
    """``min_x max_y Phi(x, y) - h(y)``.

    ``grad_x`` must return an element of the x-(sub)differential of Phi.
    When Phi is nonsmooth in x (e.g. an l1 term), set ``smooth_x=False``
    and supply ``grad_x_smooth``: the gradient of the differentiable part,
    the remainder being independent of y. ``prox_x(eta, x, y)`` evaluates
    ``prox_{eta Phi(., y)}(x)``.
    """

    d: int
    n: int
    grad_x: Callable[[Vector, Vector], Vector]
    grad_y: Callable[[Vector, Vector], Vector]
    phi_value: Callable[[Vector, Vector], float]
    constants: SmoothnessConstants
    h: object = field(default_factory=ProxSpec.zero)
    prox_x: Optional[Callable[[float, Vector, Vector], Vector]] = None
    y_star_closed_form: Optional[Callable[[Vector], Vector]] = None
    concavity_source: ConcavitySource = ConcavitySource.COUPLING
    smooth_x: bool = True
    grad_x_smooth: Optional[Callable[[Vector, Vector], Vector]] = None
    phi_lower_bound: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise DimensionMismatch("d and n must be positive")
        object.__setattr__(self, "concavity_source", ConcavitySource(self.concavity_source))
        if self.concavity_source is ConcavitySource.REGULARIZER:
            if getattr(self.h, "strong_convexity", 0.0) < self.constants.mu * (1 - 1e-12):
                raise ValueError("regularizer strong convexity must be at least mu")
        if not self.smooth_x and self.grad_x_smooth is None:
            raise ValueError("nonsmooth-in-x problems must provide grad_x_smooth")

    # Checked wrappers -----------------------------------------------------
    def gx(self, x, y) -> np.ndarray:
        return _checked(self.grad_x(x, y), self.d, "grad_x")

    def gy(self, x, y) -> np.ndarray:
        return _checked(self.grad_y(x, y), self.n, "grad_y")

    def gx_smooth(self, x, y) -> np.ndarray:
        f = self.grad_x_smooth if self.grad_x_smooth is not None else self.grad_x
        return _checked(f(x, y), self.d, "grad_x_smooth")

    def objective(self, x, y) -> float:
        """``Phi(x, y) - h(y)``."""
        val = float(self.phi_value(x, y)) - float(self.h.value(y))
        if math.isnan(val):
            raise NonFiniteEvaluation("objective is NaN")
        return val


def _checked(v, dim, name):
    out = np.asarray(v, dtype=np.float64).reshape(-1)
    if out.size != dim:
        raise DimensionMismatch(f"{name} returned size {out.size}, expected {dim}")
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation(f"{name} returned non-finite values")
    return out


@dataclass
class ValidationReport:
    """Largest observed ratio (observed / declared) for each constant."""

    ratios: dict
    trials: int
    rel_slack: float = 1e-9

    @property
    def violations(self) -> dict:
        return {k: r for k, r in self.ratios.items() if r > 1.0 + self.rel_slack}

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "trials": self.trials,
            "ratios": dict(sorted(self.ratios.items())),
            "violations": dict(sorted(self.violations.items())),
        }


def validate_problem(
    p: MinMaxProblem,
    samples: Sequence,
    trials: int = 100,
    seed: int = 0,
    rel_slack: float = 1e-9,
) -> ValidationReport:
    """Spot-check the declared block-wise constants on random sample pairs.

    For each trial two samples ``(x1, y1), (x2, y2)`` are drawn and the four
    block Lipschitz ratios, the strong-concavity ratio (when Phi carries it)
    and the weak-convexity ratio are evaluated. A ratio above one means the
    declared constant is understated.
    """
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    pts = [(as_vector(x, p.d, "x"), as_vector(y, p.n, "y")) for x, y in samples]
    c = p.constants
    rng = np.random.default_rng(seed)
    ratios = {"L_xx": 0.0, "L_xy": 0.0, "L_yx": 0.0, "L_yy": 0.0, "rho": 0.0}
    if p.concavity_source is ConcavitySource.COUPLING:
        ratios["mu"] = 0.0
    tiny = 1e-300

    def upd(key, val):
        if val > ratios[key]:
            ratios[key] = val

    for _ in range(trials):
        i, j = rng.integers(len(pts), size=2)
        (x1, y1), (x2, y2) = pts[i], pts[j]
        dx = np.linalg.norm(x1 - x2)
        dy = np.linalg.norm(y1 - y2)
        if dx > 0:
            gx1, gx2 = p.gx(x1, y1), p.gx(x2, y1)
            upd("L_xx", np.linalg.norm(gx1 - gx2) / max(c.L_xx * dx, tiny))
            upd("L_yx", np.linalg.norm(p.gy(x1, y1) - p.gy(x2, y1)) / (c.L_yx * dx))
            curv = -np.dot(gx1 - gx2, x1 - x2)
            if curv > 0:
                upd("rho", curv / max(c.rho * dx * dx, tiny))
        if dy > 0:
            upd("L_xy", np.linalg.norm(p.gx(x1, y1) - p.gx(x1, y2)) / (c.L_xy * dy))
            gy1, gy2 = p.gy(x1, y1), p.gy(x1, y2)
            upd("L_yy", np.linalg.norm(gy1 - gy2) / c.L_yy / dy)
            if "mu" in ratios:
                decrease = -np.dot(gy1 - gy2, y1 - y2)
                upd("mu", c.mu * dy * dy / max(decrease, tiny))
    return ValidationReport(ratios=ratios, trials=trials, rel_slack=rel_slack)
