"""Admissible step sizes, contraction factors and comparison tables.

All bounds are suprema of open intervals: a step must be strictly below.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import DenominatorNonpositive, OutOfRangeStepSize
from .problem import SmoothnessConstants

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

__all__ = [
    "Gamma",
    "ThetaPair",
    "StepSizeBounds",
    "bounds_gdrga",
    "bounds_pdrga",
    "gamma_gdrga",
    "gamma_pdrga",
    "gamma_pdrga_theta",
    "theta_star",
    "table_jointly_lipschitz",
    "table_blockwise",
    "step_size_bounds",
    "auto_eta_x",
]


class Gamma(NamedTuple):
    value: float
    contracting: bool  # |gamma| < 1


class ThetaPair(NamedTuple):
    pdrga_theta: float
    delta_lemma_theta: float


def _check_tau(tau):
    if not 0.0 < tau <= 1.0 + 1e-12:
        raise OutOfRangeStepSize(f"tau must lie in (0, 1], got {tau}")


def bounds_gdrga(c: SmoothnessConstants, tau: float) -> float:
    """Supremum of admissible ``eta_x`` for GD-RGA: ``tau*beta/(2*kappa_y)``."""
    _check_tau(tau)
    return tau * c.beta / (2.0 * c.kappa_y)


def bounds_pdrga(c: SmoothnessConstants, tau: float) -> float:
    """``min(tau*beta/(sqrt2*(sqrt2*kappa_y + tau)), 1/rho)``."""
    _check_tau(tau)
    concave_side = tau * c.beta / (SQRT2 * (SQRT2 * c.kappa_y + tau))
    weak_side = math.inf if c.rho == 0 else 1.0 / c.rho
    return min(concave_side, weak_side)


def gamma_gdrga(c: SmoothnessConstants, tau: float, eta_x: float) -> Gamma:
    _check_tau(tau)
    k, b = c.kappa_y, c.beta
    g = 1.0 - tau / (2.0 * k) + 2.0 * k * eta_x**2 / (tau * b * b)
    if abs(g) >= 1.0:
        logger.warning("GD-RGA gamma = %.6g is not a contraction (eta_x = %g)", g, eta_x)
    return Gamma(g, abs(g) < 1.0)


def gamma_pdrga_theta(c: SmoothnessConstants, tau: float, eta_x: float, theta: float) -> Gamma:
    """PD-RGA contraction factor for a general Young parameter ``theta``."""
    _check_tau(tau)
    if not theta > 0:
        raise ValueError("theta must be positive")
    k, b = c.kappa_y, c.beta
    den = b * b - 2.0 * eta_x**2 * (1.0 + 1.0 / theta)
    if den <= 0:
        raise DenominatorNonpositive(f"beta^2 - 2 eta_x^2 (1 + 1/theta) = {den:g} <= 0")
    g = 1.0 - tau / (2.0 * k) + 2.0 * k * eta_x**2 * (1.0 + theta) / (tau * den)
    return Gamma(g, abs(g) < 1.0)


def gamma_pdrga(c: SmoothnessConstants, tau: float, eta_x: float) -> Gamma:
    """PD-RGA contraction factor at ``theta = tau/(sqrt2*kappa_y)``."""
    _check_tau(tau)
    k, b = c.kappa_y, c.beta
    s = SQRT2 * k + tau
    den = b * b * tau - 2.0 * s * eta_x**2
    if den <= 0:
        raise DenominatorNonpositive(f"beta^2 tau - 2 (sqrt2 kappa_y + tau) eta_x^2 = {den:g} <= 0")
    g = 1.0 - tau / (2.0 * k) + SQRT2 * s * eta_x**2 / den
    if not g > -0.5:
        raise AssertionError(f"gamma = {g} violates gamma > -1/2")
    if g >= 1.0:
        logger.warning("PD-RGA gamma = %.6g is not a contraction (eta_x = %g)", g, eta_x)
    return Gamma(g, abs(g) < 1.0)


def theta_star(tau: float, kappa_y: float) -> ThetaPair:
    """The two Young parameters used in the analysis, labelled by role."""
    if not (0 < tau <= 1.0 + 1e-12 and kappa_y >= 1.0):
        raise ValueError("need 0 < tau <= 1 <= kappa_y")
    pd = tau / (SQRT2 * kappa_y)
    dl = (2.0 * kappa_y - tau) * (kappa_y + tau) ** 2 / (2.0 * kappa_y**3) - 1.0
    return ThetaPair(pd, dl)


def table_jointly_lipschitz(kappa_y: float) -> tuple:
    """Ratios ``eta_x/eta_y``: two prior analyses and ours, jointly Lipschitz case."""
    if kappa_y < 1:
        raise ValueError("kappa_y must be >= 1")
    lin = 1.0 / (16.0 * (kappa_y + 1.0) ** 2)
    bot = 1.0 / (3.0 * (kappa_y + 1.0) ** 2)
    ours = 1.0 / (2.0 * kappa_y**2)
    assert lin < bot < ours
    return lin, bot, ours


@dataclass(frozen=True)
class BlockwiseRow:
    bound_prior: float
    bound_ours: float
    dominance: Optional[bool]  # None when L_xy != L_yx


def table_blockwise(c: SmoothnessConstants, tau: float = 1.0) -> BlockwiseRow:
    """Prior block-wise bound against ours; dominance only judged if L_xy == L_yx."""
    k = c.kappa_y
    prior = c.mu / (c.mu * (c.L_xy**2 + c.L_phi) + 2.0 * k * (2.0 * k + 1.0) * c.L_yx**2)
    ours = bounds_gdrga(c, tau)
    dom = None
    if c.L_xy == c.L_yx:
        dom = ours >= prior
        if tau == 1.0:
            assert dom, "block-wise dominance must hold when L_xy == L_yx"
    return BlockwiseRow(prior, ours, dom)


@dataclass(frozen=True)
class StepSizeBounds:
    eta_y_max: float
    eta_x_max_gdrga: float
    eta_x_max_pdrga: float
    gamma_gdrga: Optional[float]
    gamma_pdrga: Optional[float]
    theta_star_pdrga: float


def step_size_bounds(c: SmoothnessConstants, tau: float, eta_x: Optional[float] = None) -> StepSizeBounds:
    """Collect every bound; gammas are evaluated at ``eta_x`` when given."""
    gd = pd = None
    if eta_x is not None:
        gd = gamma_gdrga(c, tau, eta_x).value
        try:
            pd = gamma_pdrga(c, tau, eta_x).value
        except DenominatorNonpositive:
            pd = None
    return StepSizeBounds(
        eta_y_max=1.0 / c.L_yy,
        eta_x_max_gdrga=bounds_gdrga(c, tau),
        eta_x_max_pdrga=bounds_pdrga(c, tau),
        gamma_gdrga=gd,
        gamma_pdrga=pd,
        theta_star_pdrga=theta_star(tau, c.kappa_y).pdrga_theta,
    )


def auto_eta_x(c: SmoothnessConstants, tau: float, scheme: str, factor: float = 0.99) -> float:
    """``factor`` times the theorem supremum ("auto" step-size mode).

    PPGA has no bound of its own here; it uses the prior block-wise bound.
    """
    scheme = str(scheme).lower()
    if scheme == "gdrga":
        return factor * bounds_gdrga(c, tau)
    if scheme == "pdrga":
        return factor * bounds_pdrga(c, tau)
    if scheme == "ppga":
        return factor * table_blockwise(c, tau).bound_prior
    raise ValueError(f"unknown scheme {scheme!r}")
