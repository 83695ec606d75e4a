"""Closed-form proximal operators.

Every operator acts component-wise on float64 arrays and solves

    prox_{tau g}(v) = argmin_z  g(z) + ||z - v||^2 / (2 tau)

which is single-valued whenever ``tau * weak_convexity < 1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import IllPosedProx

__all__ = [
    "ProxKind",
    "ProxSpec",
    "ProxFriendlyFunction",
    "prox_apply",
    "toy_prox_piecewise",
    "toy_g",
    "toy_g_prime",
]


class ProxKind(str, enum.Enum):
    ZERO = "zero"
    SOFT_THRESHOLD = "soft_threshold"
    FIRM_THRESHOLD_MCP = "mcp"
    BOX = "box"
    QUADRATIC = "quadratic"
    TOY_PIECEWISE = "toy_piecewise"


def toy_g(z):
    """Weakly convex C^1 function of the toy problem (rho = 2)."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    return np.where(a <= 0.5, 0.5 - z * z, (a - 1.0) ** 2)


def toy_g_prime(z):
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    return np.where(a <= 0.5, -2.0 * z, 2.0 * (a - 1.0) * np.sign(z))


def toy_prox_piecewise(tau: float, anchor: float) -> float:
    """Scalar prox of ``tau * toy_g`` at ``anchor``; requires tau < 0.5."""
    if not tau > 0:
        raise ValueError(f"step must be positive, got {tau}")
    if tau >= 0.5:
        raise IllPosedProx(f"toy prox needs tau < 0.5 (rho = 2), got {tau}")
    v = float(anchor)
    if abs(v) <= 0.5 - tau:
        return v / (1.0 - 2.0 * tau)
    if v >= 0.5 - tau:
        return (v + 2.0 * tau) / (1.0 + 2.0 * tau)
    return (v - 2.0 * tau) / (1.0 + 2.0 * tau)


def _toy_prox_vec(tau, v):
    inner = np.abs(v) <= 0.5 - tau
    upper = v >= 0.5 - tau
    return np.where(
        inner,
        v / (1.0 - 2.0 * tau),
        np.where(upper, (v + 2.0 * tau) / (1.0 + 2.0 * tau), (v - 2.0 * tau) / (1.0 + 2.0 * tau)),
    )


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


@dataclass(frozen=True)
class ProxSpec:
    """A regularizer with a closed-form proximal map.

    Use the named constructors (``ProxSpec.soft_threshold(0.5)`` etc.)
    rather than filling the parameter fields by hand.
    """

    kind: ProxKind
    alpha: float = 0.0
    gamma_mcp: float = 0.0
    lo: float = -np.inf
    hi: float = np.inf
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProxKind(self.kind))
        if self.kind in (ProxKind.SOFT_THRESHOLD, ProxKind.FIRM_THRESHOLD_MCP) and not self.alpha >= 0:
            raise ValueError("threshold alpha must be nonnegative")
        if self.kind is ProxKind.FIRM_THRESHOLD_MCP and not self.gamma_mcp > 0:
            raise ValueError("MCP gamma must be positive")
        if self.kind is ProxKind.BOX and not self.lo <= self.hi:
            raise ValueError("box needs lo <= hi")
        if self.kind is ProxKind.QUADRATIC and not self.c >= 0:
            raise ValueError("quadratic weight must be nonnegative")

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls):
        return cls(ProxKind.ZERO)

    @classmethod
    def soft_threshold(cls, alpha):
        return cls(ProxKind.SOFT_THRESHOLD, alpha=float(alpha))

    @classmethod
    def mcp(cls, alpha, gamma_mcp):
        return cls(ProxKind.FIRM_THRESHOLD_MCP, alpha=float(alpha), gamma_mcp=float(gamma_mcp))

    @classmethod
    def box(cls, lo, hi):
        return cls(ProxKind.BOX, lo=float(lo), hi=float(hi))

    @classmethod
    def quadratic(cls, c):
        return cls(ProxKind.QUADRATIC, c=float(c))

    @classmethod
    def toy(cls):
        return cls(ProxKind.TOY_PIECEWISE)

    # -- properties -------------------------------------------------------
    @property
    def weak_convexity(self) -> float:
        if self.kind is ProxKind.FIRM_THRESHOLD_MCP:
            return 1.0 / self.gamma_mcp
        if self.kind is ProxKind.TOY_PIECEWISE:
            return 2.0
        return 0.0

    @property
    def strong_convexity(self) -> float:
        return self.c if self.kind is ProxKind.QUADRATIC else 0.0

    @property
    def smooth(self) -> bool:
        return self.kind in (ProxKind.ZERO, ProxKind.QUADRATIC, ProxKind.TOY_PIECEWISE)

    @property
    def grad_lipschitz(self) -> Optional[float]:
        """Lipschitz constant of the gradient, or None when nonsmooth."""
        return {ProxKind.ZERO: 0.0, ProxKind.QUADRATIC: self.c, ProxKind.TOY_PIECEWISE: 2.0}.get(self.kind)

    def params(self) -> dict:
        keys = {
            ProxKind.ZERO: (),
            ProxKind.SOFT_THRESHOLD: ("alpha",),
            ProxKind.FIRM_THRESHOLD_MCP: ("alpha", "gamma_mcp"),
            ProxKind.BOX: ("lo", "hi"),
            ProxKind.QUADRATIC: ("c",),
            ProxKind.TOY_PIECEWISE: (),
        }[self.kind]
        return {k: getattr(self, k) for k in keys}

    # -- evaluation -------------------------------------------------------
    def value(self, z) -> float:
        z = np.asarray(z, dtype=float)
        k = self.kind
        if k is ProxKind.ZERO:
            return 0.0
        if k is ProxKind.SOFT_THRESHOLD:
            return float(self.alpha * np.abs(z).sum())
        if k is ProxKind.FIRM_THRESHOLD_MCP:
            a, g = self.alpha, self.gamma_mcp
            az = np.abs(z)
            return float(np.where(az <= g * a, a * az - az * az / (2 * g), 0.5 * g * a * a).sum())
        if k is ProxKind.BOX:
            return 0.0 if np.all((z >= self.lo) & (z <= self.hi)) else np.inf
        if k is ProxKind.QUADRATIC:
            return float(0.5 * self.c * np.dot(z.ravel(), z.ravel()))
        return float(toy_g(z).sum())

    def prox(self, tau: float, anchor) -> np.ndarray:
        if not tau > 0:
            raise ValueError(f"prox step must be positive, got {tau}")
        if tau * self.weak_convexity >= 1.0:
            raise IllPosedProx(
                f"{self.kind.value}: tau * weak_convexity = {tau * self.weak_convexity:g} >= 1"
            )
        v = np.asarray(anchor, dtype=float)
        k = self.kind
        if k is ProxKind.ZERO:
            return v.copy()
        if k is ProxKind.SOFT_THRESHOLD:
            return _soft(v, tau * self.alpha)
        if k is ProxKind.FIRM_THRESHOLD_MCP:
            a, g = self.alpha, self.gamma_mcp
            av = np.abs(v)
            mid = np.sign(v) * (av - tau * a) / (1.0 - tau / g)
            return np.where(av <= tau * a, 0.0, np.where(av <= g * a, mid, v))
        if k is ProxKind.BOX:
            return np.clip(v, self.lo, self.hi)
        if k is ProxKind.QUADRATIC:
            return v / (1.0 + tau * self.c)
        return _toy_prox_vec(tau, v)

    def min_norm_subgradient(self, z, smooth_grad) -> np.ndarray:
        """Least-norm element of ``smooth_grad + dg(z)`` (limiting subdifferential)."""
        z = np.asarray(z, dtype=float)
        s = np.asarray(smooth_grad, dtype=float)
        k = self.kind
        if k is ProxKind.ZERO:
            return s.copy()
        if k is ProxKind.QUADRATIC:
            return s + self.c * z
        if k is ProxKind.TOY_PIECEWISE:
            return s + toy_g_prime(z)
        if k is ProxKind.SOFT_THRESHOLD:
            return np.where(z != 0, s + self.alpha * np.sign(z), _soft(s, self.alpha))
        if k is ProxKind.FIRM_THRESHOLD_MCP:
            a, g = self.alpha, self.gamma_mcp
            az = np.abs(z)
            d = np.where(az < g * a, np.sign(z) * (a - az / g), 0.0)
            return np.where(z != 0, s + d, _soft(s, a))
        # box: normal cone at active bounds
        at_lo = z <= self.lo
        at_hi = z >= self.hi
        out = s.copy()
        out = np.where(at_lo & (s > 0), 0.0, out)
        out = np.where(at_hi & (s < 0), 0.0, out)
        return out


@dataclass(frozen=True)
class ProxFriendlyFunction:
    """User-supplied regularizer given by callables.

    Duck-type compatible with :class:`ProxSpec` wherever a regularizer is
    accepted; ``prox(tau, anchor)`` must return the exact proximal point.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]
    weak_convexity: float = 0.0
    strong_convexity: float = 0.0


def prox_apply(spec, tau: float, anchor) -> np.ndarray:
    """Evaluate ``prox_{tau g}(anchor)`` for a :class:`ProxSpec` (or duck type)."""
    if not tau > 0:
        raise ValueError(f"prox step must be positive, got {tau}")
    if tau * spec.weak_convexity >= 1.0:
        raise IllPosedProx(f"tau * weak_convexity = {tau * spec.weak_convexity:g} >= 1")
    return spec.prox(tau, anchor)
