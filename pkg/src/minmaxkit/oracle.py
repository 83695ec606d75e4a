"""Inner maximizer ``y*(x)``, value ``phi(x)`` and gradient ``grad phi(x)``.

Without a closed form, ``y*(x)`` is computed by the proximal ascent
iteration ``y <- prox_{eta h}(y + eta grad_y Phi(x, y))`` with
``eta = 1/L_yy``, which contracts towards the unique maximizer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MaxIterExceeded, NonFiniteEvaluation
from .problem import MinMaxProblem, as_vector

__all__ = ["OracleResult", "solve_inner", "grad_phi_fd", "InnerOracle", "DEFAULT_TOL", "y_error_bound"]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class OracleResult:
    y_star: np.ndarray
    phi: float
    grad_phi: np.ndarray
    inner_iterations: int
    inner_residual: float


def y_error_bound(p: MinMaxProblem, tol: float) -> float:
    """Bound on ``||y_hat - y*(x)||`` when the fixed-point residual is <= tol.

    The residual yields an element of the subdifferential of
    ``h - Phi(x, .)`` at ``y_hat`` of norm at most ``2 tol``; strong
    concavity then gives a distance of at most ``2 tol / mu``.
    """
    if p.y_star_closed_form is not None:
        return 0.0
    return 2.0 * tol / p.constants.mu


def solve_inner(
    p: MinMaxProblem,
    x,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100_000,
    y0=None,
) -> OracleResult:
    """Maximize ``Phi(x, .) - h`` and evaluate ``phi`` and ``grad phi`` at x."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = as_vector(x, p.d, "x")
    if p.y_star_closed_form is not None:
        y = as_vector(p.y_star_closed_form(x), p.n, "y_star")
        iters, res = 0, 0.0
    else:
        eta = 1.0 / p.constants.L_yy
        y = np.zeros(p.n) if y0 is None else as_vector(y0, p.n, "y0").copy()
        res = np.inf
        iters = 0
        while iters < max_iter:
            y_new = np.asarray(p.h.prox(eta, y + eta * p.gy(x, y)), dtype=float)
            res = float(np.linalg.norm(y_new - y)) / eta
            y = y_new
            iters += 1
            if not np.isfinite(res):
                raise NonFiniteEvaluation("inner iteration diverged")
            if res <= tol:
                break
        else:
            raise MaxIterExceeded(
                f"inner solve did not reach tol={tol:g} in {max_iter} iterations (residual {res:g})",
                best=y,
                residual=res,
            )
    phi = p.objective(x, y)
    if not np.isfinite(phi):
        raise NonFiniteEvaluation("phi(x) is not finite")
    # for nonsmooth-in-x problems grad_x returns the least-norm subgradient
    grad = p.gx(x, y)
    return OracleResult(y_star=y, phi=phi, grad_phi=grad, inner_iterations=iters, inner_residual=float(res))


def grad_phi_fd(p: MinMaxProblem, x, step: float = 1e-5, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Central finite-difference gradient of ``phi``; inner solves at ``tol/10``."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = as_vector(x, p.d, "x")
    out = np.empty(p.d)
    for i in range(p.d):
        e = np.zeros(p.d)
        e[i] = step
        fp = solve_inner(p, x + e, tol=tol / 10).phi
        fm = solve_inner(p, x - e, tol=tol / 10).phi
        out[i] = (fp - fm) / (2.0 * step)
    return out


class InnerOracle:
    """Per-run oracle with warm starts and an evaluation counter.

    Not meant to be shared across threads: the warm-start state is mutable.
    """

    def __init__(self, p: MinMaxProblem, tol: float = DEFAULT_TOL, max_iter: int = 100_000, warm_start: bool = True):
        self.p = p
        self.tol = tol
        self.max_iter = max_iter
        self.warm_start = warm_start
        self.calls = 0
        self._last: Optional[np.ndarray] = None

    @property
    def y_error(self) -> float:
        return y_error_bound(self.p, self.tol)

    def __call__(self, x) -> OracleResult:
        self.calls += 1
        y0 = self._last if self.warm_start else None
        res = solve_inner(self.p, x, tol=self.tol, max_iter=self.max_iter, y0=y0)
        self._last = res.y_star
        return res
