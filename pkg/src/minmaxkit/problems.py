"""Built-in problem instances."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigParse
from .problem import ConcavitySource, MinMaxProblem, SmoothnessConstants
from .prox import ProxKind, ProxSpec, toy_g, toy_g_prime

__all__ = ["toy_problem", "quadratic_problem", "bilinear_quadratic_problem", "load_problem_file", "prox_spec_from_dict"]


def toy_problem(concavity: str = "coupling") -> MinMaxProblem:
    """``min_x max_y g(x) + x*y - 0.5*y^2`` with the piecewise ``g``.

    ``concavity="regularizer"`` moves the ``0.5*y^2`` term into ``h`` so
    that the strong concavity is carried by the regularizer instead.
    """
    gspec = ProxSpec.toy()

    def grad_x(x, y):
        return toy_g_prime(x) + y

    def prox_x(eta, x, y):
        # prox_{eta Phi(., y)}(x) = prox_{eta g}(x - eta y)
        return gspec.prox(eta, x - eta * y)

    def y_star(x):
        return np.array(x, dtype=float)

    consts = SmoothnessConstants(L_xx=2.0, L_xy=1.0, L_yx=1.0, L_yy=1.0, mu=1.0, rho=2.0)
    if concavity == "coupling":
        return MinMaxProblem(
            d=1,
            n=1,
            grad_x=grad_x,
            grad_y=lambda x, y: x - y,
            phi_value=lambda x, y: float(toy_g(x).sum() + np.dot(x, y) - 0.5 * np.dot(y, y)),
            constants=consts,
            h=ProxSpec.zero(),
            prox_x=prox_x,
            y_star_closed_form=y_star,
            concavity_source=ConcavitySource.COUPLING,
            phi_lower_bound=1.0 / 3.0,
            name="toy",
        )
    if concavity == "regularizer":
        return MinMaxProblem(
            d=1,
            n=1,
            grad_x=grad_x,
            grad_y=lambda x, y: np.array(x, dtype=float),
            phi_value=lambda x, y: float(toy_g(x).sum() + np.dot(x, y)),
            constants=consts,
            h=ProxSpec.quadratic(1.0),
            prox_x=prox_x,
            y_star_closed_form=y_star,
            concavity_source=ConcavitySource.REGULARIZER,
            phi_lower_bound=1.0 / 3.0,
            name="toy_h",
        )
    raise ValueError(f"unknown concavity source {concavity!r}")


def quadratic_problem(a: float = 1.0, b: float = 1.0, c: float = 0.5) -> MinMaxProblem:
    """Scalar ``Phi(x, y) = -a x^2 + b x y - c y^2`` with ``h = 0``.

    ``phi(x) = (b^2/(4c) - a) x^2`` is bounded below iff ``b^2 >= 4ac``.
    """
    if not (b != 0 and c > 0):
        raise ValueError("need b != 0 and c > 0")
    rho = max(2.0 * a, 0.0)
    consts = SmoothnessConstants(L_xx=abs(2.0 * a), L_xy=abs(b), L_yx=abs(b), L_yy=2.0 * c, mu=2.0 * c, rho=rho)
    curvature = b * b / (4.0 * c) - a

    def prox_x(eta, x, y):
        return (x - eta * b * y) / (1.0 - 2.0 * a * eta)

    return MinMaxProblem(
        d=1,
        n=1,
        grad_x=lambda x, y: -2.0 * a * x + b * y,
        grad_y=lambda x, y: b * x - 2.0 * c * y,
        phi_value=lambda x, y: float(-a * x[0] ** 2 + b * x[0] * y[0] - c * y[0] ** 2),
        constants=consts,
        prox_x=prox_x,
        y_star_closed_form=lambda x: b * np.asarray(x, dtype=float) / (2.0 * c),
        phi_lower_bound=0.0 if curvature >= 0 else None,
        name=f"quadratic(a={a:g},b={b:g},c={c:g})",
    )


def bilinear_quadratic_problem(P, B, Q, p=None, q=None, h=None, name="custom") -> MinMaxProblem:
    """``Phi(x,y) = x'Px/2 + x'By - y'Qy/2 + p'x - q'y`` with regularizer ``h``.

    Constants are computed from the spectra of P, B and Q. When ``Q`` is
    singular the strong concavity must come from ``h``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    d, n = B.shape
    if P.shape != (d, d) or Q.shape != (n, n):
        raise ValueError("P must be d x d and Q n x n for B of shape d x n")
    if not (np.allclose(P, P.T) and np.allclose(Q, Q.T)):
        raise ValueError("P and Q must be symmetric")
    p = np.zeros(d) if p is None else np.asarray(p, dtype=float).reshape(d)
    q = np.zeros(n) if q is None else np.asarray(q, dtype=float).reshape(n)
    h = ProxSpec.zero() if h is None else h
    eig_p = np.linalg.eigvalsh(P)
    eig_q = np.linalg.eigvalsh(Q)
    if eig_q[0] < -1e-12:
        raise ValueError("Q must be positive semidefinite")
    sb = float(np.linalg.norm(B, 2))
    if sb == 0:
        raise ValueError("coupling matrix B must be nonzero")
    mu_q = float(eig_q[0])
    mu_h = float(getattr(h, "strong_convexity", 0.0))
    if mu_q > 1e-12:
        source, mu = ConcavitySource.COUPLING, mu_q
    elif mu_h > 0:
        source, mu = ConcavitySource.REGULARIZER, mu_h
    else:
        raise ValueError("neither Q nor h provides strong concavity")
    L_yy = max(float(eig_q[-1]), 1e-300)
    consts = SmoothnessConstants(
        L_xx=float(np.max(np.abs(eig_p))),
        L_xy=sb,
        L_yx=sb,
        L_yy=L_yy,
        mu=mu,
        rho=max(0.0, -float(eig_p[0])),
    )
    eye = np.eye(d)

    def prox_x(eta, x, y):
        return np.linalg.solve(eye + eta * P, x - eta * (B @ y + p))

    y_star = None
    if isinstance(h, ProxSpec) and h.kind in (ProxKind.ZERO, ProxKind.QUADRATIC):
        Qh = Q + h.strong_convexity * np.eye(n)

        def y_star(x):
            return np.linalg.solve(Qh, B.T @ x - q)

    return MinMaxProblem(
        d=d,
        n=n,
        grad_x=lambda x, y: P @ x + B @ y + p,
        grad_y=lambda x, y: B.T @ x - Q @ y - q,
        phi_value=lambda x, y: float(0.5 * x @ P @ x + x @ B @ y - 0.5 * y @ Q @ y + p @ x - q @ y),
        constants=consts,
        h=h,
        prox_x=prox_x,
        y_star_closed_form=y_star,
        concavity_source=source,
        name=name,
    )


def prox_spec_from_dict(spec: dict) -> ProxSpec:
    kind = ProxKind(spec.get("kind", "zero"))
    params = {k: float(v) for k, v in spec.items() if k != "kind"}
    return ProxSpec(kind, **params)


def load_problem_file(path) -> MinMaxProblem:
    """Load a :func:`bilinear_quadratic_problem` from a JSON file.

    Keys: ``P``, ``B``, ``Q`` (nested lists), optional ``p``, ``q``,
    ``h`` (``{"kind": "box", "lo": -1, "hi": 1}``) and ``name``.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        h = prox_spec_from_dict(data["h"]) if "h" in data else None
        return bilinear_quadratic_problem(
            data["P"], data["B"], data["Q"], data.get("p"), data.get("q"), h, name=data.get("name", "custom")
        )
    except (OSError, KeyError, json.JSONDecodeError, TypeError) as exc:
        raise ConfigParse(f"cannot load problem file {path}: {exc}") from exc
