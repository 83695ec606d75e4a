"""Dualized imaging inverse problems and image I/O.

The variational problem ``min_x lam/(2 sigma^2) ||Ax - b||^2 + g(x)`` is
written as the saddle problem

    min_x max_y <Ax - b, y> - sigma^2/(2 lam) ||y||^2 + g(x)

whose inner maximizer is ``y*(x) = (lam/sigma^2)(Ax - b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConstraintViolated, ShapeMismatch
from .linops import LinearOperator
from .problem import MinMaxProblem, SmoothnessConstants
from .prox import ProxSpec

__all__ = [
    "ImagingProblem",
    "lambda_cap",
    "build_imaging_minmax",
    "psnr",
    "synthetic_image",
    "observe",
    "read_pgm",
    "write_pgm",
    "read_csv_image",
    "write_csv_image",
]

SQRT2 = math.sqrt(2.0)


def lambda_cap(sigma: float, norm_A: float) -> float:
    """Largest regularization weight allowed in capped mode.

    ``sigma^2 / ((2 + sqrt2) max(||A||, ||A||^2))``. For ``||A|| <= 1`` this
    is ``sigma^2/((2+sqrt2)||A||)``; above one the squared norm is what
    keeps a unit primal step admissible, so the smaller of the two caps is
    used.
    """
    return sigma**2 / ((2.0 + SQRT2) * max(norm_A, norm_A**2))


@dataclass(frozen=True)
class ImagingProblem:
    A: LinearOperator
    b: np.ndarray
    sigma: float
    lam: float
    g_spec: ProxSpec = ProxSpec.soft_threshold(0.01)
    image_shape: Optional[tuple] = None
    enforce_lambda_cap: bool = True
    norm_A: Optional[float] = None

    def __post_init__(self):
        if not (self.sigma > 0 and self.lam > 0):
            raise ValueError("sigma and lambda must be positive")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.size != self.A.dims[1]:
            raise ShapeMismatch(f"observation has size {b.size}, operator range is {self.A.dims[1]}")
        object.__setattr__(self, "b", b)
        if self.norm_A is None:
            object.__setattr__(self, "norm_A", self.A.norm())

    @property
    def mu(self) -> float:
        return self.sigma**2 / self.lam

    @property
    def cap(self) -> float:
        return lambda_cap(self.sigma, self.norm_A)

    def constants(self) -> SmoothnessConstants:
        g = self.g_spec
        L_xx = g.grad_lipschitz if g.grad_lipschitz is not None else 0.0
        nA = max(self.norm_A, 1e-300)
        return SmoothnessConstants(L_xx=L_xx, L_xy=nA, L_yx=nA, L_yy=self.mu, mu=self.mu, rho=g.weak_convexity)

    def energy(self, x) -> float:
        """``lam/(2 sigma^2) ||Ax - b||^2 + g(x)``."""
        r = self.A.matvec(x) - self.b
        return float(self.lam / (2.0 * self.sigma**2) * (r @ r) + self.g_spec.value(x))


def build_imaging_minmax(ip: ImagingProblem) -> MinMaxProblem:
    """Saddle formulation with ``h = 0``, closed-form ``y*`` and the prox-in-x.

    ``prox_x(eta, x, y) = prox_{eta g}(x - eta A^T y)``. For nonsmooth ``g``
    the x-gradient returned is the least-norm subgradient and
    ``grad_x_smooth = A^T y``.

    Raises
    ------
    ConstraintViolated
        In capped mode when ``lam`` exceeds :func:`lambda_cap`.
    """
    if ip.enforce_lambda_cap and ip.lam > ip.cap * (1.0 + 1e-12):
        raise ConstraintViolated(f"lambda = {ip.lam:g} exceeds the cap {ip.cap:.6g} (sigma={ip.sigma:g}, ||A||={ip.norm_A:.6g})")
    A, b, g = ip.A, ip.b, ip.g_spec
    mu = ip.mu
    d, n = A.dims

    def grad_x_smooth(x, y):
        return A.rmatvec(y)

    def grad_x(x, y):
        return g.min_norm_subgradient(x, A.rmatvec(y))

    def grad_y(x, y):
        return A.matvec(x) - b - mu * y

    def phi_value(x, y):
        y = np.asarray(y, dtype=float)
        return float((A.matvec(x) - b) @ y - 0.5 * mu * (y @ y) + g.value(x))

    def prox_x(eta, x, y):
        return g.prox(eta, np.asarray(x, dtype=float) - eta * A.rmatvec(y))

    def y_star(x):
        return (A.matvec(x) - b) / mu

    return MinMaxProblem(
        d=d,
        n=n,
        grad_x=grad_x,
        grad_y=grad_y,
        phi_value=phi_value,
        constants=ip.constants(),
        prox_x=prox_x,
        y_star_closed_form=y_star,
        smooth_x=g.smooth,
        grad_x_smooth=grad_x_smooth,
        phi_lower_bound=0.0,
        name=f"imaging({A.name})",
    )


def psnr(reference, candidate, peak: float = 1.0) -> float:
    """``10 log10(peak^2 / MSE)``; ``inf`` for identical images."""
    r = np.asarray(reference, dtype=float)
    c = np.asarray(candidate, dtype=float)
    if r.shape != c.shape:
        raise ShapeMismatch(f"shapes differ: {r.shape} vs {c.shape}")
    mse = float(np.mean((r - c) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def synthetic_image(size: int = 64) -> np.ndarray:
    """Piecewise-constant image in [0, 1] on a zero background (square, disc, bar)."""
    img = np.zeros((size, size))
    u = np.arange(size) / size
    yy, xx = np.meshgrid(u, u, indexing="ij")
    img[(yy > 0.15) & (yy < 0.45) & (xx > 0.15) & (xx < 0.45)] = 0.8
    img[(yy - 0.65) ** 2 + (xx - 0.65) ** 2 < 0.2**2] = 0.6
    img[(yy > 0.7) & (yy < 0.8) & (xx > 0.1) & (xx < 0.5)] = 1.0
    return img


def observe(A: LinearOperator, x_true, sigma: float, seed: int = 0) -> np.ndarray:
    """``b = A x_true + sigma * noise`` with seeded standard Gaussian noise."""
    rng = np.random.default_rng(seed)
    clean = A.matvec(np.asarray(x_true, dtype=float).reshape(-1))
    return clean + sigma * rng.standard_normal(clean.size)


# -- image I/O: byte/255 exactly ------------------------------------------


def _to_bytes(img) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img, dtype=float) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, img) -> None:
    """Binary 8-bit NetPBM (P5), values clipped to [0, 1] then scaled by 255."""
    data = _to_bytes(img)
    if data.ndim != 2:
        raise ShapeMismatch("PGM images must be 2-D")
    h, w = data.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end : end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end].decode("ascii"))
        pos = end
    if tokens[0] != "P5" or tokens[3] != "255":
        raise ValueError("only binary 8-bit P5 images are supported")
    w, h = int(tokens[1]), int(tokens[2])
    pos += 1  # single whitespace after maxval
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos)
    return data.reshape(h, w).astype(float) / 255.0


def write_csv_image(path, img) -> None:
    arr = np.asarray(img, dtype=float)
    lines = [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(arr)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv_image(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
