"""Matrix-free linear operators for imaging: circular blur and downsampling.

Images are 2-D float64 arrays flattened row-major into vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MaxIterExceeded, ShapeMismatch

__all__ = [
    "LinearOperator",
    "identity_operator",
    "diagonal_operator",
    "matrix_operator",
    "power_iteration_norm",
    "make_blur_operator",
    "make_downsampling_operator",
    "triangle_kernel",
    "gaussian_kernel",
]


@dataclass(frozen=True)
class LinearOperator:
    """``forward: R^d -> R^n`` and its adjoint ``R^n -> R^d``."""

    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    dims: tuple  # (d, n)
    spectral_norm_hint: Optional[float] = None
    name: str = "op"

    def __matmul__(self, x):
        return self.matvec(x)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.dims[0]:
            raise ShapeMismatch(f"{self.name}: input size {x.size}, expected {self.dims[0]}")
        return self.forward(x)

    def rmatvec(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.size != self.dims[1]:
            raise ShapeMismatch(f"{self.name}: adjoint input size {y.size}, expected {self.dims[1]}")
        return self.adjoint(y)

    def to_dense(self) -> np.ndarray:
        """Materialize the ``n x d`` matrix column by column (small operators only)."""
        d, n = self.dims
        M = np.empty((n, d))
        e = np.zeros(d)
        for j in range(d):
            e[j] = 1.0
            M[:, j] = self.matvec(e)
            e[j] = 0.0
        return M

    def norm(self, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
        if self.spectral_norm_hint is not None:
            return float(self.spectral_norm_hint)
        return power_iteration_norm(self, tol=tol, max_iter=max_iter, seed=seed)


def identity_operator(d: int) -> LinearOperator:
    return LinearOperator(lambda x: x.copy(), lambda y: y.copy(), (d, d), 1.0, "identity")


def diagonal_operator(diag) -> LinearOperator:
    w = np.asarray(diag, dtype=float).reshape(-1)
    return LinearOperator(lambda x: w * x, lambda y: w * y, (w.size, w.size), float(np.max(np.abs(w))), "diag")


def matrix_operator(M) -> LinearOperator:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n, d = M.shape
    return LinearOperator(lambda x: M @ x, lambda y: M.T @ y, (d, n), None, "matrix")


def power_iteration_norm(A: LinearOperator, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``A^T A``.

    Stops when ``||A^T A v - s^2 v|| <= tol * s^2`` for the unit iterate v.
    Deterministic given ``seed``.
    """
    d, _ = A.dims
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    s2 = 0.0
    res = np.inf
    for _ in range(max_iter):
        w = A.rmatvec(A.matvec(v))
        s2 = float(v @ w)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        res = float(np.linalg.norm(w - s2 * v))
        if res <= tol * s2:
            return float(np.sqrt(s2))
        v = w / nw
    raise MaxIterExceeded(
        f"power iteration did not converge in {max_iter} iterations (relative residual {res / max(s2, 1e-300):g})",
        best=float(np.sqrt(max(s2, 0.0))),
        residual=res,
    )


def triangle_kernel(size: int = 4) -> np.ndarray:
    """Normalized separable triangle (linear interpolation) kernel."""
    t = (np.arange(size) - (size - 1) / 2.0) / (size / 2.0)
    w = np.maximum(1.0 - np.abs(t), 0.0)
    k = np.outer(w, w)
    return k / k.sum()


def gaussian_kernel(size: int = 5, std: float = 1.0) -> np.ndarray:
    t = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-0.5 * (t / std) ** 2)
    k = np.outer(w, w)
    return k / k.sum()


def _transfer(kernel, shape):
    """FFT of the kernel zero-padded to ``shape`` with its center at (0, 0)."""
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 2:
        raise ShapeMismatch("kernel must be 2-D")
    kh, kw = kernel.shape
    H, W = shape
    if kh > H or kw > W:
        raise ShapeMismatch(f"kernel {kernel.shape} larger than image {shape}")
    pad = np.zeros((H, W))
    pad[:kh, :kw] = kernel
    pad = np.roll(pad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.rfft2(pad)


def make_blur_operator(kernel, image_shape) -> LinearOperator:
    """Circular convolution with ``kernel`` (centered at ``(kh//2, kw//2)``).

    The operator is diagonalized by the 2-D DFT, so its spectral norm is the
    largest modulus of the transfer function and is stored as the hint.
    """
    shape = tuple(int(s) for s in image_shape)
    if len(shape) != 2:
        raise ShapeMismatch("image_shape must be (rows, cols)")
    K = _transfer(kernel, shape)
    Kc = np.conj(K)
    d = shape[0] * shape[1]

    def fwd(x):
        return np.fft.irfft2(np.fft.rfft2(x.reshape(shape)) * K, s=shape).reshape(-1)

    def adj(y):
        return np.fft.irfft2(np.fft.rfft2(y.reshape(shape)) * Kc, s=shape).reshape(-1)

    return LinearOperator(fwd, adj, (d, d), float(np.max(np.abs(K))), "blur")


def make_downsampling_operator(factor: int, image_shape, antialias_kernel=None) -> LinearOperator:
    """``A = S H``: anti-aliasing blur then keep every ``factor``-th pixel.

    The adjoint inserts zeros (``S^T``) and correlates with the kernel
    (``H^T``). The default kernel is :func:`triangle_kernel` of size 4.
    """
    s = int(factor)
    shape = tuple(int(v) for v in image_shape)
    if s < 1:
        raise ValueError("factor must be a positive integer")
    if len(shape) != 2 or shape[0] % s or shape[1] % s:
        raise ShapeMismatch(f"image shape {shape} not divisible by factor {s}")
    kernel = triangle_kernel(4) if antialias_kernel is None else antialias_kernel
    H = make_blur_operator(kernel, shape)
    small = (shape[0] // s, shape[1] // s)
    d = shape[0] * shape[1]
    n = small[0] * small[1]

    def fwd(x):
        return H.forward(x).reshape(shape)[::s, ::s].reshape(-1)

    def adj(y):
        up = np.zeros(shape)
        up[::s, ::s] = y.reshape(small)
        return H.adjoint(up.reshape(-1))

    hint = H.spectral_norm_hint if s == 1 else None
    return LinearOperator(fwd, adj, (d, n), hint, "downsample")
