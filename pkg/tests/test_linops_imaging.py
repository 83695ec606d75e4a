import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minmaxkit.errors import ConstraintViolated, MaxIterExceeded, ShapeMismatch
from minmaxkit.imaging import (
    ImagingProblem,
    build_imaging_minmax,
    lambda_cap,
    observe,
    psnr,
    read_csv_image,
    read_pgm,
    synthetic_image,
    write_csv_image,
    write_pgm,
)
from minmaxkit.linops import (
    diagonal_operator,
    gaussian_kernel,
    identity_operator,
    make_blur_operator,
    make_downsampling_operator,
    matrix_operator,
    power_iteration_norm,
    triangle_kernel,
)
from minmaxkit.oracle import solve_inner
from minmaxkit.prox import ProxSpec


def _adjoint_gap(A, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(A.dims[0]), rng.standard_normal(A.dims[1])
    lhs, rhs = A.matvec(x) @ y, x @ A.rmatvec(y)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


OPERATORS = {
    "blur_gauss5": lambda: make_blur_operator(gaussian_kernel(5, 1.0), (16, 16)),
    "blur_asym": lambda: make_blur_operator(np.arange(6.0).reshape(2, 3), (8, 12)),
    "down2": lambda: make_downsampling_operator(2, (16, 16)),
    "down4_gauss": lambda: make_downsampling_operator(4, (16, 16), gaussian_kernel(5, 1.5)),
    "diag": lambda: diagonal_operator([3.0, 1.0, 0.5]),
    "matrix": lambda: matrix_operator(np.random.default_rng(0).standard_normal((5, 7))),
}


@pytest.mark.parametrize("name", sorted(OPERATORS))
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_adjoint_identity(name, seed):
    assert _adjoint_gap(OPERATORS[name](), seed) <= 1e-10


@pytest.mark.parametrize("name", ["blur_gauss5", "blur_asym", "down2", "down4_gauss", "matrix"])
def test_power_iteration_vs_svd(name):
    A = OPERATORS[name]()
    dense = np.linalg.svd(A.to_dense(), compute_uv=False)[0]
    assert power_iteration_norm(A) == pytest.approx(dense, abs=1e-6)
    assert A.norm() == pytest.approx(dense, abs=1e-6)


def test_simple_norms():
    assert power_iteration_norm(matrix_operator(np.eye(64))) == pytest.approx(1.0, abs=1e-12)
    assert identity_operator(64).norm() == 1.0
    assert power_iteration_norm(matrix_operator(np.diag([3.0, 1.0, 0.5]))) == pytest.approx(3.0, abs=1e-9)
    assert diagonal_operator([3.0, 1.0, 0.5]).norm() == 3.0


def test_power_iteration_budget():
    A = matrix_operator(np.diag([1.0, 0.999999, 0.5]))
    with pytest.raises(MaxIterExceeded) as info:
        power_iteration_norm(A, max_iter=3)
    assert info.value.best > 0


def test_uniform_kernel_norm_one():
    A = make_blur_operator(np.full((3, 3), 1 / 9), (8, 8))
    assert np.linalg.svd(A.to_dense(), compute_uv=False)[0] == pytest.approx(1.0, abs=1e-12)
    assert A.norm() == pytest.approx(1.0, abs=1e-12)


def test_delta_kernel_is_identity():
    k = np.zeros((3, 3))
    k[1, 1] = 1.0
    np.testing.assert_allclose(make_blur_operator(k, (8, 8)).to_dense(), np.eye(64), atol=1e-15)
    one = np.ones((1, 1))
    np.testing.assert_allclose(make_downsampling_operator(1, (4, 4), one).to_dense(), np.eye(16), atol=1e-15)


def test_blur_matches_direct_convolution():
    rng = np.random.default_rng(2)
    k = rng.random((3, 5))
    img = rng.random((7, 9))
    out = make_blur_operator(k, img.shape).matvec(img).reshape(img.shape)
    ref = np.zeros_like(img)
    for i in range(7):
        for j in range(9):
            for a in range(3):
                for b in range(5):
                    ref[i, j] += k[a, b] * img[(i - a + 1) % 7, (j - b + 2) % 9]
    np.testing.assert_allclose(out, ref, atol=1e-13)


def test_downsampling_dense_structure():
    A = make_downsampling_operator(2, (16, 16))
    assert A.dims == (256, 64) and A.to_dense().shape == (64, 256)


def test_shape_errors():
    A = make_blur_operator(triangle_kernel(4), (8, 8))
    with pytest.raises(ShapeMismatch):
        A.matvec(np.zeros(10))
    with pytest.raises(ShapeMismatch):
        A.rmatvec(np.zeros(10))
    with pytest.raises(ShapeMismatch):
        make_blur_operator(np.ones((9, 9)), (8, 8))
    with pytest.raises(ShapeMismatch):
        make_downsampling_operator(3, (16, 16))
    with pytest.raises(ValueError):
        make_downsampling_operator(0, (16, 16))


def test_kernels_normalized():
    assert triangle_kernel(4).sum() == pytest.approx(1.0)
    np.testing.assert_allclose(triangle_kernel(4), np.outer([1, 3, 3, 1], [1, 3, 3, 1]) / 64, atol=1e-15)
    assert gaussian_kernel(9, 2.0).sum() == pytest.approx(1.0)


def test_blur_is_bit_deterministic():
    A = make_blur_operator(gaussian_kernel(9, 2.0), (64, 64))
    x = synthetic_image(64).reshape(-1)
    assert A.matvec(x).tobytes() == A.matvec(x).tobytes()


# -- dualized imaging problem -------------------------------------------


def test_lambda_caps():
    assert lambda_cap(0.03, 1.0) == pytest.approx(0.0009 / (2 + math.sqrt(2)), rel=1e-15)
    assert lambda_cap(0.03, 1.0) == pytest.approx(0.0002636, abs=5e-8)
    assert lambda_cap(0.03, 0.24) == pytest.approx(0.0010983, abs=5e-8)
    # a weight just below the 0.24 cap gives a unit-tau y step of about 1.211
    assert 0.00109 < lambda_cap(0.03, 0.24)
    assert 0.00109 / 0.03**2 == pytest.approx(1.211, abs=1e-3)


def test_cap_enforced():
    A = identity_operator(16)
    ok = ImagingProblem(A, np.zeros(16), 0.03, 0.00026)
    build_imaging_minmax(ok)
    with pytest.raises(ConstraintViolated):
        build_imaging_minmax(ImagingProblem(A, np.zeros(16), 0.03, 0.001))
    build_imaging_minmax(ImagingProblem(A, np.zeros(16), 0.03, 0.001, enforce_lambda_cap=False))


def test_identity_closed_forms():
    sigma, lam = 0.5, 0.07
    p = build_imaging_minmax(ImagingProblem(identity_operator(4), np.zeros(4), sigma, lam, ProxSpec.zero()))
    x = np.array([1.0, -2.0, 0.5, 3.0])
    r = solve_inner(p, x)
    np.testing.assert_allclose(r.y_star, lam / sigma**2 * x, rtol=1e-15)
    assert r.phi == pytest.approx(lam / (2 * sigma**2) * x @ x, rel=1e-14)
    np.testing.assert_allclose(r.grad_phi, lam / sigma**2 * x, rtol=1e-14)


def test_derived_constants():
    A = make_blur_operator(gaussian_kernel(5, 1.0), (16, 16))
    ip = ImagingProblem(A, np.zeros(256), 0.03, 0.0002, ProxSpec.mcp(0.01, 4.0))
    c = ip.constants()
    assert c.L_xy == c.L_yx == pytest.approx(A.norm())
    assert c.L_yy == c.mu == pytest.approx(0.0009 / 0.0002)
    assert c.kappa_y == 1.0 and c.rho == 0.25


def test_closed_form_matches_iterative_oracle():
    import dataclasses

    A = make_downsampling_operator(2, (8, 8))
    rng = np.random.default_rng(4)
    ip = ImagingProblem(A, rng.random(16), 0.1, 0.001, ProxSpec.soft_threshold(0.01))
    p = build_imaging_minmax(ip)
    q = dataclasses.replace(p, y_star_closed_form=None)
    for _ in range(5):
        x = rng.random(64)
        a, b = solve_inner(p, x), solve_inner(q, x, tol=1e-12)
        np.testing.assert_allclose(a.y_star, b.y_star, atol=1e-10)


def test_energy_matches_phi():
    A = make_blur_operator(gaussian_kernel(5, 1.0), (16, 16))
    x_true = synthetic_image(16).reshape(-1)
    b = observe(A, x_true, 0.03, seed=1)
    ip = ImagingProblem(A, b, 0.03, 0.0002, ProxSpec.soft_threshold(0.01))
    p = build_imaging_minmax(ip)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.random(256)
        assert solve_inner(p, x).phi == pytest.approx(ip.energy(x), rel=1e-12)


def test_unit_tau_ascent_hits_ystar():
    A = make_blur_operator(gaussian_kernel(5, 1.0), (16, 16))
    ip = ImagingProblem(A, np.random.default_rng(0).random(256), 0.03, 0.0002)
    p = build_imaging_minmax(ip)
    x = np.random.default_rng(1).random(256)
    y = np.random.default_rng(2).random(256)
    eta_y = ip.lam / ip.sigma**2
    y1 = y + eta_y * p.gy(x, y)
    np.testing.assert_allclose(y1, p.y_star_closed_form(x), atol=1e-12)


def test_observation_shape_checked():
    with pytest.raises(ShapeMismatch):
        ImagingProblem(identity_operator(4), np.zeros(5), 0.1, 0.001)
    with pytest.raises(ValueError):
        ImagingProblem(identity_operator(4), np.zeros(4), 0.0, 0.001)


def test_observe_is_seeded():
    A = identity_operator(16)
    a, b = observe(A, np.zeros(16), 0.1, seed=3), observe(A, np.zeros(16), 0.1, seed=3)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, observe(A, np.zeros(16), 0.1, seed=4))


# -- PSNR and I/O ----------------------------------------------------------


def test_psnr():
    img = synthetic_image(16)
    assert psnr(img, img) == math.inf
    assert psnr(np.zeros((4, 4)), np.full((4, 4), 0.1)) == pytest.approx(20.0, abs=1e-12)
    rng = np.random.default_rng(0)
    a, b = rng.random((8, 8)), rng.random((8, 8))
    mse = sum((u - v) ** 2 for u, v in zip(a.ravel(), b.ravel())) / 64
    assert psnr(a, b) == pytest.approx(10 * math.log10(1 / mse), rel=1e-12)
    with pytest.raises(ShapeMismatch):
        psnr(a, b[:4])


def test_pgm_round_trip(tmp_path):
    img = np.arange(12).reshape(3, 4) / 255.0
    f = tmp_path / "a.pgm"
    write_pgm(f, img)
    assert f.read_bytes().startswith(b"P5\n4 3\n255\n")
    np.testing.assert_array_equal(read_pgm(f), img)
    write_pgm(f, np.array([[-1.0, 2.0]]))
    np.testing.assert_array_equal(read_pgm(f), [[0.0, 1.0]])


def test_pgm_with_comment(tmp_path):
    f = tmp_path / "c.pgm"
    f.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 255]))
    np.testing.assert_array_equal(read_pgm(f), [[0.0, 1.0]])


def test_csv_image_round_trip(tmp_path):
    img = np.random.default_rng(0).random((3, 5))
    f = tmp_path / "a.csv"
    write_csv_image(f, img)
    np.testing.assert_array_equal(read_csv_image(f), img)


def test_synthetic_image_range():
    img = synthetic_image(64)
    assert img.shape == (64, 64) and img.min() == 0.0 and img.max() == 1.0
