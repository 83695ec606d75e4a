import dataclasses

import numpy as np
import pytest

from conftest import toy_run
from minmaxkit.errors import IllPosedProx, MissingProxOracle, OutOfRangeStepSize
from minmaxkit.problems import quadratic_problem, toy_problem
from minmaxkit.prox import ProxSpec
from minmaxkit.solvers import (
    Scheme,
    SolverState,
    StepSizeConfig,
    gd_rga_step,
    implicit_residual,
    pd_rga_step,
    ppga_step,
    run_solver,
)


def _cfg(p, eta_x, **kw):
    return StepSizeConfig.from_constants(p.constants, eta_x, **kw)


def test_first_gdrga_step(toy):
    s = gd_rga_step(toy, SolverState.initial(toy, [-5.0], [5.0]), _cfg(toy, 0.29))
    # grad_x = g'(-5) + 5 = -8 + 5 = -3, so x1 = -5 + 0.87; tau = 1 makes y1 = x1
    assert s.x[0] == pytest.approx(-4.13, abs=1e-14)
    assert s.y[0] == pytest.approx(-4.13, abs=1e-14)
    assert s.k == 1


def test_first_pdrga_step(toy):
    s = pd_rga_step(toy, SolverState.initial(toy, [-5.0], [5.0]), _cfg(toy, 0.29), debug=True)
    # prox of 0.29 g at -5 - 0.29*5 = -6.45, on the outer branch
    assert s.x[0] == pytest.approx((-6.45 - 0.58) / 1.58, abs=1e-14)
    assert s.y[0] == s.x[0]


def test_first_ppga_step(toy):
    s = ppga_step(toy, SolverState.initial(toy, [-5.0], [5.0]), _cfg(toy, 0.06))
    assert s.x[0] == pytest.approx(-4.82, abs=1e-14)
    # the ascent reads x_0 = -5, so y1 = 5 + (-5 - 5)
    assert s.y[0] == pytest.approx(-5.0, abs=1e-14)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_fixed_point_is_stationary(toy, scheme):
    eta = 0.06 if scheme is Scheme.PPGA else 0.29
    s0 = SolverState.initial(toy, [-2.0 / 3.0], [-2.0 / 3.0])
    tr = run_solver(toy, scheme, _cfg(toy, eta), s0.x, s0.y, max_iter=5)
    np.testing.assert_allclose(tr.xs[:, 0], -2.0 / 3.0, atol=1e-15)
    np.testing.assert_allclose(tr.ys[:, 0], -2.0 / 3.0, atol=1e-15)


def test_alternation_order_matters(quad):
    cfg = _cfg(quad, 0.05)
    s = SolverState.initial(quad, [1.0], [0.0])
    a, b = gd_rga_step(quad, s, cfg), ppga_step(quad, s, cfg)
    assert a.x[0] == b.x[0]
    assert a.y[0] != b.y[0]


def test_pdrga_prox_is_implicit_step(quad):
    cfg = _cfg(quad, 0.1)
    s = SolverState.initial(quad, [1.3], [-0.4])
    x1 = pd_rga_step(quad, s, cfg).x
    assert implicit_residual(quad, s, x1, cfg) < 1e-14


def test_debug_residual_detects_wrong_prox(toy):
    bad = dataclasses.replace(toy, prox_x=lambda eta, x, y: x)
    with pytest.raises(AssertionError):
        pd_rga_step(bad, SolverState.initial(toy, [-5.0], [5.0]), _cfg(toy, 0.29), debug=True)


@pytest.mark.parametrize("scheme,eta", [("gdrga", 0.29), ("pdrga", 0.29), ("ppga", 0.06)])
def test_toy_converges(scheme, eta):
    tr = toy_run(scheme, eta, max_iter=10_000, eps=1e-10)
    assert abs(tr.final.x[0] + 2.0 / 3.0) < 1e-6
    assert tr.meta["stopped"] == "eps"


def test_determinism():
    a, b = toy_run("pdrga", 0.29, max_iter=50), toy_run("pdrga", 0.29, max_iter=50)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
    assert np.array_equal(a.grad_norms, b.grad_norms)


def test_zero_iterations(toy):
    tr = run_solver(toy, "gdrga", _cfg(toy, 0.29), [-5.0], [5.0], max_iter=0)
    assert len(tr) == 1 and tr.meta["steps"] == 0
    assert tr.final.grad_norm == pytest.approx(13.0)


def test_untraced_run_matches(toy):
    a = run_solver(toy, "gdrga", _cfg(toy, 0.29), [-5.0], [5.0], max_iter=20)
    b = run_solver(toy, "gdrga", _cfg(toy, 0.29), [-5.0], [5.0], max_iter=20, trace=False)
    assert np.array_equal(a.xs, b.xs)
    assert np.all(np.isnan(b.phis)) and b.meta["diagnostic_evaluations"] == 0
    with pytest.raises(ValueError):
        run_solver(toy, "gdrga", _cfg(toy, 0.29), [-5.0], [5.0], trace=False, eps=1e-3)


def test_evaluation_counts(toy):
    tr = run_solver(toy, "pdrga", _cfg(toy, 0.29), [-5.0], [5.0], max_iter=7)
    assert tr.meta["solver_evaluations"] == {"grad_x": 0, "prox_x": 7, "grad_y": 7, "prox_h": 7}
    assert tr.meta["diagnostic_evaluations"] == 8


def test_step_config_validation(toy):
    c = toy.constants
    with pytest.raises(OutOfRangeStepSize):
        StepSizeConfig.from_constants(c, 0.1, tau=1.5)
    with pytest.raises(OutOfRangeStepSize):
        StepSizeConfig.from_constants(c, -0.1)
    with pytest.raises(OutOfRangeStepSize):
        StepSizeConfig.from_constants(c, 0.1, eta_y=1.0, tau=0.5)
    cfg = StepSizeConfig.from_constants(c, 0.1, eta_y=0.5)
    assert cfg.tau == 0.5


def test_weak_convexity_guard(toy):
    cfg = _cfg(toy, 0.5)  # eta * rho = 1
    with pytest.raises(IllPosedProx):
        run_solver(toy, "pdrga", cfg, [0.0], [0.0], max_iter=1)
    # explicit schemes do not need the prox
    run_solver(toy, "gdrga", cfg, [0.0], [0.0], max_iter=1)


def test_override_flag_is_recorded(quad):
    # quadratic prox stays well defined beyond 1/rho as long as 1 - 2 a eta != 0
    cfg = _cfg(quad, 2.5)
    tr = run_solver(quad, "pdrga", cfg, [0.1], [0.0], max_iter=2, allow_nonunique_prox=True)
    assert tr.meta["nonunique_prox_allowed"] is True


def test_missing_prox(toy):
    with pytest.raises(MissingProxOracle):
        run_solver(dataclasses.replace(toy, prox_x=None), "pdrga", _cfg(toy, 0.29), [0.0], [0.0])


def test_nonsmooth_rejects_explicit(toy):
    ns = dataclasses.replace(toy, smooth_x=False, grad_x_smooth=toy.grad_x)
    with pytest.raises(ValueError):
        run_solver(ns, "gdrga", _cfg(toy, 0.29), [0.0], [0.0])
    with pytest.raises(ValueError):
        run_solver(toy, "bogus", _cfg(toy, 0.29), [0.0], [0.0])


def test_regularized_ascent_uses_prox():
    p = toy_problem("regularizer")
    cfg = StepSizeConfig.from_constants(p.constants, 0.29)
    a = run_solver(p, "gdrga", cfg, [-5.0], [5.0], max_iter=30)
    b = run_solver(toy_problem(), "gdrga", cfg, [-5.0], [5.0], max_iter=30)
    # prox of the quadratic h with eta_y = 1 halves y + x, the coupled form gives x
    assert not np.allclose(a.ys, b.ys)
    assert abs(a.final.x[0] + 2.0 / 3.0) < 1e-4


def test_box_regularizer_keeps_y_feasible():
    p = dataclasses.replace(quadratic_problem(0.25, 2.0, 1.0), h=ProxSpec.box(-0.2, 0.2), y_star_closed_form=None)
    cfg = StepSizeConfig.from_constants(p.constants, 0.05)
    tr = run_solver(p, "gdrga", cfg, [1.0], [0.0], max_iter=40)
    assert np.all(np.abs(tr.ys) <= 0.2 + 1e-15)
