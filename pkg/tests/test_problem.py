import dataclasses
import json

import numpy as np
import pytest

from minmaxkit.errors import ConfigParse, DimensionMismatch, NonFiniteEvaluation
from minmaxkit.problem import ConcavitySource, MinMaxProblem, SmoothnessConstants, effective_constants, validate_problem
from minmaxkit.problems import bilinear_quadratic_problem, load_problem_file, quadratic_problem, toy_problem
from minmaxkit.prox import ProxSpec


def _samples(d, n, count=40, seed=1, scale=3.0):
    rng = np.random.default_rng(seed)
    return [(rng.uniform(-scale, scale, d), rng.uniform(-scale, scale, n)) for _ in range(count)]


def test_toy_constants_hold():
    rep = validate_problem(toy_problem(), _samples(1, 1), trials=500)
    assert rep.ok, rep.violations
    assert all(r <= 1.0 + 1e-9 for r in rep.ratios.values())


def test_toy_regularizer_variant():
    p = toy_problem("regularizer")
    assert p.concavity_source is ConcavitySource.REGULARIZER
    rep = validate_problem(p, _samples(1, 1), trials=200)
    assert rep.ok and "mu" not in rep.ratios
    with pytest.raises(ValueError):
        toy_problem("bogus")


def test_quadratic_tight_ratios():
    rep = validate_problem(quadratic_problem(1.0, 1.0, 1.0), _samples(1, 1), trials=300)
    for key in ("L_xx", "L_xy", "L_yx", "L_yy", "mu", "rho"):
        assert rep.ratios[key] == pytest.approx(1.0, abs=1e-9), key
    assert rep.ok


def test_understated_constant_detected():
    p = quadratic_problem(1.0, 1.0, 1.0)
    c = dataclasses.replace(p.constants, L_yx=0.5)
    bad = dataclasses.replace(p, constants=c)
    rep = validate_problem(bad, _samples(1, 1), trials=300)
    assert rep.ratios["L_yx"] == pytest.approx(2.0, rel=1e-9)
    assert list(rep.violations) == ["L_yx"]
    assert not rep.as_dict()["ok"]


def test_effective_constants_toy():
    k, beta, L_phi = effective_constants(toy_problem())
    assert (k, beta, L_phi) == (1.0, 1.0, 3.0)
    assert effective_constants(toy_problem().constants) == (1.0, 1.0, 3.0)


def test_effective_constants_general():
    c = SmoothnessConstants(L_xx=0.5, L_xy=2.0, L_yx=3.0, L_yy=4.0, mu=0.5)
    assert c.kappa_y == 8.0
    assert c.beta == pytest.approx(0.5 / 6.0)
    assert c.L_phi == pytest.approx(0.5 + 12.0)


def test_lyy_below_mu_is_inflated(caplog):
    c = SmoothnessConstants(L_xx=0, L_xy=1, L_yx=1, L_yy=0.5, mu=1.0)
    assert c.L_yy == 1.0 and c.adjusted and c.L_yy_declared == 0.5
    assert "inflating" in caplog.text


@pytest.mark.parametrize("kw", [dict(L_xy=0.0), dict(mu=-1.0), dict(rho=-0.1), dict(L_xx=float("nan"))])
def test_constants_reject_bad_values(kw):
    base = dict(L_xx=1.0, L_xy=1.0, L_yx=1.0, L_yy=1.0, mu=1.0, rho=0.0)
    base.update(kw)
    with pytest.raises(ValueError):
        SmoothnessConstants(**base)


def test_wrong_shape_gradient():
    p = dataclasses.replace(toy_problem(), grad_x=lambda x, y: np.zeros(2))
    with pytest.raises(DimensionMismatch):
        p.gx(np.zeros(1), np.zeros(1))
    with pytest.raises(DimensionMismatch):
        dataclasses.replace(toy_problem(), d=0)


def test_nonfinite_gradient():
    p = dataclasses.replace(toy_problem(), grad_x=lambda x, y: np.array([np.inf]))
    with pytest.raises(NonFiniteEvaluation):
        p.gx(np.zeros(1), np.zeros(1))


def test_regularizer_must_be_strong_enough():
    with pytest.raises(ValueError):
        dataclasses.replace(toy_problem("regularizer"), h=ProxSpec.quadratic(0.5))


def test_nonsmooth_needs_smooth_part():
    with pytest.raises(ValueError):
        dataclasses.replace(toy_problem(), smooth_x=False)


def test_bilinear_quadratic_constants():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((3, 3))
    P = -(M + M.T) / 2
    B = rng.standard_normal((3, 2))
    Q = np.diag([1.0, 4.0])
    p = bilinear_quadratic_problem(P, B, Q)
    c = p.constants
    assert c.L_xy == pytest.approx(np.linalg.svd(B, compute_uv=False)[0])
    assert c.mu == 1.0 and c.L_yy == 4.0
    assert c.rho == pytest.approx(max(0.0, -np.linalg.eigvalsh(P)[0]))
    assert validate_problem(p, _samples(3, 2), trials=300).ok


def test_bilinear_regularizer_source():
    p = bilinear_quadratic_problem(np.eye(1), np.ones((1, 1)), np.zeros((1, 1)), h=ProxSpec.quadratic(2.0))
    assert p.concavity_source is ConcavitySource.REGULARIZER and p.constants.mu == 2.0
    with pytest.raises(ValueError):
        bilinear_quadratic_problem(np.eye(1), np.ones((1, 1)), np.zeros((1, 1)))


def test_load_problem_file(tmp_path):
    f = tmp_path / "p.json"
    f.write_text(json.dumps({"P": [[1.0]], "B": [[2.0]], "Q": [[1.0]], "h": {"kind": "box", "lo": -1, "hi": 1}}))
    p = load_problem_file(f)
    assert p.constants.L_xy == 2.0 and p.h.kind.value == "box"
    with pytest.raises(ConfigParse):
        load_problem_file(tmp_path / "missing.json")
    f.write_text("{}")
    with pytest.raises(ConfigParse):
        load_problem_file(f)


def test_objective_includes_regularizer():
    p = toy_problem("regularizer")
    x, y = np.array([0.2]), np.array([1.5])
    assert p.objective(x, y) == pytest.approx(0.5 - 0.04 + 0.3 - 0.5 * 2.25)


def test_quadratic_bounded_below_flag():
    assert quadratic_problem(0.25, 2.0, 1.0).phi_lower_bound == 0.0
    assert quadratic_problem(2.0, 1.0, 1.0).phi_lower_bound is None
    with pytest.raises(ValueError):
        quadratic_problem(1.0, 0.0, 1.0)


def test_custom_problem_is_frozen():
    p = toy_problem()
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.d = 3
    assert isinstance(p, MinMaxProblem)
