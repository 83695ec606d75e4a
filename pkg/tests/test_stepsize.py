import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minmaxkit.errors import DenominatorNonpositive, OutOfRangeStepSize
from minmaxkit.problem import SmoothnessConstants
from minmaxkit.problems import toy_problem
from minmaxkit.stepsize import (
    auto_eta_x,
    bounds_gdrga,
    bounds_pdrga,
    gamma_gdrga,
    gamma_pdrga,
    gamma_pdrga_theta,
    step_size_bounds,
    table_blockwise,
    table_jointly_lipschitz,
    theta_star,
)

TOY = toy_problem().constants


def test_toy_bounds():
    assert bounds_gdrga(TOY, 1.0) == 0.5
    assert bounds_pdrga(TOY, 1.0) == pytest.approx(1.0 / (math.sqrt(2) * (math.sqrt(2) + 1)), abs=1e-12)
    # independent high-precision value of 1/(2 + sqrt2)
    assert bounds_pdrga(TOY, 1.0) == pytest.approx(0.292893218813452475, abs=1e-15)


def test_weak_convexity_caps_pdrga():
    c = SmoothnessConstants(L_xx=0, L_xy=1, L_yx=1, L_yy=1, mu=1, rho=10.0)
    assert bounds_pdrga(c, 1.0) == 0.1


def test_gamma_values():
    assert gamma_gdrga(TOY, 1.0, 0.29).value == pytest.approx(0.6682, abs=1e-15)
    g = gamma_pdrga(TOY, 1.0, 0.2)
    assert g.value == pytest.approx(0.669258668299565, abs=1e-13)
    assert g.contracting
    assert gamma_pdrga(TOY, 1.0, 0.2928).value == pytest.approx(0.99945701, abs=1e-8)


def test_general_theta_matches_optimal():
    th = theta_star(1.0, 1.0).pdrga_theta
    assert gamma_pdrga_theta(TOY, 1.0, 0.2, th).value == pytest.approx(gamma_pdrga(TOY, 1.0, 0.2).value, rel=1e-14)


def test_denominator_guard():
    with pytest.raises(DenominatorNonpositive):
        gamma_pdrga(TOY, 1.0, 0.5)
    with pytest.raises(DenominatorNonpositive):
        gamma_pdrga_theta(TOY, 1.0, 0.5, 0.7)
    with pytest.raises(ValueError):
        gamma_pdrga_theta(TOY, 1.0, 0.1, 0.0)


def test_gamma_not_contracting_above_bound(caplog):
    g = gamma_gdrga(TOY, 1.0, 0.6)
    assert not g.contracting and "not a contraction" in caplog.text


def test_theta_star():
    assert theta_star(1.0, 1.0) == (pytest.approx(1 / math.sqrt(2)), 1.0)
    assert theta_star(0.5, 2.0).pdrga_theta == pytest.approx(0.1767766952966369, abs=1e-15)
    with pytest.raises(ValueError):
        theta_star(1.0, 0.5)


def test_jointly_lipschitz_table_kappa_one():
    assert table_jointly_lipschitz(1.0) == (1 / 64, 1 / 12, 1 / 2)
    with pytest.raises(ValueError):
        table_jointly_lipschitz(0.9)


@settings(max_examples=100, deadline=None)
@given(k=st.floats(1.0, 1e6))
def test_jointly_lipschitz_table_ordering(k):
    lin, bot, ours = table_jointly_lipschitz(k)
    assert lin < bot < ours


def test_blockwise_table_toy():
    row = table_blockwise(TOY)
    assert row.bound_prior == 0.1
    assert row.bound_ours == 0.5
    assert row.dominance is True


def test_blockwise_table_asymmetric_has_no_verdict():
    c = SmoothnessConstants(L_xx=1, L_xy=1, L_yx=2, L_yy=1, mu=1)
    assert table_blockwise(c).dominance is None


@settings(max_examples=100, deadline=None)
@given(
    L_xx=st.floats(0, 10),
    L=st.floats(0.1, 10),
    mu=st.floats(0.1, 10),
    k=st.floats(1, 100),
)
def test_blockwise_table_dominance_symmetric(L_xx, L, mu, k):
    c = SmoothnessConstants(L_xx=L_xx, L_xy=L, L_yx=L, L_yy=k * mu, mu=mu)
    row = table_blockwise(c)
    assert row.dominance and row.bound_ours >= row.bound_prior


@settings(max_examples=100, deadline=None)
@given(k=st.floats(1, 50), tau=st.floats(0.01, 1.0), frac=st.floats(0.0, 0.999))
def test_gammas_contract_inside_bounds(k, tau, frac):
    c = SmoothnessConstants(L_xx=1, L_xy=1, L_yx=1, L_yy=k, mu=1)
    assert gamma_gdrga(c, tau, frac * bounds_gdrga(c, tau)).contracting
    g = gamma_pdrga(c, tau, frac * bounds_pdrga(c, tau))
    assert g.contracting and g.value >= 0.5 - 1e-12


def test_tau_range():
    with pytest.raises(OutOfRangeStepSize):
        bounds_gdrga(TOY, 0.0)
    with pytest.raises(OutOfRangeStepSize):
        bounds_pdrga(TOY, 1.01)


def test_step_size_bounds_bundle():
    b = step_size_bounds(TOY, 1.0, eta_x=0.29)
    assert b.eta_y_max == 1.0 and b.eta_x_max_gdrga == 0.5
    assert b.gamma_gdrga == pytest.approx(0.6682)
    # 1/2 + (2 + sqrt2) 0.0841 / (1 - 2 (1 + sqrt2) 0.0841)
    assert b.gamma_pdrga == pytest.approx(0.5 + (2 + math.sqrt(2)) * 0.0841 / (1 - 2 * (1 + math.sqrt(2)) * 0.0841), rel=1e-14)
    assert b.theta_star_pdrga == pytest.approx(1 / math.sqrt(2))
    assert step_size_bounds(TOY, 1.0, eta_x=0.5).gamma_pdrga is None


def test_auto_steps():
    assert auto_eta_x(TOY, 1.0, "gdrga") == pytest.approx(0.495)
    assert auto_eta_x(TOY, 1.0, "pdrga") == pytest.approx(0.99 * 0.292893218813452475)
    assert auto_eta_x(TOY, 1.0, "ppga") == pytest.approx(0.099)
    with pytest.raises(ValueError):
        auto_eta_x(TOY, 1.0, "sgd")
