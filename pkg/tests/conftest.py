import numpy as np
import pytest

from minmaxkit.problems import quadratic_problem, toy_problem
from minmaxkit.solvers import StepSizeConfig, run_solver


def grid_prox(value, tau, anchor, lo=-3.0, hi=3.0, h=1e-4):
    """Brute-force ``argmin_z value(z) + (z - anchor)^2 / (2 tau)`` on a grid."""
    z = np.arange(lo, hi + h / 2, h)
    obj = value(z) + (z - anchor) ** 2 / (2.0 * tau)
    return z[np.argmin(obj)]


@pytest.fixture(scope="session")
def toy():
    return toy_problem()


@pytest.fixture(scope="session")
def quad():
    # phi(x) = (b^2/(4c) - a) x^2 = 0.75 x^2, bounded below
    return quadratic_problem(0.25, 2.0, 1.0)


def toy_run(scheme, eta_x, max_iter=1000, **kw):
    p = toy_problem()
    cfg = StepSizeConfig.from_constants(p.constants, eta_x)
    return run_solver(p, scheme, cfg, [-5.0], [5.0], max_iter=max_iter, **kw)


@pytest.fixture(scope="session")
def toy_runs():
    return {
        "gdrga": toy_run("gdrga", 0.29),
        "pdrga": toy_run("pdrga", 0.29),
        "ppga": toy_run("ppga", 0.06),
    }


# -- acceptance summary --------------------------------------------------------

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
