import numpy as np
import pytest

from expsing.params import ProblemParams
from expsing.radial import (
    SolverConfig,
    eikonal_plateau_constant,
    solve_bvp_critical,
    solve_bvp_subcritical,
    solve_regular,
    solve_supercritical_singular,
)


@pytest.fixture(scope="session")
def cfg_default():
    return SolverConfig()


@pytest.fixture(scope="session")
def cfg_small():
    return SolverConfig(n_points=1024)


@pytest.fixture(scope="session")
def sub_params():
    return ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=1.0)


@pytest.fixture(scope="session")
def sub_run(sub_params, cfg_default):
    """Reference subcritical singular run (q=1.5, gamma=1, zero boundary)."""
    return solve_bvp_subcritical(sub_params, 0.0, cfg_default)


@pytest.fixture(scope="session")
def crit_params():
    return ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=2.0)


@pytest.fixture(scope="session")
def crit_run(crit_params, cfg_default):
    return solve_bvp_critical(crit_params, 0.0, cfg_default)


@pytest.fixture(scope="session")
def super_params():
    return ProblemParams(m=1.0, a=1.0, b=1.0, q=3.0)


@pytest.fixture(scope="session")
def sing_run(super_params, cfg_default):
    """Supercritical singular branch at an admissible boundary value."""
    phi0 = eikonal_plateau_constant(super_params) - 0.1
    return solve_supercritical_singular(super_params, phi0, cfg_default)


@pytest.fixture(scope="session")
def reg_run(super_params, cfg_default):
    return solve_regular(super_params, 0.0, cfg_default)


def fitted_slope(profile, window):
    t = profile.t_grid
    u = profile.u()
    sel = (t >= window[0]) & (t <= window[1])
    A = np.vstack([-t[sel], np.ones(int(sel.sum()))]).T
    coef, *_ = np.linalg.lstsq(A, u[sel], rcond=None)
    return float(coef[0]), float(coef[1])
