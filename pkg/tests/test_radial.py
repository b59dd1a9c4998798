import math

import numpy as np
import pytest

from expsing import closed_forms as cf
from expsing.errors import (
    BranchCollapse,
    FiniteTimeBlowup,
    InvalidInput,
    InvalidParameter,
    NoConvergence,
    PreconditionViolation,
)
from expsing.params import ProblemParams
from expsing.radial import (
    RadialProfile,
    SolverConfig,
    integrate_ivp,
    lyapunov_balance,
    shoot_subcritical,
    solve_bvp_critical,
    solve_bvp_subcritical,
    solve_emden,
    solve_regular,
    solve_supercritical_singular,
)
from expsing.transforms import Branch

from conftest import fitted_slope


def test_solver_config_invariants():
    with pytest.raises(InvalidParameter):
        SolverConfig(T0=-0.5)
    with pytest.raises(InvalidParameter):
        SolverConfig(n_points=32)
    with pytest.raises(InvalidParameter):
        SolverConfig(newton_tol=0.0)
    cfg = SolverConfig(mesh_grading=2.0, n_points=256)
    t = cfg.grid()
    assert t[0] == cfg.T0 and t[-1] == 0.0
    assert np.diff(t)[-1] < np.diff(t)[0]  # refined toward t = 0


def test_profile_validation():
    t = np.linspace(-2, 0, 16)
    with pytest.raises(InvalidInput):
        RadialProfile(t[::-1], np.zeros(16), np.zeros(16), Branch.noshift(),
                      ProblemParams(m=1, a=1, b=1, q=1.5))
    with pytest.raises(InvalidInput):
        RadialProfile(t, np.full(16, np.inf), np.zeros(16), Branch.noshift(),
                      ProblemParams(m=1, a=1, b=1, q=1.5))


# --- initial value integration ----------------------------------------------


def test_ivp_affine_limit():
    # with the absorption nearly off and the gradient term off, solutions are
    # affine in t (harmonic radial functions are c1 + c2*ln r)
    p = ProblemParams(m=1.0, a=1e-10, b=1.0, q=1.5)
    prof = integrate_ivp(p, Branch.noshift(), -6.0, 1.0, 0.5, 0.0,
                         SolverConfig(n_points=128), m_off=True)
    affine = 1.0 + 0.5 * (prof.t_grid + 6.0)
    assert np.max(np.abs(prof.w - affine)) < 1e-8


def test_ivp_blowup_detection():
    # far above the eikonal plateau the absorption term explodes forward;
    # the crawl toward the vertical asymptote is cut by the evaluation budget
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    with pytest.raises(FiniteTimeBlowup) as err:
        integrate_ivp(p, Branch.noshift(), -6.0, 25.0, 10.0, 0.0,
                      SolverConfig(n_points=128, ivp_max_nfev=120_000))
    assert err.value.t_last <= 0.0


def test_ivp_reproduces_exact_critical_shift():
    # the shifted critical profile with the equality-case shift is an exact
    # absorption solution; in the lambda variable it is the constant k1
    p = ProblemParams(m=1, a=1, b=1, q=1.5, gamma=2.0)
    k1, _ = cf.critical_shift_bounds(p)
    prof = integrate_ivp(p, Branch.lambda_critical(), -12.0, k1, 0.0, 0.0,
                         SolverConfig(n_points=512), m_off=True)
    assert np.max(np.abs(prof.w - k1)) < 1e-8


def test_ivp_tracks_exact_absorption_family():
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    gamma, phi0 = 1.0, 0.0
    t0 = -10.0
    r0 = math.exp(t0)
    v0 = float(cf.emden_exact_radial(p, gamma, phi0, r0))
    v0_t = float(cf.emden_exact_radial_log_derivative(p, gamma, phi0, r0))
    w0 = v0 + gamma * t0
    w0_t = v0_t + gamma
    prof = integrate_ivp(p, Branch.shift_gamma(gamma), t0, w0, w0_t, 0.0,
                         SolverConfig(n_points=1024), m_off=True)
    exact = cf.emden_exact_radial(p, gamma, phi0, prof.r)
    assert np.max(np.abs(prof.u() - exact)) < 1e-8


def test_ivp_backward_tracks_eikonal():
    # the singular eikonal profile is exact; integrating inward (the
    # contracting direction) tracks it to integrator accuracy.  the stiff
    # coefficient e^{-t} caps explicit steps at ~1/(P*b*e^{-t}), so the
    # horizon stays at -6 to keep the run short
    p = ProblemParams(m=1, a=1, b=1, q=3)
    t_start, t_end = -1.0, -5.0
    w0 = float(cf.eikonal_singular(p, math.exp(t_start)))
    prof = integrate_ivp(p, Branch.noshift(), t_start, w0, -p.q_over_b, t_end,
                         SolverConfig(n_points=1024))
    exact = cf.eikonal_singular(p, prof.r)
    assert np.max(np.abs(prof.w - exact)) < 1e-6


@pytest.mark.xfail(
    strict=True,
    reason="outward tracking of the singular eikonal profile is impossible: "
    "deviations amplify like exp(P*b*(e^{-t0} - e^{-t})) along the orbit "
    "(about e^1400 from t0=-4 and e^594000 from the t0=-10 of the original "
    "statement), so the orbit departs almost immediately; see the ledger",
)
def test_ivp_forward_eikonal_tracking_as_stated():
    p = ProblemParams(m=1, a=1, b=1, q=3)
    t_start = -4.0  # cheaper than -10, and strictly easier; still impossible
    w0 = float(cf.eikonal_singular(p, math.exp(t_start)))
    prof = integrate_ivp(p, Branch.noshift(), t_start, w0, -p.q_over_b, -1.0,
                         SolverConfig(n_points=2048, ivp_max_nfev=150_000))
    exact = cf.eikonal_singular(p, prof.r)
    assert np.max(np.abs(prof.w - exact)) < 1e-6


# --- subcritical singular solve ----------------------------------------------


def test_subcritical_requires_strength():
    with pytest.raises(PreconditionViolation):
        solve_bvp_subcritical(ProblemParams(m=1, a=1, b=1, q=1.5), 0.0)
    with pytest.raises(PreconditionViolation):
        solve_bvp_subcritical(ProblemParams(m=1, a=1, b=1, q=3.0, gamma=1.0), 0.0)


def test_subcritical_slope_and_monotonicity(sub_run, sub_params):
    slope, _ = fitted_slope(sub_run, (-16.0, -10.0))
    assert abs(slope - 1.0) < 5e-3  # the e^{beta*t} correction biases ~4e-3 here
    assert np.all(sub_run.u_r() < 0.0)  # decreasing in r
    assert sub_run.info["newton_residual"] <= SolverConfig().newton_tol
    assert sub_run.check_derivative_consistency() < 10.0


def test_subcritical_matches_shooting(sub_run, sub_params, cfg_default):
    shot = shoot_subcritical(sub_params, 0.0, cfg_default)
    mask = sub_run.t_grid >= cfg_default.T0 + 2.0
    interp = np.interp(sub_run.t_grid[mask], shot.t_grid, shot.u())
    assert np.max(np.abs(sub_run.u()[mask] - interp)) < 1e-6
    s_bvp, _ = fitted_slope(sub_run, (-16.0, -10.0))
    s_ivp, _ = fitted_slope(shot, (-16.0, -10.0))
    assert abs(s_bvp - s_ivp) < 1e-6


def test_subcritical_gradient_census_stable(sub_params):
    sups = []
    for n in (1024, 2048):
        prof = solve_bvp_subcritical(sub_params, 0.0, SolverConfig(n_points=n))
        half = slice(0, prof.r.size // 2)
        sups.append(float(np.max(np.abs(prof.u_r()[half]) * prof.r[half])))
    assert all(np.isfinite(sups))
    assert abs(sups[0] - sups[1]) < 1e-3 * max(sups)


# --- critical branch ----------------------------------------------------------


def test_critical_constant(crit_run, crit_params):
    from expsing.asymptotics import fit_critical_constant

    ell_hat, _ = fit_critical_constant(crit_run, crit_params)
    assert abs(ell_hat - math.log(2.0)) < 5e-2
    p2 = ProblemParams(m=1, a=1, b=2, q=1.5, gamma=1.0)
    crit2 = solve_bvp_critical(p2, 0.0, SolverConfig())
    ell2, _ = fit_critical_constant(crit2, p2)
    assert abs(ell2) < 5e-2


def test_critical_sandwich(crit_run, crit_params):
    p = crit_params
    r = crit_run.r
    u = crit_run.u()
    k1, k2 = cf.critical_shift_bounds(p)
    base, _ = cf.emden_critical_shifted(p, 0.0, r)
    c_sup = float(np.max(np.abs(crit_run.u_r()) * r))
    eta = cf.poisson_power_profile(p.q, r)
    assert np.min(u - (base + k2)) >= -1e-8
    assert np.min(base + k1 + p.m * c_sup**p.q * eta - u) >= -1e-8


def test_critical_rejects_mismatched_gamma():
    with pytest.raises(PreconditionViolation):
        solve_bvp_critical(ProblemParams(m=1, a=1, b=1, q=1.5, gamma=1.0), 0.0)


# --- pure absorption ----------------------------------------------------------


def test_emden_critical_matches_exact():
    p = ProblemParams(m=1, a=1, b=2, q=1.5)
    prof = solve_emden(p, 1.0, 0.0, SolverConfig())
    exact = cf.emden_critical_exact(p, prof.r)
    assert np.max(np.abs(prof.u() - exact)) < 1e-7


def test_emden_gamma_family_oracle_and_order():
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    errs = []
    for n in (1024, 2048, 4096):
        prof = solve_emden(p, 1.0, 0.0, SolverConfig(n_points=n))
        exact = cf.emden_exact_radial(p, 1.0, 0.0, prof.r)
        errs.append(float(np.max(np.abs(prof.u() - exact))))
    assert errs[2] < 3e-6
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_emden_zero_strength_nonpositive():
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    prof = solve_emden(p, 0.0, 0.0, SolverConfig(n_points=1024))
    u = prof.u()
    assert np.max(u) <= 1e-12
    assert u[0] <= np.min(u) + 1e-10  # minimum (to round-off) at the centre


def test_emden_additive_constant_negative():
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    prof = solve_emden(p, 1.0, 0.0, SolverConfig())
    # u - gamma*ln(1/r) tends to a strictly negative constant
    deep = prof.u()[:100] + prof.t_grid[:100]
    expected = cf.emden_exact_additive_constant(p, 1.0, 0.0)
    assert np.max(np.abs(deep - expected)) < 1e-4
    assert expected < 0.0


def test_emden_rejects_excess_strength():
    with pytest.raises(PreconditionViolation):
        solve_emden(ProblemParams(m=1, a=1, b=1, q=1.5), 2.5, 0.0, SolverConfig(n_points=1024))


# --- supercritical branches ---------------------------------------------------


def test_singular_slope_and_balance(sing_run, super_params):
    slope, _ = fitted_slope(sing_run, (-16.0, -10.0))
    assert abs(slope - 3.0) < 1e-2
    W, _, one_signed = lyapunov_balance(sing_run)
    assert one_signed  # (r u')' = r W keeps one sign near the origin
    # gradient lower bound constant
    r, ur = sing_run.r, sing_run.u_r()
    half = slice(0, r.size // 2)
    assert np.min(np.abs(ur[half]) * np.sqrt(r[half])) >= 0.9 * math.sqrt(0.5)
    # two-sided growth control: u >= (2/b)(ln(1/r) - ln(1-ln r)) - K with modest K
    lower = 2.0 * np.log(1.0 / r) - 2.0 * np.log1p(-sing_run.t_grid)
    assert np.max(lower - sing_run.u()) < 1.0


def test_singular_default_is_eikonal_profile(super_params, cfg_small):
    prof = solve_supercritical_singular(super_params, None, cfg_small)
    exact = cf.eikonal_singular(super_params, prof.r)
    assert np.max(np.abs(prof.u() - exact)) < 1e-9


def test_singular_unreachable_boundary_value(super_params):
    # boundary values far below the plateau admit no singular solution: the
    # gradient term caps the inward rise (Riccati self-limiting)
    with pytest.raises((NoConvergence, BranchCollapse)):
        solve_supercritical_singular(super_params, 0.0,
                                     SolverConfig(n_points=1024, newton_max_iter=40))


def test_regular_branch(reg_run, super_params):
    u = reg_run.u()
    assert np.max(np.abs(u)) < 10.0
    assert abs(reg_run.u_t()[0]) < 1e-6  # flat at the centre
    W, _, _ = lyapunov_balance(reg_run)
    # large-a regular solutions are negative near the centre
    neg = solve_regular(ProblemParams(m=1, a=50, b=1, q=3), 0.0, SolverConfig(n_points=1024))
    assert neg.u()[0] < 0.0


def test_regular_is_gamma_to_zero_limit():
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    cfg = SolverConfig(n_points=1024)
    reg = solve_regular(p, 0.0, cfg)
    gaps = []
    for g in (0.02, 0.01, 0.005):
        prof = solve_bvp_subcritical(p.with_gamma(g), 0.0, cfg)
        gaps.append(float(np.max(np.abs(prof.u() - reg.u()))))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.005 * (-cfg.T0) * 1.5


def test_lyapunov_on_closed_forms(super_params):
    # on the singular eikonal profile the balance vanishes identically
    t = np.linspace(-6.0, 0.0, 257)
    w = cf.eikonal_singular(super_params, np.exp(t))
    prof = RadialProfile(t, w, np.full_like(t, -3.0), Branch.noshift(), super_params)
    W, changes, _ = lyapunov_balance(prof)
    assert np.max(np.abs(W) / (super_params.a * np.exp(super_params.b * w))) < 1e-12
    # pure absorption keeps W = a e^{bu} > 0
    p = ProblemParams(m=1, a=1, b=1, q=1.5)
    em = solve_emden(p, 1.0, 0.0, SolverConfig(n_points=1024))
    W2, _, _ = lyapunov_balance(em)
    assert np.min(W2) > 0.0


def test_apriori_bound_holds_for_all_profiles(sub_run, crit_run, sing_run, reg_run):
    for prof in (sub_run, crit_run, sing_run, reg_run):
        bound = cf.pointwise_upper_bound(prof.params, prof.r)
        assert np.min(bound - prof.u()) >= -1e-8


def test_singular_sandwich_at_b_above_two():
    # the log-log lower bound uses K(b) = 1 for b >= 2 (and 2/b below)
    p = ProblemParams(m=1, a=1, b=2, q=3)
    prof = solve_supercritical_singular(p, None, SolverConfig(n_points=1024))
    r, u = prof.r, prof.u()
    lower = (2.0 / p.b) * np.log(1.0 / r) - 1.0 * np.log1p(-prof.t_grid)
    x = math.log(p.b / (p.q * p.m ** (1.0 / p.q)))
    upper = p.q_over_b * np.log(1.0 / r) + p.q_over_b * (max(x, 0.0) - x)
    assert np.min(u - lower) >= -1e-8
    assert np.min(upper - u) >= -1e-8


def test_subcritical_generic_parameters():
    # q = 1.8 decays only like e^{0.2 t}, so the cutoff must scale with
    # 1/beta for the fit window to reach the asymptotic regime
    from expsing.asymptotics import fit_gamma
    from expsing.verify import distributional_mass

    p = ProblemParams(m=2.0, a=0.5, b=2.0, q=1.8, gamma=0.7)
    prof = solve_bvp_subcritical(p, 0.3, SolverConfig(T0=-60.0, n_points=8192))
    fit = fit_gamma(prof)
    assert abs(fit.gamma_hat - 0.7) < 1e-2
    assert abs(distributional_mass(prof, p) - 0.7) < 0.02
