"""Acceptance gate: every criterion at its stated tolerance.

Each check prints one `ACCEPTANCE <id>: PASS|FAIL|UNATTAINABLE ...` line
(run with `pytest -s tests/test_acceptance.py` to see them all).  Two
sub-criteria are mathematically unattainable as literally stated and are
encoded as strict expected failures with the analysis in the decisions
ledger: the two-sided window on the first-mode decay rate (the true rate is
the harmonic one, k = 1, not the Wirtinger floor 0.5) and the zero-boundary
supercritical singular run (no such solution exists; the gradient term caps
the inward rise of any solution far below the singular slope).
"""
import math

import numpy as np
import pytest

from expsing import closed_forms as cf
from expsing.annulus2d import angular_variation, fourier_mode_norms, solve_nonradial
from expsing.asymptotics import fit_critical, fit_critical_constant, fit_decay, fit_gamma, holder_exponent
from expsing.params import ProblemParams
from expsing.radial import (
    SolverConfig,
    eikonal_plateau_constant,
    solve_bvp_critical,
    solve_bvp_subcritical,
    solve_emden,
    solve_regular,
    solve_supercritical_singular,
)
from expsing.transforms import Branch, from_branch, to_branch
from expsing.verify import distributional_mass, quadrature_identity_check, _truncation_suite


def report(cid: str, ok: bool, detail: str):
    print(f"ACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{cid}: {detail}"


def report_unattainable(cid: str, detail: str):
    print(f"ACCEPTANCE {cid}: UNATTAINABLE - {detail}")


# --- 1: eikonal oracles -------------------------------------------------------


def test_acceptance_eikonal_oracles():
    r = np.geomspace(1e-8, 10.0, 4001)
    sets = [
        (1.0, 1.0, 1.0, 3.0),
        (1.0, 1.0, 1.0, 2.5),
        (2.0, 0.5, 1.5, 3.0),
        (16.0, 1.0, 2.0, 4.0),
        (0.3, 2.0, 0.7, 5.0),
        (1.0, 3.0, 1.0, 1.5),
    ]
    worst_eik, worst_full = 0.0, 0.0
    for m, a, b, q in sets:
        p = ProblemParams(m=m, a=a, b=b, q=q)
        eik, full = cf.eikonal_singular_residuals(p, r)
        scale = p.a * np.exp(p.b * cf.eikonal_singular(p, r))
        worst_eik = max(worst_eik, float(np.max(np.abs(eik) / scale)))
        worst_full = max(worst_full, float(np.max(np.abs(full) / np.maximum(scale, 1.0))))
        for c in (1.0, 5.0):
            eikc, _ = cf.eikonal_bounded_residuals(p, c, r)
            scale_c = p.a * np.exp(p.b * cf.eikonal_bounded(p, c, r))
            worst_eik = max(worst_eik, float(np.max(np.abs(eikc) / scale_c)))
    report("1-eikonal", worst_eik < 1e-12 and worst_full < 1e-10,
           f"max relative eikonal residual {worst_eik:.2e} (tol 1e-12), "
           f"max full residual {worst_full:.2e} (tol 1e-10)")


# --- 2: exact critical absorption profile -------------------------------------


def test_acceptance_critical_absorption_profile():
    p = ProblemParams(m=1.0, a=1.0, b=2.0, q=1.5)
    rr = np.linspace(1e-6, 1 - 1e-6, 8001)
    res = float(np.max(np.abs(cf.emden_critical_exact_residual(p, rr))))
    prof = solve_emden(p, 1.0, 0.0, SolverConfig(n_points=4096))
    err = float(np.max(np.abs(prof.u() - cf.emden_critical_exact(p, prof.r))))
    report("2-critical-absorption", res < 1e-10 and err < 1e-7,
           f"analytic residual {res:.2e} (tol 1e-10), solver error {err:.2e} (tol 1e-7)")


# --- 3: the disk log-weight identity ------------------------------------------


def test_acceptance_disk_identity():
    val = quadrature_identity_check()
    err = abs(val - 2.0 * math.pi)
    report("3-disk-identity", err < 1e-10, f"|value - 2*pi| = {err:.2e} (tol 1e-10)")


# --- 4: truncated nonlinearity junctions --------------------------------------


def test_acceptance_truncation_junctions():
    suite = _truncation_suite()
    report("4-truncation", suite["pass"],
           f"max junction mismatch {suite['max_junction_mismatch']:.2e} (tol 1e-6)")


# --- 5: subcritical reproduction ----------------------------------------------


def test_acceptance_subcritical_reproduction():
    cfg = SolverConfig(T0=-24.0, n_points=4096)
    details = []
    ok = True
    for gamma in (0.5, 1.0, 1.5):
        p = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=gamma)
        prof = solve_bvp_subcritical(p, 0.0, cfg)
        fit = fit_gamma(prof)
        mass = distributional_mass(prof, p)
        t = prof.t_grid
        span = t[-1] - t[0]
        beta, _ = fit_decay(t, np.abs(prof.w - prof.w[0]),
                            window=(t[0] + span / 2.0, t[0] + 3.0 * span / 4.0))
        g_ok = abs(fit.gamma_hat - gamma) < 1e-3
        m_ok = abs(mass - gamma) < 0.01 * gamma
        b_ok = 0.9 * 0.5 <= beta <= 1.3 * 0.5
        ok = ok and g_ok and m_ok and b_ok
        details.append(
            f"gamma={gamma}: gamma_hat err {abs(fit.gamma_hat - gamma):.1e}, "
            f"mass err {abs(mass - gamma):.1e}, beta {beta:.3f}"
        )
    report("5-subcritical", ok, "; ".join(details))


# --- 6: critical constants -----------------------------------------------------


def test_acceptance_critical_constants():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=2.0)
    crit = solve_bvp_critical(p, 0.0, SolverConfig())
    ell_hat, _ = fit_critical_constant(crit, p)
    err1 = abs(ell_hat - math.log(2.0))
    p2 = ProblemParams(m=1.0, a=1.0, b=2.0, q=1.5, gamma=1.0)
    crit2 = solve_bvp_critical(p2, 0.0, SolverConfig())
    ell2, _ = fit_critical_constant(crit2, p2)
    # cross-check with the two-regressor log-log fit at a deep cutoff
    deep = solve_bvp_critical(p, 0.0, SolverConfig(T0=-24.0, n_points=4096))
    fitc = fit_critical(deep)
    err3 = abs(fitc.ell_hat - math.log(2.0))
    ok = err1 < 5e-2 and abs(ell2) < 5e-2 and err3 < 5e-2
    report("6-critical-constant", ok,
           f"ell_hat err {err1:.3f} (tol 5e-2), ab=2 ell {abs(ell2):.3f} (tol 5e-2), "
           f"regression cross-check err {err3:.3f}")


# --- 7: supercritical dichotomy -------------------------------------------------


def test_acceptance_dichotomy():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=3.0)
    cfg = SolverConfig()
    phi0 = eikonal_plateau_constant(p) - 0.1
    sing = solve_supercritical_singular(p, phi0, cfg)
    fit = fit_gamma(sing)
    r, u, ur = sing.r, sing.u(), sing.u_r()
    half = slice(0, r.size // 2)
    census = float(np.min(np.abs(ur[half]) * np.sqrt(r[half])))
    lower = 2.0 * np.log(1.0 / r) - 2.0 * np.log1p(-sing.t_grid)  # K(b)=2/b for b<=2
    upper = 3.0 * np.log(1.0 / r) + 3.0 * math.log(3.0)
    lo_margin = float(np.min(u - lower))
    up_margin = float(np.min(upper - u))
    apriori_s = float(np.min(cf.pointwise_upper_bound(p, r) - u))

    reg = solve_regular(p, 0.0, cfg)
    exponent, _ = holder_exponent(reg, window=(-7.0, -3.0))
    apriori_r = float(np.min(cf.pointwise_upper_bound(p, reg.r) - reg.u()))

    ok = (
        abs(fit.gamma_hat - 3.0) < 1e-2
        and census >= 0.9 * math.sqrt(0.5)
        and exponent >= 0.45
        and apriori_s >= -1e-8
        and apriori_r >= -1e-8
        and lo_margin >= -1e-8
        and up_margin >= -1e-8
    )
    report(
        "7-dichotomy", ok,
        f"singular (boundary value {phi0:.3f}): gamma_hat err {abs(fit.gamma_hat - 3.0):.1e}, "
        f"census {census:.3f} (>= {0.9 * math.sqrt(0.5):.3f}), sandwich margins "
        f"({lo_margin:.2e}, {up_margin:.2e}); regular: exponent {exponent:.2f} (>= 0.45); "
        f"growth-bound margins ({apriori_s:.2f}, {apriori_r:.2f})",
    )


@pytest.mark.xfail(
    strict=True,
    reason="no supercritical singular solution exists with zero boundary data: "
    "the gradient term caps the inward rise of any solution at u(1) + C(m,q,a) "
    "(Riccati self-limiting), far below the required singular growth; "
    "backward-orbit scans confirm every slope funnels onto the bounded branch "
    "(decisions ledger)",
)
def test_acceptance_dichotomy_zero_boundary_as_stated():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=3.0)
    report_unattainable(
        "7-dichotomy-zero-boundary",
        "the stated phi0 = 0 singular run admits no solution; the solver "
        "correctly refuses rather than fabricating one",
    )
    prof = solve_supercritical_singular(p, 0.0, SolverConfig(n_points=1024, newton_max_iter=40))
    fit = fit_gamma(prof)
    assert abs(fit.gamma_hat - 3.0) < 1e-2


# --- 8: two-dimensional checks ---------------------------------------------------


@pytest.fixture(scope="module")
def field_radial_data():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=1.0)
    cfg = SolverConfig()  # 4096 x 64 per the stated budget
    return p, cfg, solve_nonradial(p, 1.0, 0.0, cfg, n_theta=64)


@pytest.fixture(scope="module")
def field_cosine():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=1.0)
    cfg = SolverConfig()
    theta = 2.0 * math.pi * np.arange(64) / 64
    return p, cfg, solve_nonradial(p, 1.0, 0.3 * np.cos(theta), cfg, n_theta=64)


def test_acceptance_2d_radial_consistency(field_radial_data):
    p, cfg, fld = field_radial_data
    rad = solve_bvp_subcritical(p, 0.0, cfg)
    diff = float(np.max(np.abs(fld.w - rad.w[:, None])))
    report("8a-2d-radial-consistency", diff < 1e-8, f"max deviation {diff:.2e} (tol 1e-8)")


def test_acceptance_2d_mode_decay_attainable(field_cosine):
    _, _, fld = field_cosine
    md = fourier_mode_norms(fld)
    rate = md.rates[0]
    ok = rate is not None and rate >= 0.9 * 0.5 and md.parseval_error < 1e-12
    report("8b-2d-mode-decay", ok,
           f"first-mode rate {rate:.3f} >= 0.45 (Wirtinger floor); true rate is "
           f"the harmonic one (k=1); parseval {md.parseval_error:.1e}")


@pytest.mark.xfail(
    strict=True,
    reason="the first angular mode decays at the harmonic rate k = 1, not at "
    "the Wirtinger floor beta = 0.5: the mode obeys a homogeneous equation "
    "-v'' + v = (decaying coefficients)*v with no external forcing at rate "
    "beta, so the stated two-sided window [0.45, 0.65] cannot contain the "
    "measured rate (decisions ledger)",
)
def test_acceptance_2d_mode_decay_window_as_stated(field_cosine):
    _, _, fld = field_cosine
    md = fourier_mode_norms(fld)
    rate = md.rates[0]
    report_unattainable("8b-2d-mode-window", f"measured first-mode rate {rate:.3f}, stated window [0.45, 0.65]")
    assert 0.45 <= rate <= 0.65


def test_acceptance_2d_supercritical_symmetry():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=3.0)
    cfg = SolverConfig()
    phi0 = eikonal_plateau_constant(p) - 0.1
    fld = solve_nonradial(p, None, phi0, cfg, n_theta=64, seed_perturbation=0.05)
    _, sup = angular_variation(fld)
    report("8c-2d-symmetry", sup < 1e-8,
           f"angular oscillation {sup:.2e} (tol 1e-8) at admissible constant "
           f"boundary data {phi0:.3f}, Newton seeded asymmetrically")


@pytest.mark.xfail(
    strict=True,
    reason="the literal zero-boundary singular run has no solution (same "
    "obstruction as 7-dichotomy-zero-boundary)",
)
def test_acceptance_2d_symmetry_zero_boundary_as_stated():
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=3.0)
    report_unattainable("8c-2d-symmetry-zero-boundary",
                        "no singular solution with zero boundary data")
    fld = solve_nonradial(p, None, 0.0, SolverConfig(n_points=1024, newton_max_iter=40),
                          n_theta=16)
    _, sup = angular_variation(fld)
    assert sup < 1e-8


# --- 9: property suites -----------------------------------------------------------


def test_acceptance_property_suites():
    rng = np.random.default_rng(7)
    t = np.linspace(-18.0, 0.0, 999)
    worst_rt = 0.0
    p = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5)
    for branch in (Branch.noshift(), Branch.shift_gamma(1.2), Branch.two_over_b(),
                   Branch.lambda_critical()):
        for _ in range(8):
            c = rng.normal(size=3)
            u = c[0] + c[1] * t + c[2] * np.sin(t)
            u_t = c[1] + c[2] * np.cos(t)
            w, w_t = to_branch(p, branch, t, u, u_t)
            u2, u2_t = from_branch(p, branch, t, w, w_t)
            scale = max(1.0, float(np.max(np.abs(u))), float(np.max(np.abs(u_t))))
            worst_rt = max(worst_rt, float(np.max(np.abs(u2 - u))) / scale,
                           float(np.max(np.abs(u2_t - u_t))) / scale)

    errs = []
    pe = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5)
    for n in (1024, 2048, 4096):
        prof = solve_emden(pe, 1.0, 0.0, SolverConfig(n_points=n))
        errs.append(float(np.max(np.abs(prof.u() - cf.emden_exact_radial(pe, 1.0, 0.0, prof.r)))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]

    ps = ProblemParams(m=1.0, a=1.0, b=1.0, q=1.5, gamma=1.0)
    run = solve_bvp_subcritical(ps, 0.0, SolverConfig())
    m1 = distributional_mass(run, ps, "cubic")
    m2 = distributional_mass(run, ps, "quartic")

    ok = worst_rt < 1e-14 and min(orders) >= math.log2(3.5) and abs(m1 - m2) < 1e-4
    report("9-properties", ok,
           f"transform round-trip {worst_rt:.2e} (tol 1e-14); refinement orders "
           f"{orders[0]:.2f}/{orders[1]:.2f} (>= {math.log2(3.5):.2f}); "
           f"mass test-function spread {abs(m1 - m2):.2e}")
