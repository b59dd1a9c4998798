import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expsing import closed_forms as cf
from expsing.errors import InvalidRadius, NumericalFault, PreconditionViolation
from expsing.params import ProblemParams

P111_3 = ProblemParams(m=1, a=1, b=1, q=3)
P111_15 = ProblemParams(m=1, a=1, b=1, q=1.5)

PARAM_SETS = [
    ProblemParams(m=1, a=1, b=1, q=3),
    ProblemParams(m=1, a=1, b=1, q=2.5),
    ProblemParams(m=2, a=0.5, b=1.5, q=3),
    ProblemParams(m=16, a=1, b=2, q=4),
    ProblemParams(m=0.3, a=2, b=0.7, q=5),
    ProblemParams(m=1, a=3, b=1, q=1.5),
]


# --- eikonal family ---------------------------------------------------------


def test_singular_profile_values():
    assert math.isclose(cf.eikonal_singular(P111_3, 1.0), 3 * math.log(3), rel_tol=1e-14)
    p = ProblemParams(m=16, a=1, b=2, q=4)
    assert abs(cf.eikonal_singular(p, 4.0)) < 1e-14  # root radius


def test_eikonal_residuals_vanish():
    r = np.geomspace(1e-8, 10.0, 2001)
    for p in PARAM_SETS:
        eik, full = cf.eikonal_singular_residuals(p, r)
        scale = p.a * np.exp(p.b * cf.eikonal_singular(p, r))
        assert np.max(np.abs(eik) / scale) < 1e-12
        assert np.max(np.abs(full) / np.maximum(scale, 1.0)) < 1e-10
        for c in (1.0, 5.0):
            eik_c, full_c = cf.eikonal_bounded_residuals(p, c, r)
            scale_c = p.a * np.exp(p.b * cf.eikonal_bounded(p, c, r))
            assert np.max(np.abs(eik_c) / scale_c) < 1e-12
            assert np.min(full_c) > 0.0  # each member is a strict supersolution


def test_bounded_family_centre_value_and_limit():
    assert cf.eikonal_bounded(P111_3, 5.0, 0.0) == 5.0
    gaps = [abs(cf.eikonal_bounded(P111_3, c, 0.5) - cf.eikonal_singular(P111_3, 0.5))
            for c in (5.0, 10.0, 20.0)]
    assert gaps[0] > gaps[1] > gaps[2]
    # gap is (q/b)*ln(1 + q m^{1/q} e^{-bc/q}/(b a^{1/q} r)) ~ 0.023 at c=20
    assert gaps[2] < 0.05
    # pointwise below the singular profile
    r = np.linspace(0.01, 1.0, 50)
    assert np.all(cf.eikonal_bounded(P111_3, 5.0, r) < cf.eikonal_singular(P111_3, r))


def test_singular_profile_rejects_nonpositive_radius():
    with pytest.raises(InvalidRadius):
        cf.eikonal_singular(P111_3, 0.0)


def test_variant_profile_exact_only_for_m_equal_a():
    r = np.geomspace(0.05, 1.0, 64)
    same = ProblemParams(m=2, a=2, b=1, q=3)
    res_same = cf.eikonal_singular_variant_residual(same, r)
    scale = same.a * np.exp(same.b * cf.eikonal_singular_variant(same, r))
    assert np.max(np.abs(res_same) / scale) < 1e-12
    diff = ProblemParams(m=2, a=1, b=1, q=3)
    res_diff = cf.eikonal_singular_variant_residual(diff, r)
    scale_d = diff.a * np.exp(diff.b * cf.eikonal_singular_variant(diff, r))
    assert np.max(np.abs(res_diff) / scale_d) > 1e-2


# --- critical absorption profile -------------------------------------------


def test_emden_critical_values():
    p = ProblemParams(m=1, a=1, b=2, q=1.5)
    assert math.isclose(cf.emden_critical_exact(p, math.exp(-1.0)), 1 - math.log(2), rel_tol=1e-13)
    assert cf.emden_critical_exact(p, 1.0) == 0.0
    with pytest.raises(PreconditionViolation):
        cf.emden_critical_exact(P111_15, 0.5)  # a*b = 1 != 2


def test_emden_critical_residual_factored_and_termwise():
    p = ProblemParams(m=1, a=1, b=2, q=1.5)
    r = np.linspace(1e-6, 1 - 1e-6, 4001)
    assert np.max(np.abs(cf.emden_critical_exact_residual(p, r))) < 1e-10
    # independent term-by-term evaluation at a moderate radius
    rr = 0.3
    b = p.b
    lnr = math.log(rr)
    v2 = (2 / b) * (1 / rr**2 - 1 / (rr**2 * (1 - lnr)) + 1 / (rr**2 * (1 - lnr) ** 2))
    v1 = (2 / b) * (-1 / rr + 1 / (rr * (1 - lnr)))
    v = cf.emden_critical_exact(p, rr)
    residual = -v2 - v1 / rr + p.a * math.exp(p.b * v)
    assert abs(residual) < 1e-12


def test_shifted_profile_examples():
    v, res = cf.emden_critical_shifted(P111_15, 0.0, np.array([math.exp(-1.0)]))
    assert math.isclose(res[0], -math.e**2 / 4, rel_tol=1e-12)
    k1, _ = cf.critical_shift_bounds(P111_15)
    _, res1 = cf.emden_critical_shifted(P111_15, k1, np.linspace(1e-5, 1, 64))
    assert np.max(np.abs(res1)) < 1e-10  # equality case
    p2 = ProblemParams(m=1, a=1, b=2, q=1.5)
    _, res2 = cf.emden_critical_shifted(p2, 0.0, np.array([0.2, 0.7]))
    assert np.max(np.abs(res2)) == 0.0  # forced by a*b = 2


@given(kappa=st.floats(-2, 2), r=st.floats(1e-5, 1.0))
@settings(max_examples=200, deadline=None)
def test_shifted_profile_residual_sign(kappa, r):
    _, res = cf.emden_critical_shifted(P111_15, kappa, np.array([r]))
    coef = cf.critical_shift_residual_coefficient(P111_15, kappa)
    assert np.sign(res[0]) == np.sign(coef)


def test_shift_bounds():
    assert cf.critical_shift_bounds(P111_15) == (math.log(2.0), 0.0)
    p = ProblemParams(m=1, a=4, b=1, q=1.5)
    k1, k2 = cf.critical_shift_bounds(p)
    assert k1 == 0.0 and math.isclose(k2, -math.log(2.0), rel_tol=1e-14)
    pc = ProblemParams(m=1, a=1, b=2, q=1.5)
    assert cf.critical_shift_bounds(pc) == (0.0, 0.0)


# --- Poisson power profile --------------------------------------------------


def test_power_profile_values():
    assert cf.poisson_power_profile(1.5, 0.0) == 4.0
    assert cf.poisson_power_profile(1.5, 1.0) == 0.0
    assert math.isclose(cf.poisson_power_neg_laplacian(3.0, 0.5), 8.0, rel_tol=1e-14)
    with pytest.raises(PreconditionViolation):
        cf.poisson_power_profile(2.0, 0.5)


@pytest.mark.parametrize("q", [1.2, 1.5, 1.9, 2.5, 3.0, 5.0])
def test_power_profile_solves_poisson(q):
    # finite-difference Laplacian of the value formula against the source
    r = np.linspace(0.2, 0.8, 31)
    h = 1e-4
    f = lambda x: cf.poisson_power_profile(q, x)
    lap = (f(r + h) - 2 * f(r) + f(r - h)) / h**2 + (f(r + h) - f(r - h)) / (2 * h * r)
    assert np.max(np.abs(-lap - r**-q) / r**-q) < 1e-5
    # and the analytic negative Laplacian is the source to round-off
    assert np.max(np.abs(cf.poisson_power_neg_laplacian(q, r) - r**-q) / r**-q) < 1e-13


# --- upper barrier for the absorption problem -------------------------------


def test_barrier_examples():
    v, _ = cf.emden_upper_barrier(P111_15, 1.0, 0.1, np.array([1.0]))
    assert abs(v[0]) < 1e-14
    r = np.linspace(1e-4, 1 - 1e-4, 513)
    v, res = cf.emden_upper_barrier(P111_15, 1.0, 1e-3, r)
    assert np.all(v < -np.log(r))
    assert np.min(res) >= 0.0
    with pytest.raises(PreconditionViolation):
        cf.emden_upper_barrier(P111_15, 2.5, 0.1, r)


def test_barrier_amplitude_bisection():
    a0 = cf.emden_upper_barrier_max_amplitude(P111_15, 1.0, grid_size=1024, bisection_steps=45)
    r = np.linspace(1e-6, 1 - 1e-6, 1024)
    _, res_ok = cf.emden_upper_barrier(P111_15, 1.0, 0.999 * a0, r)
    _, res_bad = cf.emden_upper_barrier(P111_15, 1.0, 2.0 * a0, r)
    assert np.min(res_ok) >= 0.0
    assert np.min(res_bad) < 0.0


# --- growth bound -----------------------------------------------------------


@pytest.mark.parametrize("q", [1.5, 3.0])
def test_ball_supersolution_nonnegative_residual(q):
    p = ProblemParams(m=1, a=1, b=1, q=q)
    rho = np.linspace(0.0, 0.5, 1024, endpoint=False)
    value, residual = cf.ball_log_supersolution(p, 0.5, rho)
    assert np.min(residual) >= 0.0
    lam, mu, lam_star = cf.ball_supersolution_constants(p, 0.5)
    assert math.isclose(value[0], lam * math.log(1.0 / 0.25) + mu, rel_tol=1e-12)
    # centre value in the a-priori form: lam*ln(1/R) + ln(Lambda*/a)/b
    assert math.isclose(
        value[0], lam * math.log(1 / 0.5) + math.log(lam_star / p.a) / p.b, rel_tol=1e-12
    )
    with pytest.raises(InvalidRadius):
        cf.ball_log_supersolution(p, 0.5, np.array([0.6]))


def test_pointwise_bound_slopes():
    for q, slope in ((1.5, 2.0), (3.0, 3.0)):
        p = ProblemParams(m=1, a=1, b=1, q=q)
        b1 = cf.pointwise_upper_bound(p, 0.01)
        b2 = cf.pointwise_upper_bound(p, 0.001)
        assert math.isclose((b2 - b1) / math.log(10.0), slope, rel_tol=1e-12)


# --- truncated gradient power ------------------------------------------------


def test_truncated_power_examples():
    assert cf.truncated_power(1.0, 2.0, 3.0) == 1.0
    for q in (2.5, 3.0, 4.0):
        for s in (1.0, 10.0, 100.0):
            coeff_sum = 0.5 * q * (q - 1) + q * (2 - q) + 0.5 * (q - 1) * (q - 2)
            assert math.isclose(coeff_sum, 1.0, rel_tol=1e-12)
            both = [cf.truncated_power(s * s * (1 + eps), s, q) for eps in (-1e-12, 1e-12)]
            assert abs(both[1] - both[0]) / s**q < 1e-9
    with pytest.raises(PreconditionViolation):
        cf.truncated_power(1.0, 2.0, 1.5)


@given(
    x1=st.floats(0.0, 50.0), x2=st.floats(0.0, 50.0),
    q=st.floats(2.1, 4.5), s=st.floats(0.5, 5.0),
)
@settings(max_examples=200, deadline=None)
def test_truncated_power_monotone(x1, x2, q, s):
    lo, hi = sorted((x1, x2))
    assert cf.truncated_power(lo, s, q) <= cf.truncated_power(hi, s, q) + 1e-12


def test_truncated_power_convex_in_gradient():
    # phi(|p|^2) convex in the gradient vector p: 1-d second differences >= 0
    q, s = 3.0, 2.0
    for pbase in (0.0, 1.0, 1.9, 2.0, 2.1, 5.0):
        h = 1e-3
        vals = [cf.truncated_power((pbase + k * h) ** 2, s, q) for k in (-1, 0, 1)]
        assert vals[0] - 2 * vals[1] + vals[2] >= -1e-9


# --- operator residual and powers -------------------------------------------


def test_residual_strong_examples():
    p = P111_15
    res = cf.residual_strong(p, np.zeros(5), np.zeros(5), np.zeros(5))
    assert np.allclose(res, p.a)
    with pytest.raises(NumericalFault):
        cf.residual_strong(p, np.array([np.nan]), np.zeros(1), np.zeros(1))
    r = np.geomspace(0.01, 1.0, 33)
    p3 = P111_3
    w = cf.eikonal_singular(p3, r)
    wr = cf.eikonal_singular_radial_derivative(p3, r)
    res = cf.residual_strong(p3, w, np.abs(wr), np.zeros_like(r))
    assert np.max(np.abs(res) / (p3.a * np.exp(p3.b * w))) < 1e-12


def test_abs_power_zero_convention():
    assert cf.abs_power(0.0, 1.5) == 0.0
    assert cf.abs_power_dsigned(0.0, 1.5) == 0.0
    assert math.isclose(cf.abs_power(-2.0, 3.0), 8.0, rel_tol=1e-14)
    assert math.isclose(cf.abs_power_dsigned(-2.0, 3.0), -12.0, rel_tol=1e-14)


# --- exact absorption family -------------------------------------------------


def test_emden_exact_family_is_a_solution():
    p = P111_15
    t = np.linspace(-10, -0.01, 20001)
    v = cf.emden_exact_radial(p, 1.0, 0.0, np.exp(t))
    h = t[1] - t[0]
    vtt = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    res = -vtt + p.a * np.exp(p.b * v[1:-1] + 2 * t[1:-1])
    assert np.max(np.abs(res)) < 1e-6  # O(h^2) finite-difference floor
    assert abs(cf.emden_exact_radial(p, 1.0, 0.0, 1.0)) < 1e-14
    # additive constant of the gamma=1 member is strictly negative
    assert cf.emden_exact_additive_constant(p, 1.0, 0.0) < 0.0
    # log-derivative helper consistency
    dt = cf.emden_exact_radial_log_derivative(p, 1.0, 0.0, np.exp(t[1:-1]))
    fd = (v[2:] - v[:-2]) / (2 * h)
    assert np.max(np.abs(dt - fd)) < 1e-6
