"""Radial solvers on the log half-line t = ln r in [T0, 0].

Two independent solution paths are provided and cross-checked in the test
suite: adaptive initial-value integration (shooting) and damped Newton
collocation on a banded finite-difference system.  All branches of the
classification are covered:

* prescribed-strength singular solutions for 1 < q < 2 (shift_gamma branch),
* the maximal singularity gamma = 2/b (lambda_critical branch, where the
  unknown tends to the finite constant (1/b)*ln(2/(a*b))),
* the supercritical singular branch with forced slope q/b (q_over_b branch,
  seeded from the explicit eikonal profile and continued in the gradient
  truncation threshold),
* bounded (regular) solutions,
* the pure-absorption problem m = 0 used as the lower comparison barrier.

The inner boundary at T0 replaces the t -> -inf asymptotics by a
frozen-coefficient Robin condition obtained by integrating the equation
with coefficients frozen at T0; its consistency error is O(e^(2*beta*T0))
and is negligible at the default T0 = -18.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from . import closed_forms as cf
from .errors import (
    FiniteTimeBlowup,
    InvalidInput,
    InvalidParameter,
    BranchCollapse,
    NoConvergence,
    PreconditionViolation,
    StiffnessFault,
)
from .params import ProblemParams
from .transforms import Branch, from_branch, radial_derivative, validate_branch

_BLOWUP_BOUND = 1e8


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation and Newton-iteration controls.

    ``newton_tol`` applies to the max norm of the assembled nonlinear system,
    whose interior rows are the branch ODE multiplied by the local squared
    grid spacing (the standard finite-difference scaling; the raw second
    difference of a double-precision profile carries round-off of order
    eps/h^2, so the unscaled residual cannot be driven to tight tolerances).
    ``mesh_grading`` > 1 refines geometrically toward t = 0 where the
    boundary layer from the outer Dirichlet data lives.
    """

    T0: float = -18.0
    n_points: int = 4096
    newton_tol: float = 1e-11
    newton_max_iter: int = 60
    damping: float = 0.5
    continuation_steps: int = 8
    mesh_grading: float = 1.0
    ivp_rtol: float = 1e-10
    ivp_atol: float = 1e-12
    ivp_max_nfev: int = 2_000_000

    def __post_init__(self):
        if not self.T0 < -1.0:
            raise InvalidParameter(f"T0 must be < -1, got {self.T0}")
        if self.n_points < 64:
            raise InvalidParameter(f"n_points must be >= 64, got {self.n_points}")
        for name in ("newton_tol", "damping", "ivp_rtol", "ivp_atol"):
            if getattr(self, name) <= 0.0:
                raise InvalidParameter(f"{name} must be positive")
        if self.newton_max_iter < 1 or self.continuation_steps < 1:
            raise InvalidParameter("iteration counts must be >= 1")
        if self.ivp_max_nfev < 1000:
            raise InvalidParameter("ivp_max_nfev must be >= 1000")
        if self.mesh_grading < 1.0:
            raise InvalidParameter("mesh_grading must be >= 1")

    def grid(self, t_start: float | None = None, t_end: float = 0.0) -> np.ndarray:
        t0 = self.T0 if t_start is None else t_start
        s = np.linspace(0.0, 1.0, self.n_points)
        if self.mesh_grading == 1.0:
            return t0 + (t_end - t0) * s
        return t_end + (t0 - t_end) * (1.0 - s) ** self.mesh_grading


@dataclass(frozen=True)
class RadialProfile:
    """A sampled radial solution in the branch variable w(t)."""

    t_grid: np.ndarray
    w: np.ndarray
    w_t: np.ndarray
    branch: Branch
    params: ProblemParams
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        t, w, w_t = (np.asarray(a, dtype=float) for a in (self.t_grid, self.w, self.w_t))
        if not (t.shape == w.shape == w_t.shape and t.ndim == 1):
            raise InvalidInput("t_grid, w, w_t must be 1-d arrays of equal length")
        if not np.all(np.diff(t) > 0.0):
            raise InvalidInput("t_grid must be strictly increasing")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(w_t))):
            raise InvalidInput("profile values must be finite")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_t", w_t)

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.t_grid)

    def u(self) -> np.ndarray:
        return from_branch(self.params, self.branch, self.t_grid, self.w)

    def u_t(self) -> np.ndarray:
        _, u_t = from_branch(self.params, self.branch, self.t_grid, self.w, self.w_t)
        return u_t

    def u_r(self) -> np.ndarray:
        return radial_derivative(self.t_grid, self.u_t())

    def check_derivative_consistency(self) -> float:
        """Worst mismatch of stored w_t against centered differences, in units
        of the local O(h^2) truncation-error budget."""
        t, w = self.t_grid, self.w
        fd = (w[2:] - w[:-2]) / (t[2:] - t[:-2])
        h2 = ((t[2:] - t[:-2]) / 2.0) ** 2
        # third-derivative scale from a second difference of w_t
        wtt = np.gradient(self.w_t, t)
        w3 = np.abs(np.gradient(wtt, t)) + 1.0
        budget = h2 * w3[1:-1]
        return float(np.max(np.abs(fd - self.w_t[1:-1]) / budget))


# ---------------------------------------------------------------------------
# branch ODEs:  w_tt = f(t, w, w_t)


class _BranchOde:
    """Right-hand side w_tt = f(t, w, D) of a branch ODE with its partials.

    ``trunc`` replaces the |.|^q gradient power by the C^2 truncation at
    threshold s (supercritical globalisation); ``m_off`` drops the gradient
    term entirely (pure absorption).
    """

    def __init__(self, params: ProblemParams, branch: Branch, m_off: bool = False,
                 trunc: float | None = None):
        validate_branch(params, branch)
        self.params = params
        self.branch = branch
        self.m_off = m_off
        self.trunc = trunc
        self.gamma = branch.shift(params)
        self.critical = branch.kind == "lambda_critical"

    def _power(self, x):
        p = self.params
        if self.trunc is None:
            return cf.abs_power(x, p.q)
        return cf.truncated_power(x * x, self.trunc, p.q)

    def _power_deriv(self, x):
        p = self.params
        if self.trunc is None:
            return cf.abs_power_dsigned(x, p.q)
        return 2.0 * x * cf.truncated_power_prime(x * x, self.trunc, p.q)

    def absorption(self, t, w):
        """a * (branch exponential coefficient) * e^(b*w).

        Overflow to inf is deliberate: wild line-search trials produce
        non-finite residuals and are rejected by the step control.
        """
        p = self.params
        with np.errstate(over="ignore"):
            if self.critical:
                return p.a * np.exp(p.b * w) / (1.0 - t) ** 2
            return p.a * np.exp((2.0 - p.b * self.gamma) * t + p.b * w)

    def gradient_term(self, t, D):
        """m * e^((2-q)t) * |effective gradient|^q (0 when m is switched off)."""
        p = self.params
        if self.m_off:
            return np.zeros_like(np.asarray(t, dtype=float))
        g = self._grad_arg(t, D)
        return p.m * np.exp((2.0 - p.q) * t) * self._power(g)

    def _grad_arg(self, t, D):
        if self.critical:
            tb = self.params.two_over_b
            return D + tb / (1.0 - t) - tb
        return D - self.gamma

    def f(self, t, w, D):
        base = self.absorption(t, w) - self.gradient_term(t, D)
        if self.critical:
            base = base - (2.0 / self.params.b) / (1.0 - t) ** 2
        return base

    def f_w(self, t, w):
        return self.params.b * self.absorption(t, w)

    def f_D(self, t, D):
        p = self.params
        if self.m_off:
            return np.zeros_like(np.asarray(t, dtype=float))
        g = self._grad_arg(t, D)
        return -p.m * np.exp((2.0 - p.q) * t) * self._power_deriv(g)

    def row_scale(self, t):
        """Per-row scale taming the exponentially large supercritical coefficients."""
        p = self.params
        if p.q < 2.0 or self.critical:
            return np.ones_like(np.asarray(t, dtype=float))
        return 1.0 / (
            1.0
            + p.a * np.exp((2.0 - p.b * self.gamma) * t)
            + p.m * np.exp((2.0 - p.q) * t)
        )

    # frozen-coefficient Robin closure at the inner cutoff -------------------

    def robin_residual_and_derivative(self, t0, w0, Dt0):
        """(residual, d residual/d w0, d residual/d Dt0) of the inner closure.

        For the shift branches the closure integrates the frozen-coefficient
        equation from -inf:  w_t(T0) = absorption/(2-b*gamma) - m-term/(2-q).
        For the critical branch it selects the decaying perturbation mode
        (1-t)^(-1) about the limit constant.  For the supercritical singular
        branch the same identity is used in the form scaled by the huge
        coefficient e^((2-q)*T0), which pins the eikonal balance at T0.
        """
        p = self.params
        if self.critical:
            ell = p.critical_additive_constant
            res = Dt0 - (w0 - ell) / (1.0 - t0)
            return res, -1.0 / (1.0 - t0), 1.0
        g = self.gamma
        two_m_bg = 2.0 - p.b * g
        two_m_q = 2.0 - p.q
        if self.branch.kind == "q_over_b":
            # both exponents coincide; divide by the huge common factor
            # e^((2-q)*T0) so the row stays O(1) and pins the eikonal balance
            scale = math.exp(-two_m_q * t0)
            grad_c = 0.0 if self.m_off else p.m * abs(g) ** p.q
            res = two_m_q * scale * Dt0 - p.a * math.exp(p.b * w0) + grad_c
            return res, -p.b * p.a * math.exp(p.b * w0), two_m_q * scale
        if two_m_bg <= 0.0:
            raise InvalidInput(
                "inner closure undefined for shift 2/b; use the lambda_critical branch"
            )
        absorb = p.a * math.exp(two_m_bg * t0 + p.b * w0)
        grad = 0.0 if self.m_off else p.m * math.exp(two_m_q * t0) * abs(g) ** p.q
        res = Dt0 - absorb / two_m_bg + grad / two_m_q
        return res, -p.b * absorb / two_m_bg, 1.0


# ---------------------------------------------------------------------------
# initial value integration (adaptive embedded Runge-Kutta)


def integrate_ivp(
    params: ProblemParams,
    branch: Branch,
    t_start: float,
    w0: float,
    w0_t: float,
    t_end: float,
    config: SolverConfig | None = None,
    m_off: bool = False,
) -> RadialProfile:
    """Integrate the branch ODE from (w0, w0_t) at t_start up to t_end.

    Uses an adaptive embedded Runge-Kutta pair with per-step local error
    control at the config tolerances and returns a dense profile on a uniform
    grid.  Raises FiniteTimeBlowup (with the last valid t) if the state
    leaves |w| < 1e8 before t_end, StiffnessFault on step underflow.
    Integration may run in either direction (t_start > t_end integrates
    inward, the contracting direction along supercritical profiles).
    """
    config = config or SolverConfig()
    if t_start == t_end or max(t_start, t_end) > 0.0:
        raise InvalidInput(f"need distinct t_start, t_end <= 0, got [{t_start}, {t_end}]")
    ode = _BranchOde(params, branch, m_off=m_off)
    state = {"nfev": 0, "t": t_start, "y": (w0, w0_t)}

    class _Budget(Exception):
        pass

    def rhs(t, y):
        state["nfev"] += 1
        if state["nfev"] > config.ivp_max_nfev:
            raise _Budget
        state["t"], state["y"] = t, (y[0], y[1])
        return [y[1], ode.f(t, y[0], y[1])]

    # the exponential absorption overflows doubles near b*w ~ 700; blow-ups
    # that crawl below that are caught by the evaluation budget instead,
    # classified from the size of the last state
    bound = min(_BLOWUP_BOUND, 690.0 / params.b)

    def blowup(t, y):
        return abs(y[0]) - bound

    def gradient_blowup(t, y):
        return abs(y[1]) - 1e8

    blowup.terminal = True
    gradient_blowup.terminal = True

    try:
        sol = solve_ivp(
            rhs,
            (t_start, t_end),
            [w0, w0_t],
            method="RK45",
            dense_output=True,
            rtol=config.ivp_rtol,
            atol=config.ivp_atol,
            events=[blowup, gradient_blowup],
        )
    except _Budget:
        t_last = float(state["t"])
        w_last, wt_last = state["y"]
        if abs(wt_last) > 5.0 * (abs(w0_t) + params.q_over_b + 1.0) or (
            abs(w_last) > abs(w0) + 100.0 / params.b
        ):
            raise FiniteTimeBlowup(
                f"orbit escaping (w = {w_last:.3g}, w_t = {wt_last:.3g}) when the "
                f"evaluation budget ran out at t = {t_last:.6f}",
                t_last=t_last,
                state_last=(w_last, wt_last),
            ) from None
        raise StiffnessFault(
            f"evaluation budget exhausted at t = {t_last:.6f} without progress",
            t_last=t_last,
        ) from None
    if sol.status == 1:
        raise FiniteTimeBlowup(
            f"solution escaped (|w| > {bound:g} or |w_t| > 1e8) at t = {sol.t[-1]:.6f}",
            t_last=float(sol.t[-1]),
            state_last=(float(sol.y[0, -1]), float(sol.y[1, -1])),
        )
    if sol.status != 0:
        raise StiffnessFault(f"integrator failed: {sol.message}", t_last=float(sol.t[-1]))
    t = np.linspace(min(t_start, t_end), max(t_start, t_end), config.n_points)
    y = sol.sol(t)
    return RadialProfile(t, y[0], y[1], branch, params, info={"method": "ivp", "nfev": sol.nfev})


# ---------------------------------------------------------------------------
# Newton collocation


def _first_derivative(t, w):
    """Accurate first derivative on the grid: 4th order inside uniform grids,
    np.gradient otherwise."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    h = np.diff(t)
    if t.size >= 7 and np.allclose(h, h[0], rtol=1e-12, atol=0.0):
        d = np.gradient(w, t, edge_order=2)
        hh = h[0]
        d[2:-2] = (w[:-4] - 8.0 * w[1:-3] + 8.0 * w[3:-1] - w[4:]) / (12.0 * hh)
        return d
    return np.gradient(w, t, edge_order=2)


def _one_sided_first(t):
    """Coefficients (c0, c1, c2) of w_t(t0) from the first three nodes."""
    h1 = t[1] - t[0]
    h2 = t[2] - t[1]
    c0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2))
    c1 = (h1 + h2) / (h1 * h2)
    c2 = -h1 / (h2 * (h1 + h2))
    return c0, c1, c2


class _Collocation:
    """Banded nonlinear system for one branch ODE on a fixed grid.

    For q > 2 the gradient term dominates the second derivative by the
    exponentially large factor e^((2-q)t); there the system degenerates into
    a first-order relation between w and w_t whose centered discretisation
    decouples odd and even nodes (near-singular Jacobians, sawtooth Newton
    steps).  The first-derivative stencil is therefore blended toward the
    backward difference with weight rho/(1+rho), rho being the ratio of the
    gradient-term row entry to the stencil entry; the slow flow attracts
    forward in t, so backward differencing is the stable direction.  The
    blend is O(h) only where the equation is effectively first order and
    vanishes identically for q < 2.
    """

    def __init__(self, params, branch, phi0, t, m_off=False, trunc=None):
        self.ode = _BranchOde(params, branch, m_off=m_off, trunc=trunc)
        self.t = t
        self.phi0 = float(phi0)
        self.hm = t[1:-1] - t[:-2]
        self.hp = t[2:] - t[1:-1]
        self.scale = self.ode.row_scale(t[1:-1])
        self.c_one_sided = _one_sided_first(t)
        self._setup_first_derivative(params, m_off)

    def _setup_first_derivative(self, params, m_off):
        hm, hp, ti = self.hm, self.hp, self.t[1:-1]
        # second-order centered coefficients on a nonuniform grid
        ccm = -hp / (hm * (hm + hp))
        cc0 = (hp - hm) / (hm * hp)
        ccp = hm / (hp * (hm + hp))
        if params.q < 2.0 or m_off:
            self.dm, self.d0, self.dp = ccm, cc0, ccp
            return
        g = max(self.ode.gamma, 1.0)
        f_d_typ = params.m * params.q * g ** (params.q - 1.0) * np.exp((2.0 - params.q) * ti)
        rho = 0.25 * (hm + hp) * f_d_typ
        theta = rho / (1.0 + rho)
        self.dm = (1.0 - theta) * ccm + theta * (-1.0 / hm)
        self.d0 = (1.0 - theta) * cc0 + theta * (1.0 / hm)
        self.dp = (1.0 - theta) * ccp

    def residual(self, w):
        t, hm, hp = self.t, self.hm, self.hp
        n = t.size
        F = np.empty(n)
        wi = w[1:-1]
        D = self.dm * w[:-2] + self.d0 * wi + self.dp * w[2:]
        stencil = -(2.0 / (hm + hp)) * (hm * w[2:] - (hm + hp) * wi + hp * w[:-2])
        F[1:-1] = self.scale * (stencil + hm * hp * self.ode.f(t[1:-1], wi, D))
        c0, c1, c2 = self.c_one_sided
        Dt0 = c0 * w[0] + c1 * w[1] + c2 * w[2]
        F[0], _, _ = self.ode.robin_residual_and_derivative(t[0], w[0], Dt0)
        F[-1] = w[-1] - self.phi0
        return F

    def jacobian_banded(self, w):
        """Banded Jacobian in solve_banded layout with (kl, ku) = (1, 2)."""
        t, hm, hp = self.t, self.hm, self.hp
        n = t.size
        ab = np.zeros((4, n))  # rows: ku=2 superdiags, diag, kl=1 subdiag
        wi = w[1:-1]
        D = self.dm * w[:-2] + self.d0 * wi + self.dp * w[2:]
        dD_dm = self.dm
        dD_d0 = self.d0
        dD_dp = self.dp
        fw = self.ode.f_w(t[1:-1], wi)
        fD = self.ode.f_D(t[1:-1], D)
        s = self.scale
        diag = s * (2.0 + hm * hp * (fw + fD * dD_d0))
        lower = s * (-2.0 * hp / (hm + hp) + hm * hp * fD * dD_dm)
        upper = s * (-2.0 * hm / (hm + hp) + hm * hp * fD * dD_dp)
        # interior rows i = 1..n-2
        ab[2, 1:-1] = diag
        ab[3, 0:-2] = lower
        ab[1, 2:] = upper
        # inner closure row (touches columns 0, 1, 2)
        c0, c1, c2 = self.c_one_sided
        Dt0 = c0 * w[0] + c1 * w[1] + c2 * w[2]
        _, dres_dw0, dres_dD = self.ode.robin_residual_and_derivative(t[0], w[0], Dt0)
        ab[2, 0] = dres_dD * c0 + dres_dw0
        ab[1, 1] = dres_dD * c1
        ab[0, 2] = dres_dD * c2
        # outer Dirichlet row
        ab[2, -1] = 1.0
        ab[3, -1] = 0.0
        return ab

    def solve(self, w0, tol, max_iter, damping):
        """Damped Newton with backtracking line search on the residual norm."""
        w = np.array(w0, dtype=float)
        F = self.residual(w)
        norm = float(np.max(np.abs(F)))
        iterations = 0
        for iterations in range(1, max_iter + 1):
            if norm <= tol:
                break
            ab = self.jacobian_banded(w)
            try:
                step = solve_banded((1, 2), ab, -F)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
                raise NoConvergence(f"linear solve failed: {exc}", residual=norm)
            alpha = 1.0
            improved = False
            for _ in range(40):
                trial = w + alpha * step
                Ft = self.residual(trial)
                if np.all(np.isfinite(Ft)):
                    nt = float(np.max(np.abs(Ft)))
                    if nt < (1.0 - 1e-4 * alpha) * norm or nt <= tol:
                        w, F, norm = trial, Ft, nt
                        improved = True
                        break
                alpha *= damping
            if not improved:
                raise NoConvergence(
                    f"line search stalled at residual {norm:.3e}", residual=norm
                )
        if norm > tol:
            raise NoConvergence(
                f"Newton did not reach tol {tol:g} in {max_iter} iterations "
                f"(residual {norm:.3e})",
                residual=norm,
            )
        return w, norm, iterations


def _finish_profile(params, branch, t, w, norm, iterations, extra=None):
    info = {"method": "collocation", "newton_residual": norm, "newton_iterations": iterations}
    if extra:
        info.update(extra)
    return RadialProfile(t, w, _first_derivative(t, w), branch, params, info=info)


def solve_bvp_subcritical(
    params: ProblemParams, phi0: float, config: SolverConfig | None = None
) -> RadialProfile:
    """Singular solution with prescribed strength gamma in (0, 2/b), 1 < q < 2.

    Newton collocation on the shift_gamma branch with continuation in gamma
    starting from a tenth of the target, each step reusing the previous
    solution re-expressed in the new branch variable.
    """
    config = config or SolverConfig()
    params.require_subcritical()
    gamma = params.gamma
    if gamma is None or not (0.0 < gamma < params.two_over_b):
        raise PreconditionViolation(
            f"needs params.gamma strictly inside (0, 2/b), got {gamma}"
        )
    t = config.grid()
    gammas = np.linspace(0.1 * gamma, gamma, config.continuation_steps)
    w = np.full(t.size, float(phi0))
    prev_g = None
    result = None
    for g in gammas:
        if prev_g is not None:
            w = w + (g - prev_g) * t
        system = _Collocation(params, Branch.shift_gamma(g), phi0, t)
        w, norm, iters = system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)
        prev_g = g
        result = (w, norm, iters)
    w, norm, iters = result
    return _finish_profile(params, Branch.shift_gamma(gamma), t, w, norm, iters)


def solve_bvp_critical(
    params: ProblemParams, phi0: float, config: SolverConfig | None = None
) -> RadialProfile:
    """Maximal-strength solution gamma = 2/b in the lambda variable.

    The inner closure pins the unknown near its forced limit constant
    (1/b)*ln(2/(a*b)); continuation ramps the gradient coefficient m up from
    the pure-absorption problem.
    """
    config = config or SolverConfig()
    params.require_subcritical()
    if params.gamma is not None and abs(params.gamma - params.two_over_b) > 1e-12:
        raise PreconditionViolation("critical solver needs gamma = 2/b")
    t = config.grid()
    ell = params.critical_additive_constant
    w = float(phi0) + (ell - phi0) * (t / config.T0)
    branch = Branch.lambda_critical()
    m_values = np.linspace(0.0, params.m, config.continuation_steps + 1)
    norm = iters = None
    for mk in m_values:
        pk = ProblemParams(m=params.m if mk == 0.0 else mk, a=params.a, b=params.b, q=params.q,
                           gamma=params.gamma)
        system = _Collocation(pk, branch, phi0, t, m_off=(mk == 0.0))
        w, norm, iters = system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)
    return _finish_profile(params, branch, t, w, norm, iters)


def eikonal_plateau_constant(params: ProblemParams) -> float:
    """Value of the singular eikonal profile in the q_over_b variable.

    The singular branch has w = u - (q/b)*ln(1/r) -> this constant as
    t -> -inf; it is also the canonical boundary value for which the
    explicit eikonal profile solves the problem exactly.
    """
    return params.q_over_b * math.log(params.eikonal_amplitude)


def _layer_mode_rate(params: ProblemParams) -> float:
    """Growth rate of the boundary-layer mode about the eikonal plateau."""
    pb = params.m * params.q_over_b ** params.q * params.b
    return 0.5 * (pb + math.sqrt(pb * pb + 4.0 * pb))


def _solve_supercritical_at(params, phi0, t, config, w_seed):
    """One boundary value: exact-power Newton, with a truncation ladder as
    the rescue globalisation when the direct solve stalls."""
    branch = Branch.q_over_b()
    system = _Collocation(params, branch, phi0, t)
    try:
        return system.solve(w_seed, config.newton_tol, config.newton_max_iter, config.damping)
    except NoConvergence:
        pass
    qb = params.q_over_b
    w = np.array(w_seed, dtype=float)
    for s in qb * np.geomspace(1.0, 64.0, config.continuation_steps):
        trunc_sys = _Collocation(params, branch, phi0, t, trunc=float(s))
        w, _, _ = trunc_sys.solve(w, max(config.newton_tol, 1e-9),
                                  config.newton_max_iter, config.damping)
    return system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)


def solve_supercritical_singular(
    params: ProblemParams,
    phi0: float | None = None,
    config: SolverConfig | None = None,
) -> RadialProfile:
    """Singular branch of the q > 2 dichotomy, slope forced to q/b.

    The default boundary value is the eikonal plateau constant, for which
    the explicit eikonal profile is the exact solution.  Other boundary
    values are reached by continuation from the plateau with adaptive step
    halving, each Newton solve seeded through the boundary-layer mode and
    rescued, when needed, by continuation in the truncation threshold of
    the gradient power.

    The singular branch does not exist for boundary values far below the
    plateau constant: the gradient term caps how much a solution can rise
    from its boundary value (Riccati self-limiting), so profiles started
    too low fall onto the regular branch.  Continuation that stalls against
    that fold raises NoConvergence with the last reachable boundary value;
    a converged profile whose deep slope collapsed raises BranchCollapse.
    """
    config = config or SolverConfig()
    params.require_supercritical()
    t = config.grid()
    branch = Branch.q_over_b()
    ell = eikonal_plateau_constant(params)
    if phi0 is None:
        phi0 = ell
    mu = _layer_mode_rate(params)
    layer = np.exp(mu * t)

    phi_now = ell
    w = np.full(t.size, ell)
    w, norm, iters = _solve_supercritical_at(params, phi_now, t, config, w)
    step = phi0 - ell
    min_step = max(1e-3, 1e-3 * abs(phi0 - ell))
    while phi_now != phi0:
        step = math.copysign(min(abs(step), abs(phi0 - phi_now)), phi0 - phi_now)
        trial_phi = phi_now + step
        seed = w + (trial_phi - phi_now) * layer
        try:
            w_new, norm, iters = _solve_supercritical_at(params, trial_phi, t, config, seed)
        except NoConvergence as exc:
            if abs(step) <= min_step:
                raise NoConvergence(
                    f"singular branch unreachable at boundary value {phi0:g}: continuation "
                    f"stalled at {phi_now:g} (plateau constant {ell:g}; boundary values far "
                    "below it admit no singular solution)",
                    residual=exc.residual,
                ) from exc
            step *= 0.5
            continue
        w, phi_now = w_new, trial_phi
    profile = _finish_profile(params, branch, t, w, norm, iters)
    slope = _deep_slope(profile)
    qb = params.q_over_b
    if slope < 0.5 * qb:
        raise BranchCollapse(
            f"singular solve collapsed to the regular branch (deep slope {slope:.3f} "
            f"vs target {qb:.3f})",
            profile=profile,
        )
    return profile


def solve_regular(
    params: ProblemParams, phi0: float, config: SolverConfig | None = None
) -> RadialProfile:
    """Bounded solution with the symmetry condition u'(0) = 0.

    In the log variable the centre condition becomes exponential flattening
    of u(t), enforced by the frozen-coefficient closure with zero shift.
    """
    config = config or SolverConfig()
    t = config.grid()
    w = np.full(t.size, float(phi0))
    system = _Collocation(params, Branch.noshift(), phi0, t)
    w, norm, iters = system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)
    return _finish_profile(params, Branch.noshift(), t, w, norm, iters)


def solve_emden(
    params: ProblemParams,
    gamma: float,
    phi0: float,
    config: SolverConfig | None = None,
) -> RadialProfile:
    """Pure-absorption solution (gradient term off) with strength gamma.

    Dispatches to the regular, prescribed-strength, or critical machinery
    with the gradient term disabled; gamma above 2/b is rejected (no such
    solutions exist).
    """
    config = config or SolverConfig()
    if not (0.0 <= gamma <= params.two_over_b + 1e-15):
        raise PreconditionViolation(f"gamma = {gamma} outside [0, 2/b]")
    t = config.grid()
    if gamma == 0.0:
        branch = Branch.noshift()
        w = np.full(t.size, float(phi0))
        system = _Collocation(params, branch, phi0, t, m_off=True)
        w, norm, iters = system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)
        return _finish_profile(params, branch, t, w, norm, iters, {"m_off": True})
    if abs(gamma - params.two_over_b) <= 1e-12:
        branch = Branch.lambda_critical()
        ell = params.critical_additive_constant
        w = float(phi0) + (ell - phi0) * (t / config.T0)
        system = _Collocation(params, branch, phi0, t, m_off=True)
        w, norm, iters = system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)
        return _finish_profile(params, branch, t, w, norm, iters, {"m_off": True})
    branch = Branch.shift_gamma(gamma)
    gammas = np.linspace(0.1 * gamma, gamma, config.continuation_steps)
    w = np.full(t.size, float(phi0))
    prev_g = None
    norm = iters = None
    for g in gammas:
        if prev_g is not None:
            w = w + (g - prev_g) * t
        system = _Collocation(params, Branch.shift_gamma(g), phi0, t, m_off=True)
        w, norm, iters = system.solve(w, config.newton_tol, config.newton_max_iter, config.damping)
        prev_g = g
    return _finish_profile(params, branch, t, w, norm, iters, {"m_off": True})


def _deep_slope(profile: RadialProfile) -> float:
    """Least-squares slope of u against -t on the deep third of the grid."""
    t = profile.t_grid
    u = profile.u()
    lo = t[0] + 0.05 * (t[-1] - t[0])
    hi = t[0] + (t[-1] - t[0]) / 3.0
    sel = (t >= lo) & (t <= hi)
    A = np.vstack([-t[sel], np.ones(sel.sum())]).T
    coef, *_ = np.linalg.lstsq(A, u[sel], rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# shooting cross-check and the radial energy-balance function


def shoot_subcritical(
    params: ProblemParams,
    phi0: float,
    config: SolverConfig | None = None,
    bracket: tuple[float, float] | None = None,
) -> RadialProfile:
    """Independent shooting solution of the subcritical singular problem.

    Integrates the shift_gamma equation from T0 with the asymptotic constant
    as the unknown, matching the outer Dirichlet value by bisection on a
    bracket.  Serves as the second route against the collocation path.
    """
    from scipy.optimize import brentq

    config = config or SolverConfig()
    params.require_subcritical()
    gamma = params.gamma
    if gamma is None or not (0.0 < gamma < params.two_over_b):
        raise PreconditionViolation("needs params.gamma strictly inside (0, 2/b)")
    branch = Branch.shift_gamma(gamma)
    ode = _BranchOde(params, branch)

    def outer_mismatch(ell: float) -> float:
        res, _, _ = ode.robin_residual_and_derivative(config.T0, ell, 0.0)
        w0_t = -res  # Robin: res = Dt0 - rhs, so rhs = -res at Dt0 = 0
        try:
            prof = integrate_ivp(params, branch, config.T0, ell, w0_t, 0.0, config)
        except FiniteTimeBlowup as exc:
            # escaped orbit: sign the sentinel by the escape direction
            w_last = exc.state_last[0] if exc.state_last else phi0 + 1.0
            return 1e6 if w_last > phi0 else -1e6
        except StiffnessFault:
            return 1e6
        return float(prof.w[-1] - phi0)

    if bracket is None:
        lo, hi = phi0 - 6.0, phi0 + 2.0
    else:
        lo, hi = bracket
    flo, fhi = outer_mismatch(lo), outer_mismatch(hi)
    expand = 0
    while flo * fhi > 0.0 and expand < 8:
        if flo > 0.0:
            lo -= 4.0
        else:
            hi += 1.0
        flo, fhi = outer_mismatch(lo), outer_mismatch(hi)
        expand += 1
    if flo * fhi > 0.0:
        raise NoConvergence("shooting bracket does not straddle the boundary value")
    ell = brentq(outer_mismatch, lo, hi, xtol=1e-13, rtol=8.9e-16)
    res, _, _ = ode.robin_residual_and_derivative(config.T0, ell, 0.0)
    profile = integrate_ivp(params, branch, config.T0, ell, -res, 0.0, config)
    profile.info["asymptotic_constant"] = float(ell)
    return profile


def lyapunov_balance(profile: RadialProfile, params: ProblemParams | None = None):
    """Radial energy balance W(r) = a*e^(b*u) - m*|u'(r)|^q along the profile.

    (r*u')' = r*W, so a one-signed W near the origin makes r*u'(r) monotone
    there (the mechanism forcing the supercritical singular slope).  Returns
    the sampled W, the number of sign changes, and whether W keeps one sign
    on the inner quarter of the grid.  On the singular branch W is the
    cancellation of two exponentially large terms, so the sign census only
    counts values resolvable above the round-off of that cancellation;
    profiles solved with the gradient term off are balanced with m = 0.
    """
    params = params or profile.params
    u = profile.u()
    ur = profile.u_r()
    m_eff = 0.0 if profile.info.get("m_off") else params.m
    absorb = params.a * np.exp(params.b * u)
    react = m_eff * cf.abs_power(np.abs(ur), params.q)
    W = absorb - react
    noise = 1e-11 * (absorb + react)
    significant = np.abs(W) > noise
    sig = np.sign(W[significant])
    changes = int(np.count_nonzero(np.diff(sig[sig != 0.0])))
    quarter = max(2, profile.t_grid.size // 4)
    inner = W[:quarter][significant[:quarter]]
    one_signed = bool(inner.size == 0 or np.all(inner >= 0.0) or np.all(inner <= 0.0))
    return W, changes, one_signed
