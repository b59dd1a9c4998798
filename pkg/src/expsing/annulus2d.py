"""Full (t, theta) solver on the half-cylinder for non-radial boundary data.

Five-point finite differences in the log-polar variables, periodic in the
angle, damped Newton on a sparse Jacobian.  The inner closure applies the
radial frozen-coefficient condition to the angular mean and homogeneous
Neumann data to the oscillating part (whose modes decay exponentially, so
any bounded closure contributes only O(e^{beta*T0})).

The discrete system restricted to angle-independent states reproduces the
radial collocation exactly, which is both a correctness lever (radial data
must give the radial solution to solver tolerance) and the seeding
strategy: every solve starts from the matching radial profile broadcast
around the cylinder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import closed_forms as cf
from .errors import BranchCollapse, InvalidInput, NoConvergence
from .params import ProblemParams, Regime
from .radial import (
    SolverConfig,
    _BranchOde,
    _first_derivative,
    _one_sided_first,
    solve_bvp_critical,
    solve_bvp_subcritical,
    solve_regular,
    solve_supercritical_singular,
)
from .transforms import Branch, from_branch


@dataclass(frozen=True)
class Field2D:
    """Sampled branch-variable field w(t, theta), periodic in theta."""

    t_grid: np.ndarray
    w: np.ndarray  # shape (n_t, n_theta)
    branch: Branch
    params: ProblemParams
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != t.size:
            raise InvalidInput("w must be (n_t, n_theta) matching the t grid")
        n_theta = w.shape[1]
        if n_theta < 4 or n_theta & (n_theta - 1):
            raise InvalidInput("n_theta must be a power of two >= 4")
        if not np.all(np.isfinite(w)):
            raise InvalidInput("field values must be finite")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "w", w)

    @property
    def n_theta(self) -> int:
        return self.w.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_theta) / self.n_theta

    def u(self) -> np.ndarray:
        shift = from_branch(self.params, self.branch, self.t_grid, np.zeros_like(self.t_grid))
        return self.w + shift[:, None]

    def u_derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """(u_t, u_theta) by high-order differences; spectral in theta."""
        u = self.u()
        u_t = np.empty_like(u)
        for j in range(self.n_theta):
            u_t[:, j] = _first_derivative(self.t_grid, u[:, j])
        k = np.fft.rfftfreq(self.n_theta, d=1.0 / self.n_theta)
        u_th = np.fft.irfft(1j * k * np.fft.rfft(u, axis=1), n=self.n_theta, axis=1)
        return u_t, u_th

    def angular_mean(self) -> np.ndarray:
        return self.w.mean(axis=1)


def _resolve_branch(params: ProblemParams, gamma: float | None) -> Branch:
    if params.regime is Regime.SUPERCRITICAL:
        return Branch.q_over_b()
    if gamma is None:
        raise InvalidInput("subcritical 2-d solve needs a singularity strength")
    if abs(gamma - params.two_over_b) <= 1e-12:
        return Branch.lambda_critical()
    if not 0.0 < gamma < params.two_over_b:
        raise InvalidInput(f"gamma = {gamma} outside (0, 2/b]")
    return Branch.shift_gamma(gamma)


class _Collocation2D:
    """Sparse nonlinear system on the (t, theta) grid."""

    def __init__(self, params, branch, boundary, t, n_theta, m_off=False, trunc=None):
        self.ode = _BranchOde(params, branch, m_off=m_off, trunc=trunc)
        self.params = params
        self.branch = branch
        self.t = t
        self.nt = t.size
        self.nth = n_theta
        self.boundary = np.asarray(boundary, dtype=float)
        if self.boundary.shape != (n_theta,):
            raise InvalidInput("boundary must be sampled on the angular grid")
        h = np.diff(t)
        if not np.allclose(h, h[0], rtol=1e-12, atol=0.0):
            raise InvalidInput("2-d solver requires a uniform t grid")
        self.ht = float(h[0])
        self.hth = 2.0 * math.pi / n_theta
        self.scale = self.ode.row_scale(t[1:-1])
        self.c_one_sided = _one_sided_first(t)
        self._setup_blend(params, m_off)
        self._setup_indices()

    def _setup_blend(self, params, m_off):
        ti = self.t[1:-1]
        if params.q < 2.0 or m_off:
            theta = np.zeros_like(ti)
        else:
            g = max(self.ode.gamma, 1.0)
            f_d_typ = params.m * params.q * g ** (params.q - 1.0) * np.exp((2.0 - params.q) * ti)
            rho = 0.5 * self.ht * f_d_typ
            theta = rho / (1.0 + rho)
        h = self.ht
        self.dm = (1.0 - theta) * (-0.5 / h) + theta * (-1.0 / h)
        self.d0 = theta * (1.0 / h)
        self.dp = (1.0 - theta) * (0.5 / h)

    def _setup_indices(self):
        nt, nth = self.nt, self.nth
        i = np.arange(1, nt - 1)[:, None]
        j = np.arange(nth)[None, :]
        self.K = (i * nth + j).ravel()
        self.K_tm = ((i - 1) * nth + j).ravel()
        self.K_tp = ((i + 1) * nth + j).ravel()
        self.K_thm = (i * nth + (j - 1) % nth).ravel()
        self.K_thp = (i * nth + (j + 1) % nth).ravel()

    def _effective_gradient(self, ti, Dt, Dth):
        """Squared gradient magnitude entering the reaction term."""
        p = self.params
        if self.branch.kind == "lambda_critical":
            tb = p.two_over_b
            gt = tb - Dt - tb / (1.0 - ti)
        else:
            gt = self.ode.gamma - Dt
        return gt, Dth, gt * gt + Dth * Dth

    def _reaction(self, ti, P):
        p = self.params
        if self.ode.m_off:
            return np.zeros_like(P), np.zeros_like(P)
        E2 = np.exp((2.0 - p.q) * ti)
        if self.ode.trunc is None:
            val = cf.abs_power(np.sqrt(P), p.q)
            dval = np.where(P > 0.0, 0.5 * p.q * cf.abs_power(np.sqrt(P), p.q - 2.0), 0.0)
        else:
            val = cf.truncated_power(P, self.ode.trunc, p.q)
            dval = cf.truncated_power_prime(P, self.ode.trunc, p.q)
        return p.m * E2 * val, p.m * E2 * dval  # (term, d term/dP)

    def _absorption(self, ti, w):
        p = self.params
        with np.errstate(over="ignore"):  # rejected by the line search
            if self.branch.kind == "lambda_critical":
                return p.a * np.exp(p.b * w) / (1.0 - ti) ** 2
            return p.a * np.exp((2.0 - p.b * self.ode.gamma) * ti + p.b * w)

    def residual(self, wflat):
        nt, nth = self.nt, self.nth
        w = wflat.reshape(nt, nth)
        t = self.t
        ht, hth = self.ht, self.hth
        F = np.empty((nt, nth))
        wi = w[1:-1]
        ti = t[1:-1][:, None]
        Dt = self.dm[:, None] * w[:-2] + self.d0[:, None] * wi + self.dp[:, None] * w[2:]
        Dth = (np.roll(w, -1, axis=1)[1:-1] - np.roll(w, 1, axis=1)[1:-1]) / (2.0 * hth)
        lap = (w[2:] - 2.0 * wi + w[:-2]) + (ht / hth) ** 2 * (
            np.roll(wi, -1, axis=1) - 2.0 * wi + np.roll(wi, 1, axis=1)
        )
        gt, gth, P = self._effective_gradient(ti, Dt, Dth)
        reaction, _ = self._reaction(ti, P)
        f = self._absorption(ti, wi) - reaction
        if self.branch.kind == "lambda_critical":
            f = f - (2.0 / self.params.b) / (1.0 - ti) ** 2
        F[1:-1] = self.scale[:, None] * (-lap + ht * ht * f)
        c0, c1, c2 = self.c_one_sided
        Gt = c0 * w[0] + c1 * w[1] + c2 * w[2]
        mean0 = float(w[0].mean())
        res0 = np.empty(nth)
        for j in range(nth):
            res0[j], _, _ = self.ode.robin_residual_and_derivative(t[0], mean0, Gt[j])
        F[0] = res0
        F[-1] = w[-1] - self.boundary
        return F.ravel()

    def jacobian(self, wflat):
        nt, nth = self.nt, self.nth
        w = wflat.reshape(nt, nth)
        t = self.t
        ht, hth = self.ht, self.hth
        ti = t[1:-1][:, None]
        wi = w[1:-1]
        Dt = self.dm[:, None] * w[:-2] + self.d0[:, None] * wi + self.dp[:, None] * w[2:]
        Dth = (np.roll(w, -1, axis=1)[1:-1] - np.roll(w, 1, axis=1)[1:-1]) / (2.0 * hth)
        gt, gth, P = self._effective_gradient(ti, Dt, Dth)
        _, dreact = self._reaction(ti, P)
        f_w = self.params.b * self._absorption(ti, wi)
        f_Dt = dreact * 2.0 * gt  # d(-reaction)/dDt = -dreact * dP/dDt, dP/dDt = -2 gt
        f_Dth = -dreact * 2.0 * gth
        s = self.scale[:, None]
        r2 = (ht / hth) ** 2
        diag = s * (2.0 + 2.0 * r2 + ht * ht * (f_w + f_Dt * self.d0[:, None]))
        tm = s * (-1.0 + ht * ht * f_Dt * self.dm[:, None])
        tp = s * (-1.0 + ht * ht * f_Dt * self.dp[:, None])
        thm = s * (-r2 + ht * ht * f_Dth * (-1.0 / (2.0 * hth)))
        thp = s * (-r2 + ht * ht * f_Dth * (1.0 / (2.0 * hth)))

        rows = [self.K, self.K, self.K, self.K, self.K]
        cols = [self.K, self.K_tm, self.K_tp, self.K_thm, self.K_thp]
        vals = [diag.ravel(), tm.ravel(), tp.ravel(), thm.ravel(), thp.ravel()]

        # inner closure rows
        c0, c1, c2 = self.c_one_sided
        Gt = c0 * w[0] + c1 * w[1] + c2 * w[2]
        mean0 = float(w[0].mean())
        j_idx = np.arange(nth)
        d_dw0 = np.empty(nth)
        d_dG = np.empty(nth)
        for j in range(nth):
            _, d_dw0[j], d_dG[j] = self.ode.robin_residual_and_derivative(t[0], mean0, Gt[j])
        rows.append(np.repeat(j_idx, 3))
        cols.append(np.column_stack([j_idx, nth + j_idx, 2 * nth + j_idx]).ravel())
        vals.append(np.column_stack([d_dG * c0, d_dG * c1, d_dG * c2]).ravel())
        # mean coupling of row 0 to the whole first ring
        rows.append(np.repeat(j_idx, nth))
        cols.append(np.tile(j_idx, nth))
        vals.append(np.repeat(d_dw0 / nth, nth))
        # outer Dirichlet rows
        last = (nt - 1) * nth + j_idx
        rows.append(last)
        cols.append(last)
        vals.append(np.ones(nth))

        n = nt * nth
        return sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )

    def solve(self, w0, tol, max_iter, damping):
        w = np.array(w0, dtype=float).ravel()
        F = self.residual(w)
        norm = float(np.max(np.abs(F)))
        iterations = 0
        for iterations in range(1, max_iter + 1):
            if norm <= tol:
                break
            J = self.jacobian(w)
            step = spla.splu(J).solve(-F)
            alpha, improved = 1.0, False
            for _ in range(40):
                trial = w + alpha * step
                Ft = self.residual(trial)
                if np.all(np.isfinite(Ft)):
                    nt_ = float(np.max(np.abs(Ft)))
                    if nt_ < (1.0 - 1e-4 * alpha) * norm or nt_ <= tol:
                        w, F, norm = trial, Ft, nt_
                        improved = True
                        break
                alpha *= damping
            if not improved:
                raise NoConvergence(f"2-d line search stalled at {norm:.3e}", residual=norm)
        if norm > tol:
            raise NoConvergence(
                f"2-d Newton did not reach tol {tol:g} in {max_iter} iterations "
                f"(residual {norm:.3e})",
                residual=norm,
            )
        return w.reshape(self.nt, self.nth), norm, iterations


def _radial_seed(params, branch, phi_mean, config):
    if branch.kind == "gamma":
        return solve_bvp_subcritical(params.with_gamma(branch.gamma), phi_mean, config)
    if branch.kind == "lambda_critical":
        return solve_bvp_critical(params.with_gamma(params.two_over_b), phi_mean, config)
    if branch.kind == "q_over_b":
        return solve_supercritical_singular(params, phi_mean, config)
    return solve_regular(params, phi_mean, config)


def solve_nonradial(
    params: ProblemParams,
    gamma: float | None,
    boundary,
    config: SolverConfig | None = None,
    n_theta: int = 64,
    branch: Branch | None = None,
    seed_perturbation: float = 0.0,
) -> Field2D:
    """Solve the transformed equation on [T0, 0] x S^1 with Dirichlet data.

    ``boundary`` is a scalar or an array sampled at the n_theta angular
    nodes.  The Newton iteration starts from the radial solution of the
    angular mean broadcast around the cylinder (plus an optional
    mode-one perturbation used by the seed-insensitivity diagnostic).
    """
    config = config or SolverConfig()
    branch = branch or _resolve_branch(params, gamma)
    boundary = np.asarray(boundary, dtype=float)
    if boundary.ndim == 0:
        boundary = np.full(n_theta, float(boundary))
    if boundary.shape != (n_theta,):
        raise InvalidInput(f"boundary must be scalar or length {n_theta}")
    phi_mean = float(boundary.mean())
    radial = _radial_seed(params, branch, phi_mean, config)
    t = radial.t_grid
    w0 = np.repeat(radial.w[:, None], n_theta, axis=1)
    # blend the boundary oscillation into the seed with a harmonic decay
    osc = boundary - phi_mean
    if np.max(np.abs(osc)) > 0.0:
        w0 = w0 + osc[None, :] * np.exp(t)[:, None]
    if seed_perturbation != 0.0:
        theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
        w0 = w0 + seed_perturbation * np.cos(theta)[None, :] * np.exp(t)[:, None]
    system = _Collocation2D(params, branch, boundary, t, n_theta)
    w, norm, iterations = system.solve(w0, config.newton_tol, config.newton_max_iter, config.damping)
    info = {
        "method": "collocation2d",
        "newton_residual": norm,
        "newton_iterations": iterations,
        "radial_seed_iterations": radial.info.get("newton_iterations"),
    }
    fld = Field2D(t, w, branch, params, info=info)
    if params.q > 2.0 and branch.kind == "q_over_b":
        mean_u = fld.u().mean(axis=1)
        fitslope = np.polyfit(-t[t <= t[0] / 2.0], mean_u[t <= t[0] / 2.0], 1)[0]
        if fitslope < 0.5 * params.q_over_b:
            raise BranchCollapse("2-d singular solve collapsed to the regular branch")
    return fld


@dataclass(frozen=True)
class ModeDecay:
    mode_norms: np.ndarray  # (K, n_t) L2(S^1) norms of modes 1..K
    rates: tuple  # fitted decay rate per mode (None when the fit is unreliable)
    rates_dt: tuple  # same for the t-derivative field
    window: tuple[float, float]
    parseval_error: float


def fourier_mode_norms(field: Field2D, n_modes: int = 8, window=None) -> ModeDecay:
    """Per-mode L2(S^1) norms and fitted exponential decay rates.

    The norms satisfy the discrete Parseval identity against the row L2 norm
    of the oscillating part; rates are least-squares slopes of the log norm
    on a window in the middle of the cylinder (deep enough for asymptotics,
    shallow enough to stay above solver noise) and are reported only when
    the fit's relative residual is below 0.2.
    """
    from .asymptotics import fit_decay

    t = field.t_grid
    w = field.w
    nth = field.n_theta
    c = np.fft.rfft(w, axis=1) / nth
    kmax = min(n_modes, nth // 2 - 1)
    norms = np.empty((kmax, t.size))
    for k in range(1, kmax + 1):
        norms[k - 1] = math.sqrt(4.0 * math.pi) * np.abs(c[:, k])
    wstar = w - w.mean(axis=1, keepdims=True)
    row = np.sqrt(2.0 * math.pi * (wstar**2).mean(axis=1))
    total = np.sqrt((norms**2).sum(axis=0) + sum(
        4.0 * math.pi * np.abs(c[:, k]) ** 2 for k in range(kmax + 1, nth // 2)
    ) + 2.0 * math.pi * np.abs(c[:, nth // 2]) ** 2)
    # identity error relative to the data scale (per-row normalisation would
    # amplify round-off on the exponentially small deep rows)
    parseval = float(np.max(np.abs(total - row)) / max(float(np.max(row)), 1e-300))

    if window is None:
        span = t[-1] - t[0]
        window = (t[0] + 0.35 * span, t[0] + 0.65 * span)

    w_t = np.empty_like(w)
    for j in range(nth):
        w_t[:, j] = _first_derivative(t, w[:, j])
    ct = np.fft.rfft(w_t, axis=1) / nth

    def _fit(series):
        try:
            rate, flags = fit_decay(t, series, window=window)
        except Exception:
            return None
        # reliability: refit residual must be modest
        mask = (t >= window[0]) & (t <= window[1])
        y = np.log(np.maximum(series[mask], 1e-300))
        X = np.column_stack([t[mask], np.ones(int(mask.sum()))])
        coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
        rel = float(np.max(np.abs(y - X @ coef))) / max(float(np.max(np.abs(y - y.mean()))), 1e-300)
        return rate if rel < 0.2 else None

    rates = tuple(_fit(norms[k]) for k in range(kmax))
    rates_dt = tuple(
        _fit(math.sqrt(4.0 * math.pi) * np.abs(ct[:, k + 1])) for k in range(kmax)
    )
    return ModeDecay(norms, rates, rates_dt, window, parseval)


def angular_variation(field: Field2D, window=None) -> tuple[np.ndarray, float]:
    """Per-row oscillation max-min and its supremum over an inner window."""
    t = field.t_grid
    osc = field.w.max(axis=1) - field.w.min(axis=1)
    if window is None:
        span = t[-1] - t[0]
        window = (t[0] + 0.05 * span, t[0] + span / 3.0)
    mask = (t >= window[0]) & (t <= window[1])
    return osc, float(np.max(osc[mask]))


def seed_insensitivity_check(
    params: ProblemParams,
    gamma: float | None,
    boundary,
    config: SolverConfig | None = None,
    n_theta: int = 64,
    perturbations=(0.0, 0.1, -0.1),
) -> float:
    """Max pairwise difference of converged fields across Newton seeds.

    Uniqueness cannot be certified numerically; this reports the observed
    insensitivity of the converged solution to distinct starting points.
    """
    fields = [
        solve_nonradial(params, gamma, boundary, config, n_theta, seed_perturbation=eps)
        for eps in perturbations
    ]
    worst = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            worst = max(worst, float(np.max(np.abs(fields[i].w - fields[j].w))))
    return worst
