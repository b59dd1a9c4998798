"""Asymptotic quantity extraction from computed profiles.

Everything here is ordinary least squares on a window in the log variable:
the singular slope and additive constant from u against -t, the critical
branch's log-log coefficient, exponential decay rates of deviations and
Fourier-mode norms, and the boundary Hoelder exponent of bounded
supercritical profiles.  Robust-regression variants were deliberately
rejected: the inputs are deterministic solver outputs and reproducibility
matters more than outlier tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidWindow
from .radial import RadialProfile


@dataclass(frozen=True)
class SingularityFit:
    """Fitted singular expansion u ~ gamma_hat*ln(1/r) + ell_hat (+ corrections)."""

    gamma_hat: float
    ell_hat: float
    window: tuple[float, float]
    residual: float
    beta_hat: float | None = None
    loglog_coefficient: float | None = None
    flags: tuple[str, ...] = ()


def default_window(t_grid, closure_margin: float = 0.05) -> tuple[float, float]:
    """Deepest third of the grid, excluding the slice nearest the inner cutoff.

    The excluded slice (5% of the span by default) carries the artificial
    closure's footprint; the rest of the deep third is the cleanest
    asymptotic regime available.
    """
    t0, t1 = float(t_grid[0]), float(t_grid[-1])
    span = t1 - t0
    return (t0 + closure_margin * span, t0 + span / 3.0)


def _window_mask(t, window):
    lo, hi = window
    if not lo < hi:
        raise InvalidWindow(f"empty window {window}")
    mask = (t >= lo) & (t <= hi)
    if int(mask.sum()) < 3:
        raise InvalidWindow(f"window {window} holds fewer than 3 grid points")
    return mask


def _profile_tu(profile):
    if isinstance(profile, RadialProfile):
        return profile.t_grid, profile.u()
    t, u = profile
    return np.asarray(t, dtype=float), np.asarray(u, dtype=float)


def _ols(X, y):
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ coef
    denom = max(float(np.max(np.abs(y - np.mean(y)))), 1e-300)
    residual = float(np.max(np.abs(y - fitted))) / denom
    return coef, residual


def fit_gamma(profile, window=None) -> SingularityFit:
    """Least-squares line u = gamma_hat*(-t) + ell_hat over the window.

    On profiles with the critical log-log correction the slope drifts toward
    2/b from below as the window deepens; such fits are flagged
    LogLogSuspect when the fit residual is large relative to affine inputs.
    """
    t, u = _profile_tu(profile)
    window = window or default_window(t)
    mask = _window_mask(t, window)
    X = np.column_stack([-t[mask], np.ones(int(mask.sum()))])
    coef, residual = _ols(X, u[mask])
    flags = ("LogLogSuspect",) if residual > 1e-4 else ()
    return SingularityFit(
        gamma_hat=float(coef[0]),
        ell_hat=float(coef[1]),
        window=window,
        residual=residual,
        flags=flags,
    )


def fit_critical(profile, params=None, window=None, inverse_correction=True) -> SingularityFit:
    """Fit u against -t and -ln(1-t); returns the log-log coefficient.

    For the maximal singularity both returned slopes equal 2/b and the
    constant is the universal limit (1/b)*ln(2/(a*b)).  The optional third
    regressor 1/(1-t) models the slowest decaying perturbation mode about
    that limit; without it the constant estimate at a finite inner cutoff
    carries an O(1/(1-T0)) bias that can exceed the tolerances of interest.
    """
    t, u = _profile_tu(profile)
    if window is None:
        # deepest quarter: the log-log regressor separates from the linear
        # one only where the unmodeled corrections (boundary layer, forced
        # exponentials) are negligible, which needs a deep inner cutoff --
        # callers wanting tight constants should solve with T0 <= -24
        span = t[-1] - t[0]
        window = (float(t[0]) + 0.05 * span, float(t[0]) + 0.25 * span)
    mask = _window_mask(t, window)
    cols = [-t[mask], -np.log1p(-t[mask]), np.ones(int(mask.sum()))]
    if inverse_correction:
        cols.append(1.0 / (1.0 - t[mask]))
    X = np.column_stack(cols)
    # guard against collinearity on short windows
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise InvalidWindow(f"regressors collinear on window {window}")
    coef, residual = _ols(X, u[mask])
    return SingularityFit(
        gamma_hat=float(coef[0]),
        ell_hat=float(coef[2]),
        window=window,
        residual=residual,
        loglog_coefficient=float(coef[1]),
    )


def fit_critical_constant(profile, params, window=None) -> tuple[float, float]:
    """(ell_hat, mode_amplitude) from the lambda-variable plateau.

    Regresses the lambda-branch values against {1, 1/(1-t)} on the deep
    window; the intercept estimates the universal constant
    (1/b)*ln(2/(a*b)) with the decaying perturbation mode removed.
    """
    t = profile.t_grid
    lam = profile.w
    window = window or default_window(t)
    mask = _window_mask(t, window)
    X = np.column_stack([np.ones(int(mask.sum())), 1.0 / (1.0 - t[mask])])
    coef, _ = _ols(X, lam[mask])
    return float(coef[0]), float(coef[1])


def fit_decay(t, series, window=None, limit: float | None = None) -> tuple[float, tuple[str, ...]]:
    """Exponential rate of a decaying series: slope of ln|s - limit| vs t.

    When the series touches zero inside the window the pointwise logarithm
    is meaningless; the fit falls back to the envelope of local maxima of
    |s| and reports the 'envelope' flag.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(series, dtype=float)
    if limit is not None:
        s = s - limit
    window = window or default_window(t)
    mask = _window_mask(t, window)
    tw, sw = t[mask], np.abs(s[mask])
    flags: tuple[str, ...] = ()
    oscillatory = np.min(sw) <= 0.0 or np.min(sw) < 1e-2 * float(np.median(sw))
    if oscillatory:
        keep = np.zeros(sw.size, dtype=bool)
        keep[1:-1] = (sw[1:-1] >= sw[:-2]) & (sw[1:-1] >= sw[2:]) & (sw[1:-1] > 0.0)
        if int(keep.sum()) < 3:
            raise InvalidWindow("series vanishes on the window and has no usable envelope")
        tw, sw = tw[keep], sw[keep]
        flags = ("envelope",)
    X = np.column_stack([tw, np.ones(tw.size)])
    coef, _ = _ols(X, np.log(sw))
    return float(coef[0]), flags


def holder_exponent(profile, window=None) -> tuple[float, float]:
    """(exponent, u0) of |u(r) - u(0)| ~ r^exponent for bounded profiles.

    u(0) is Richardson-extrapolated from three points spread across the deep
    end of the window (adjacent grid points would difference below the
    solver noise floor).  Raises InvalidWindow when the extrapolation is
    degenerate.
    """
    t, u = _profile_tu(profile)
    window = window or (float(t[0]) + 0.05 * (t[-1] - t[0]), float(t[0]) + (t[-1] - t[0]) / 3.0)
    mask = _window_mask(t, window)
    tw, uw = t[mask], u[mask]
    spread = min(1.0, (tw[-1] - tw[0]) / 2.0)
    anchors = [float(tw[0]), float(tw[0]) + 0.5 * spread, float(tw[0]) + spread]
    vals = np.interp(anchors, tw, uw)
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    if abs(d2 - d1) < 1e-14 * max(1.0, abs(vals[0])):
        raise InvalidWindow("u(0) extrapolation unstable: vanishing second difference")
    u0 = vals[2] - d2 * d2 / (d2 - d1)
    dev = np.abs(uw - u0)
    good = dev > 0.0
    if int(good.sum()) < 3:
        raise InvalidWindow("profile indistinguishable from its limit on the window")
    X = np.column_stack([tw[good], np.ones(int(good.sum()))])
    coef, _ = _ols(X, np.log(dev[good]))
    return float(coef[0]), float(u0)
