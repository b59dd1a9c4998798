"""Log-variable coordinate transforms between u(r) and branch variables w(t).

All solvers work on the half-line t = ln r <= 0, where each analysis branch
subtracts the expected logarithmic growth so the unknown stays bounded:

    noshift          w(t) = u(r)
    shift_gamma(g)   w(t) = u(r) - g*ln(1/r) = u + g*t
    two_over_b       shift_gamma with g = 2/b
    q_over_b         shift_gamma with g = q/b
    lambda_critical  w(t) = u + (2/b)*t + (2/b)*ln(1 - t)

The last one additionally removes the log-log correction of the maximal
subcritical singularity, so the transformed unknown tends to the finite
constant (1/b)*ln(2/(a*b)).

Derivatives transform as u_t = r*u_r, w_t = u_t + shift_rate(t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .params import ProblemParams, Regime


@dataclass(frozen=True)
class Branch:
    kind: str  # one of {"noshift", "gamma", "two_over_b", "q_over_b", "lambda_critical"}
    gamma: float | None = None

    KINDS = ("noshift", "gamma", "two_over_b", "q_over_b", "lambda_critical")

    def __post_init__(self):
        if self.kind not in Branch.KINDS:
            raise InvalidInput(f"unknown branch kind {self.kind!r}")
        if self.kind == "gamma" and self.gamma is None:
            raise InvalidInput("gamma branch needs an explicit strength")
        if self.kind != "gamma" and self.gamma is not None:
            raise InvalidInput(f"branch {self.kind!r} does not take a strength")

    @staticmethod
    def noshift() -> "Branch":
        return Branch("noshift")

    @staticmethod
    def shift_gamma(gamma: float) -> "Branch":
        return Branch("gamma", float(gamma))

    @staticmethod
    def two_over_b() -> "Branch":
        return Branch("two_over_b")

    @staticmethod
    def q_over_b() -> "Branch":
        return Branch("q_over_b")

    @staticmethod
    def lambda_critical() -> "Branch":
        return Branch("lambda_critical")

    def shift(self, params: ProblemParams) -> float:
        """Logarithmic slope removed by this branch."""
        if self.kind == "noshift":
            return 0.0
        if self.kind == "gamma":
            return float(self.gamma)
        if self.kind == "two_over_b":
            return params.two_over_b
        if self.kind == "q_over_b":
            return params.q_over_b
        return params.two_over_b  # lambda_critical

    def label(self) -> str:
        if self.kind == "gamma":
            return f"gamma({self.gamma:g})"
        return self.kind


def validate_branch(params: ProblemParams, branch: Branch):
    """Reject branch/parameter combinations that make no sense together."""
    if branch.kind == "lambda_critical":
        if params.gamma is not None and abs(params.gamma - params.two_over_b) > 1e-12:
            raise InvalidInput(
                "lambda_critical branch requires gamma = 2/b, "
                f"got gamma = {params.gamma} with 2/b = {params.two_over_b}"
            )
    if branch.kind == "gamma":
        g = float(branch.gamma)
        if g < 0.0:
            raise InvalidInput(f"negative shift strength {g}")
        if params.regime is Regime.SUBCRITICAL and g > params.two_over_b + 1e-12:
            raise InvalidInput(
                f"shift strength {g} exceeds 2/b = {params.two_over_b} in the subcritical regime"
            )
    if branch.kind == "q_over_b" and params.regime is not Regime.SUPERCRITICAL:
        raise InvalidInput("q_over_b branch requires the supercritical regime")


def _loglog(t):
    return np.log1p(-np.asarray(t, dtype=float))  # ln(1 - t), exact near t = 0


def to_branch(params: ProblemParams, branch: Branch, t, u, u_t=None):
    """Map (u, u_t) sampled on the log grid t into the branch variable.

    Returns w, or (w, w_t) when derivative data is supplied.
    """
    validate_branch(params, branch)
    t = np.asarray(t, dtype=float)
    g = branch.shift(params)
    w = np.asarray(u, dtype=float) + g * t
    if branch.kind == "lambda_critical":
        w = w + params.two_over_b * _loglog(t)
    if u_t is None:
        return w
    w_t = np.asarray(u_t, dtype=float) + g
    if branch.kind == "lambda_critical":
        w_t = w_t - params.two_over_b / (1.0 - t)
    return w, w_t


def from_branch(params: ProblemParams, branch: Branch, t, w, w_t=None):
    """Inverse of :func:`to_branch`; round-trips to machine precision."""
    validate_branch(params, branch)
    t = np.asarray(t, dtype=float)
    g = branch.shift(params)
    u = np.asarray(w, dtype=float) - g * t
    if branch.kind == "lambda_critical":
        u = u - params.two_over_b * _loglog(t)
    if w_t is None:
        return u
    u_t = np.asarray(w_t, dtype=float) - g
    if branch.kind == "lambda_critical":
        u_t = u_t + params.two_over_b / (1.0 - t)
    return u, u_t


def radial_derivative(t, u_t):
    """Convert the log-variable derivative u_t = r*u_r back to u_r."""
    return np.asarray(u_t, dtype=float) * np.exp(-np.asarray(t, dtype=float))
