"""Numerical laboratory for isolated singularities of the planar equation

    -lap(u) + a*exp(b*u) = m*|grad(u)|^q

on the punctured unit disk: closed-form oracles, radial and 2-d solvers in
the log variable, asymptotic fits, and oracle-grade verification.
"""

__version__ = "0.1.0"

from .params import ProblemParams, Regime, classify_regime  # noqa: F401
from .transforms import Branch  # noqa: F401
from .radial import RadialProfile, SolverConfig  # noqa: F401
