"""Problem coefficients and regime classification.

The model operator on the punctured unit disk of the plane is

    E(u) = -lap(u) + a*exp(b*u) - m*|grad(u)|^q,    m, a, b > 0,  q > 1,

with the gradient exponent q splitting the analysis into a subcritical
regime (1 < q < 2, absorption-dominated singularities) and a supercritical
regime (q > 2, eikonal-dominated singularities).  q = 2 is rejected
everywhere: it transforms into a power-absorption problem of a different
nature and is out of scope.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import CriticalExponentUnsupported, InvalidParameter, PreconditionViolation

#: Tolerance used when deciding whether a*b == 2 (the parameter slice on
#: which the critical pure-absorption profile is exact).
AB_CRITICAL_TOL = 1e-12


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"  # 1 < q < 2
    SUPERCRITICAL = "supercritical"  # q > 2


def classify_regime(q: float) -> Regime:
    """Classify the gradient exponent.

    Raises InvalidParameter for q <= 1 and CriticalExponentUnsupported for
    q == 2 (unsupported borderline case).
    """
    if not math.isfinite(q):
        raise InvalidParameter(f"q must be finite, got {q!r}")
    if q <= 1.0:
        raise InvalidParameter(f"q must exceed 1, got {q}")
    if q == 2.0:
        raise CriticalExponentUnsupported("the critical exponent q = 2 is not supported")
    return Regime.SUBCRITICAL if q < 2.0 else Regime.SUPERCRITICAL


@dataclass(frozen=True)
class ProblemParams:
    """Coefficient tuple (m, a, b, q) plus an optional singularity strength.

    ``gamma`` is the prescribed coefficient of ln(1/|x|) in the singular
    expansion.  For 1 < q < 2 it must lie in [0, 2/b]; solvers for the
    supercritical regime ignore it (the singular slope there is forced
    to q/b).
    """

    m: float
    a: float
    b: float
    q: float
    gamma: float | None = None

    def __post_init__(self):
        for name in ("m", "a", "b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidParameter(f"{name} must be a positive real, got {value!r}")
        classify_regime(self.q)  # raises for q <= 1 and q == 2
        if self.gamma is not None:
            if not math.isfinite(self.gamma) or self.gamma < 0.0:
                raise InvalidParameter(f"gamma must be nonnegative, got {self.gamma!r}")
            if self.q < 2.0 and self.gamma > self.two_over_b + 1e-15:
                raise InvalidParameter(
                    f"gamma = {self.gamma} exceeds the admissible ceiling 2/b = {self.two_over_b}"
                )

    @property
    def regime(self) -> Regime:
        return classify_regime(self.q)

    @property
    def two_over_b(self) -> float:
        """Maximal singularity strength in the subcritical regime."""
        return 2.0 / self.b

    @property
    def q_over_b(self) -> float:
        """Forced singularity strength of supercritical singular solutions."""
        return self.q / self.b

    @property
    def ab_critical(self) -> bool:
        """True when a*b == 2, the slice with an exact critical profile."""
        return abs(self.a * self.b - 2.0) <= AB_CRITICAL_TOL

    @property
    def critical_additive_constant(self) -> float:
        """Limit constant (1/b)*ln(2/(a*b)) of the critical-branch profile."""
        return math.log(2.0 / (self.a * self.b)) / self.b

    @property
    def eikonal_amplitude(self) -> float:
        """Prefactor q*m^(1/q) / (b*a^(1/q)) of the singular eikonal profile."""
        return self.q * self.m ** (1.0 / self.q) / (self.b * self.a ** (1.0 / self.q))

    def with_gamma(self, gamma: float | None) -> "ProblemParams":
        return ProblemParams(self.m, self.a, self.b, self.q, gamma)

    def require_subcritical(self):
        if self.regime is not Regime.SUBCRITICAL:
            raise PreconditionViolation(f"operation requires 1 < q < 2, got q = {self.q}")

    def require_supercritical(self):
        if self.regime is not Regime.SUPERCRITICAL:
            raise PreconditionViolation(f"operation requires q > 2, got q = {self.q}")
