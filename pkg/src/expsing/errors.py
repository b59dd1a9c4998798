"""Exception hierarchy shared by all solver and verification modules."""


class ExpSingError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(ExpSingError):
    """A coefficient violates its admissible range (m, a, b > 0, q > 1)."""


class CriticalExponentUnsupported(ExpSingError):
    """The gradient exponent q = 2 is outside the scope of this laboratory."""


class PreconditionViolation(ExpSingError):
    """An operation was called outside its stated domain of validity."""


class InvalidRadius(ExpSingError):
    """A radius argument lies outside the admissible interval."""


class InvalidInput(ExpSingError):
    """Structurally invalid input (mismatched grids, bad branch, bad table)."""


class InvalidWindow(ExpSingError):
    """A fit window is too short, collinear, or numerically unusable."""


class NumericalFault(ExpSingError):
    """Non-finite values were produced or supplied where finite ones are required."""


class NoConvergence(ExpSingError):
    """Damped Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BranchCollapse(ExpSingError):
    """A solve targeting the singular branch converged to the regular one."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


class FiniteTimeBlowup(ExpSingError):
    """An initial value integration blew up before reaching the requested end.

    Carries the last time (in the log variable) at which the state was finite.
    """

    def __init__(self, message, t_last, state_last=None):
        super().__init__(message)
        self.t_last = t_last
        self.state_last = state_last  # (w, w_t) at the last finite sample


class StiffnessFault(ExpSingError):
    """Adaptive integration underflowed its step size without blowing up."""

    def __init__(self, message, t_last=None):
        super().__init__(message)
        self.t_last = t_last


class UnreliableTail(ExpSingError):
    """Tail extrapolation of an integrand could not be trusted.

    ``partial`` holds the quadrature over the resolved window only.
    """

    def __init__(self, message, partial=None, detail=None):
        super().__init__(message)
        self.partial = partial
        self.detail = detail
