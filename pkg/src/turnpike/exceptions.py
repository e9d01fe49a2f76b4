"""Exception types raised by the turnpike package.

Everything derives from TurnpikeError so callers can catch the whole
family at once.  Solver blow-ups carry diagnostics because a divergent
sweep is usually a *result* (the problem has no turnpike), not a bug.
"""


class TurnpikeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(TurnpikeError):
    """Matrix or vector dimensions are inconsistent."""


class NotStabilizableError(TurnpikeError):
    """(A, B) fails the stabilizability precondition of a solver."""


class NotControllableError(TurnpikeError):
    """(A, B) fails the controllability precondition of a solver."""


class DegenerateRiccatiError(TurnpikeError):
    """The selected Hamiltonian invariant subspace is not a graph.

    The subspace [X1; X2] has singular X1, so no Riccati solution can be
    recovered from it.  We report rather than regularize.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class HypothesisError(TurnpikeError):
    """A structural hypothesis of the analysis is violated.

    Carries the name of the offending subspace or condition.
    """


class BlowUpError(TurnpikeError):
    """An integration sweep exceeded the overflow guard.

    Attributes
    ----------
    node : int
        Grid index where the guard tripped.
    channel : str
        Which sweep diverged ("riccati", "state", "adjoint").
    growth_rate : float or None
        Largest real part over the spectrum of A, the usual culprit.
    """

    def __init__(self, message, node=None, channel=None, growth_rate=None):
        super().__init__(message)
        self.node = node
        self.channel = channel
        self.growth_rate = growth_rate


class ConditioningError(TurnpikeError):
    """A linear solve is too ill-conditioned to trust.

    Attributes
    ----------
    cond : float
        Estimated condition number that tripped the threshold.
    """

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class NonConvergenceError(TurnpikeError):
    """Iterative method exhausted its budget.

    Attributes
    ----------
    gradient_norm : float or None
        Final gradient norm for CG-type methods.
    iterations : int or None
    """

    def __init__(self, message, gradient_norm=None, iterations=None):
        super().__init__(message)
        self.gradient_norm = gradient_norm
        self.iterations = iterations


class FitUndefinedError(TurnpikeError):
    """A regression was requested on data that cannot support it."""


class NotASolutionError(TurnpikeError):
    """A time series handed to an analysis routine does not solve the
    ODE it claims to solve (defect above tolerance)."""


class ConfigError(TurnpikeError):
    """Malformed configuration document.

    Attributes
    ----------
    field : str or None
        Offending field, when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
