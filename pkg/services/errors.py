class MacdonaldKitError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(MacdonaldKitError, ValueError):
    """An argument violates the precondition of the called operation."""


class PoleError(DomainError):
    pass


class SignedZeroError(DomainError):
    """G_mu vanishes (or nearly so) at the requested point."""


class ZeroDenominatorError(DomainError):
    pass


class QuadratureError(MacdonaldKitError, RuntimeError):
    """Adaptive integration failed to converge or met a NaN."""


class CrossValidationError(MacdonaldKitError, RuntimeError):
    """Two independent computations of the same quantity disagree."""


class BudgetError(MacdonaldKitError, RuntimeError):
    pass
