"""Exception hierarchy shared by all modules."""


class PhiBVPError(Exception):
    """Base class for every error raised by the package."""


class InputError(PhiBVPError, ValueError):
    pass


class EvaluationError(PhiBVPError, ArithmeticError):
    pass


class InversionError(PhiBVPError):
    """Raised when phi^{-1} cannot be computed (no bracket for the scalar root)."""


class BoundarySamplingError(PhiBVPError):
    pass


class GradientVanishedError(PhiBVPError):
    pass


class NotOuterNormalError(PhiBVPError):
    pass


class SamplingError(PhiBVPError):
    pass


class AdmissibilityError(PhiBVPError):
    """The field vanishes (numerically) on the boundary where a degree is requested."""


class DomainError(PhiBVPError, ValueError):
    pass


class NoConvergence(PhiBVPError):
    def __init__(self, message, residual_norm=None, rcond=None, iterations=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.rcond = rcond
        self.iterations = iterations


class ContinuationStalled(PhiBVPError):
    def __init__(self, message, last_lambda, trace=None):
        super().__init__(message)
        self.last_lambda = last_lambda
        self.trace = trace if trace is not None else []


class BuildError(PhiBVPError):
    pass


class BuildWarning(UserWarning):
    pass
