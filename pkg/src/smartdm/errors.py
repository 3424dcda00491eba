"""Exception hierarchy shared by every smartdm module."""


class SmartDMError(Exception):
    """Base class for all errors raised by smartdm."""


class InvalidInput(SmartDMError, ValueError):
    """Malformed or inconsistent user input."""


class DimensionMismatch(InvalidInput):
    pass


class InconsistentDimensions(DimensionMismatch):
    pass


class NonPositiveDof(InvalidInput):
    pass


class BadLengths(InvalidInput):
    pass


class BadRanges(InvalidInput):
    pass


class ShiftExceedsLength(InvalidInput):
    pass


class UnknownExample(InvalidInput):
    pass


class SingularDesign(SmartDMError, ValueError):
    """A design matrix is (numerically) rank deficient."""


class SingularConstraint(SmartDMError, ValueError):
    """``A^T A`` or ``C C^T`` is singular."""


class ZeroResidualVariance(SmartDMError, ValueError):
    pass


class ZeroGaussMarkovVariance(SmartDMError, ValueError):
    pass


class ZeroSignal(SmartDMError, ValueError):
    pass


class ZeroSignalSum(ZeroSignal):
    pass


class InfeasibleStart(SmartDMError, ValueError):
    pass


class SolverFailure(SmartDMError, RuntimeError):
    """A numerical solver could not produce a result.

    ``result`` carries the last usable state when one exists.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InnerSolveFailure(SolverFailure):
    pass


class MaxOuterIterations(SolverFailure):
    pass


class CallbackFailure(SolverFailure):
    pass


class AllRunsFailed(SolverFailure):
    pass


class SingularReducedSystem(SolverFailure):
    pass
