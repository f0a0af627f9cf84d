"""Exception hierarchy shared by all modules."""


class PxKirchhoffError(Exception):
    """Base class for every error raised by this package."""


class NonAdmissibleExponent(PxKirchhoffError, ValueError):
    pass


class ContinuityViolation(PxKirchhoffError, ValueError):
    pass


class ExponentOutOfRange(PxKirchhoffError, ValueError):
    pass


class GridMismatch(PxKirchhoffError, ValueError):
    pass


class BadGridSpec(PxKirchhoffError, ValueError):
    pass


class NonConvergence(PxKirchhoffError, RuntimeError):
    pass


class NoAdmissibleRho(PxKirchhoffError, RuntimeError):
    pass


class NoDescentFound(PxKirchhoffError, RuntimeError):
    pass


class PositivityNotFound(PxKirchhoffError, RuntimeError):
    pass


class NotApplicable(PxKirchhoffError, ValueError):
    pass


class IterationLimit(PxKirchhoffError, RuntimeError):
    """Solver ran out of iterations; ``best`` and ``report`` hold the last state."""

    def __init__(self, message, best=None, report=None, history=None):
        super().__init__(message)
        self.best = best
        self.report = report
        self.history = history


class CapExceeded(PxKirchhoffError, RuntimeError):
    pass


class BoundaryTrap(PxKirchhoffError, RuntimeError):
    def __init__(self, message, best=None, report=None):
        super().__init__(message)
        self.best = best
        self.report = report


class CertificationFailed(PxKirchhoffError, RuntimeError):
    """Pipeline refused to certify; ``clause`` names the violated condition."""

    def __init__(self, clause, message=""):
        super().__init__(f"{clause}: {message}" if message else clause)
        self.clause = clause


class ParseError(PxKirchhoffError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ValidationError(PxKirchhoffError, ValueError):
    pass
