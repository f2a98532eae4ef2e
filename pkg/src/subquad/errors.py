"""Exception types shared across the package."""


class SubquadError(Exception):
    """Base class for package-specific failures."""


class RankDeficientError(SubquadError):
    """The (sketched) system matrix lost column rank."""


class NoConvergenceError(SubquadError):
    """Iteration cap reached before the residual target; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularGramError(SubquadError):
    """Direct Gram solve failed or left an unacceptable residual."""


class NonPositiveLambdaError(SubquadError):
    """Kernel eigenvalue estimate is not usable as a positive lower bound."""
