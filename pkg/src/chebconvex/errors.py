"""Exception and warning types raised by chebconvex."""


class ChebConvexError(Exception):
    """Base class for all library errors."""


class SpecError(ChebConvexError, ValueError):
    """A system, function or run specification is malformed."""


class DomainTooLongError(ChebConvexError, ValueError):
    pass


class DomainNotPositiveError(ChebConvexError, ValueError):
    pass


class NotStrictlyOrderedError(ChebConvexError, ValueError):
    pass


class OutOfDomainError(ChebConvexError, ValueError):
    pass


class ConfigurationLengthError(ChebConvexError, ValueError):
    pass


class OffGridError(ChebConvexError, KeyError):
    """A tabulated function or system was evaluated away from its table."""

    def __str__(self):
        return Exception.__str__(self)


class InexactArithmeticError(ChebConvexError, TypeError):
    """Exact rational evaluation was requested for a transcendental function."""


class DenominatorNotPositiveError(ChebConvexError, ArithmeticError):
    """The extended system determinant was not positive at a configuration."""


class InconsistentOracleError(ChebConvexError, ArithmeticError):
    """Two independent computations of the same certificate disagree."""


class GridTooSmallError(ChebConvexError, ValueError):
    pass


class StepExceedsDomainError(ChebConvexError, ValueError):
    pass


class FactorialBlowupError(ChebConvexError, ValueError):
    pass


class NoAdmissibleConfigurationError(ChebConvexError, ValueError):
    pass


class TableFunctionRejectedError(ChebConvexError, TypeError):
    """Limit-based estimators need functions evaluable at arbitrary points."""


class IllConditionedWarning(UserWarning):
    """A determinant was evaluated on a badly conditioned collocation matrix."""
