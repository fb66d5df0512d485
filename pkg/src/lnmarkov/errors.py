"""Exception types shared across the package."""


class ModelError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ModelError, ValueError):
    """Malformed or out-of-range construction input."""


class NegativeForwardError(ModelError, ValueError):
    """Input curve implies a non-positive forward Libor."""


class DomainError(ModelError, ValueError):
    """Arguments outside the defined index or parameter domain."""


class UnsupportedInputError(ModelError, ValueError):
    """Operation is only defined for a restricted input class."""


class InsufficientDataError(ModelError, ValueError):
    """Not enough data points for the requested estimate."""


class NumericFailureError(ModelError, RuntimeError):
    """An iterative numerical procedure failed to converge."""


class NotBracketedError(ModelError, RuntimeError):
    """The supplied interval does not straddle a sign change."""


class DivergenceError(ModelError, ArithmeticError):
    """Evaluation requested at a singular point."""
