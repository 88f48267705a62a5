"""Exception hierarchy shared by all modules.

The CLI maps :class:`ConfigError` subclasses to exit code 2 and
:class:`NumericalError` subclasses to exit code 3.
"""


class SelfSimError(Exception):
    """Base class for all package errors."""


class DomainError(SelfSimError, ValueError):
    """Argument outside the mathematical domain (negative time, H out of range, ...)."""


class NumericalError(SelfSimError, ArithmeticError):
    """A numerical routine could not deliver a trustworthy result."""


class EmbeddingFailure(NumericalError):
    """Circulant embedding produced eigenvalues below the clipping threshold."""


class NotPSD(NumericalError):
    """Covariance matrix is not positive semi-definite even after jitter."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, value: float = float("nan"), error: float = float("nan")):
        super().__init__(f"{message} (value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


class ResolutionError(SelfSimError, ValueError):
    """Kernel bandwidth too small for the grid resolution."""


class RegimeError(SelfSimError, ValueError):
    """Parameters fall outside the regime of the requested statistic."""


class HypothesisError(SelfSimError, ValueError):
    """A structural hypothesis of a formula is violated."""


class IntegrabilityError(HypothesisError):
    """The defining integral of a constant diverges for these parameters."""


class ZeroForm(SelfSimError, ValueError):
    """Quadratic form is identically zero, so a ratio is undefined."""


class EmptySample(SelfSimError, ValueError):
    """A statistical routine received an empty sample."""


class ConfigError(SelfSimError, ValueError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed configuration text."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class ValidationError(ConfigError):
    """Well-formed configuration that violates a hypothesis or constraint."""
