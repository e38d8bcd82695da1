"""Exception types shared across the package."""


class WclimitError(Exception):
    """Base class for all package errors."""


class CapacityError(WclimitError):
    """An enumeration was asked to go beyond its configured cap."""


class DomainError(WclimitError):
    """Arguments fall outside the range where a routine is exact."""


class ModelError(WclimitError):
    """A model (Gram matrix, kernel, system) is malformed."""


class ValidationError(ModelError):
    """A configuration field failed validation.

    ``field`` names the offending entry so the CLI can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DivergenceError(WclimitError):
    """The contraction condition K*||E11|| < 1 does not hold."""


class IntegrationError(WclimitError):
    """A quadrature failed to reach its tolerance."""


class PrecisionError(WclimitError):
    """A truncated representation cannot deliver the requested accuracy."""


class InstabilityError(WclimitError):
    """The time stepper drifted too far from unitarity."""


class ConsistencyError(WclimitError):
    """A computed value broke a bound it must satisfy."""
