"""Exception types shared across the package."""


class DSWError(Exception):
    """Base class for all package errors."""


class DomainError(DSWError, ValueError):
    """An argument lies outside the admissible parameter or value range."""


class GeometryError(DSWError, ValueError):
    """A cylinder does not fit inside the space-time domain."""


class QuadratureError(DSWError):
    """Stored time slices are too coarse to resolve a cylinder."""


class ConvergenceError(DSWError, RuntimeError):
    """A nonlinear iteration did not reach its tolerance."""


class CalibrationError(DSWError, RuntimeError):
    """The certificate constant search hit its cap."""


class ParseError(DSWError, ValueError):
    """A configuration or data file is malformed."""


class ValidationError(DSWError, ValueError):
    """A configuration parsed but violates model invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
