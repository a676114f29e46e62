"""Exception hierarchy for the residual-bound certifier."""

from typing import Any, Dict, Optional


class CertifyError(Exception):
    """Base class for every error raised by the certifier."""


class InvalidGeometryError(CertifyError, ValueError):
    """Polygon, triangle or embedding violates its geometric invariants."""


class ParameterDomainError(CertifyError, ValueError):
    """An argument lies outside the range an operation is defined on."""


class NotCoerciveError(CertifyError, ValueError):
    """Coefficients do not define a coercive bilinear form."""


class ConfigurationError(CertifyError, ValueError):
    """Run configuration or environment is invalid."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WeightsLoadError(CertifyError, ValueError):
    """An MLP weight file could not be loaded."""

    def __init__(self, message: str, layer: Optional[int] = None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


class ConditioningError(CertifyError, ArithmeticError):
    """A linear system could not be factorized or solved reliably."""

    def __init__(self, message: str, smallest_pivot: Optional[float] = None):
        self.smallest_pivot = smallest_pivot
        if smallest_pivot is not None:
            message = f"{message} (smallest pivot {smallest_pivot:.3e})"
        super().__init__(message)


class NumericalError(CertifyError, ArithmeticError):
    """A computed quantity is non-finite or violates a bound invariant."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = dict(diagnostics or {})
        if self.diagnostics:
            details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
            message = f"{message} [{details}]"
        super().__init__(message)
