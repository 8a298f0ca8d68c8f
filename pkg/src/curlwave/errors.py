"""Exception types raised across the package."""


class CurlWaveError(Exception):
    """Base class for all package errors."""


class DomainError(CurlWaveError, ValueError):
    """An argument lies outside the admissible range of an operation."""


class NonConvergence(CurlWaveError, RuntimeError):
    """The ODE step-size controller gave up (usually: tolerance too tight)."""


class QuadratureFailure(CurlWaveError, RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


class SingularPoint(CurlWaveError, ValueError):
    """Evaluation requested on the singular set of a geometry."""


class MissingLimit(CurlWaveError, ValueError):
    """A construction needs sigma_inf / tau_inf but none was supplied."""


class GrowthError(CurlWaveError, ValueError):
    """A phase-shift function grows faster than linearly on the sample."""


class ExpressionError(CurlWaveError, ValueError):
    """Malformed profile expression."""


class ParseError(CurlWaveError, ValueError):
    """Config file is not valid JSON."""

    def __init__(self, msg, line=None, column=None):
        super().__init__(msg if line is None else f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class ValidationError(CurlWaveError, ValueError):
    """Config content is invalid; ``key`` names the offending entry."""

    def __init__(self, key, msg):
        super().__init__(f"{key}: {msg}")
        self.key = key


class IoError(CurlWaveError, OSError):
    """An output file could not be written or an input file read."""
