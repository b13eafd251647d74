"""
Exception hierarchy for comet-dse.

Every exception carries the process exit code the CLI maps it to:
0 success, 1 unexpected, 2 configuration/argument errors, 3 solver failures,
4 incomplete sweeps.
"""

from __future__ import annotations


class CometError(Exception):
    """Base class for all comet-dse errors."""

    exit_code: int = 1


class ConfigError(CometError, ValueError):
    """Configuration could not be turned into validated records."""

    exit_code = 2


class ConfigParseError(ConfigError):
    """Structured text is not well formed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class UnknownKeyError(ConfigError):
    """A config or override key does not resolve to a schema path."""

    def __init__(self, path: str, suggestion: str | None = None):
        self.path = path
        self.suggestion = suggestion
        message = f"Unknown configuration key '{path}'"
        if suggestion:
            message += f"; did you mean '{suggestion}'?"
        super().__init__(message)


class UnitMismatchError(ConfigError):
    """A value carries a unit of the wrong dimension."""


class UnsupportedPresetError(ConfigError):
    """Requested technology node has no preset."""


class InvalidArgumentError(CometError, ValueError):
    """Invalid argument, geometry or material value."""

    exit_code = 2


class SolverError(CometError, RuntimeError):
    """A numerical solver could not complete."""

    exit_code = 3


class NumericFailureError(SolverError):
    """State or field became non-finite."""


class TimestepTooLargeError(SolverError):
    """Explicit integrator step exceeds its stability bound."""

    def __init__(self, message: str, dt: float, bound: float):
        self.dt = dt
        self.bound = bound
        super().__init__(message)


class WidthSolveError(SolverError):
    """Implicit wall-width equation has no root in the search bracket."""


class PropagationStallError(SolverError):
    """Domain wall did not reach the target distance within the horizon."""


class IncompleteSweepError(CometError):
    """Sweep results lack what the requested output needs."""

    exit_code = 4
