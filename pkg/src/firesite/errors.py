"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2,
InfeasibleResultError -> 3, GuardExceededError -> 4.
"""


class ValidationError(ValueError):
    """Bad input data or configuration."""


class ConfigurationError(ValidationError):
    """A requested mode needs configuration that was not supplied."""


class NoNeighborError(ValueError):
    """A nearest-station query had no other station to compare against."""


class InfeasibleResultError(RuntimeError):
    """A solver finished without finding any feasible plan."""


class CalibrationError(RuntimeError):
    """Workload calibration produced no usable runs."""


class GuardExceededError(RuntimeError):
    """An exact-enumeration oracle refused an instance above its size guard."""
