"""Exception hierarchy shared by every module.

Each class carries an ``exit_code`` used by the command line front end.
"""


class StabilizationError(Exception):
    exit_code = 4


class ConfigError(StabilizationError, ValueError):
    exit_code = 5


class ParseError(StabilizationError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


# geometry / Lie algebra
class NonPositiveDeterminant(StabilizationError, ValueError):
    exit_code = 2


class LogDomain(StabilizationError, ValueError):
    exit_code = 2

    def __init__(self, message, frame=None):
        if frame is not None:
            message = f"frame {frame}: {message}"
        super().__init__(message)
        self.frame = frame


class PointAtInfinity(StabilizationError, ValueError):
    pass


class NegativeArea(StabilizationError, ValueError):
    pass


class DegenerateEdge(StabilizationError, ValueError):
    pass


# paths and problem assembly
class LengthMismatch(StabilizationError, ValueError):
    pass


class InvalidFraction(ConfigError):
    pass


class BadWindowParams(ConfigError):
    pass


class InfeasibleSaliency(StabilizationError):
    exit_code = 3


class WindowInfeasible(StabilizationError):
    exit_code = 3


class NotOptimal(StabilizationError):
    """Raised when a plan is requested from a non-optimal solver result."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status
        if status == "infeasible":
            self.exit_code = 3
