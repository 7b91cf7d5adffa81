"""Exception types raised across the simulator."""


class SpinDDError(Exception):
    """Base class for all simulator errors."""


class GeometryError(SpinDDError):
    pass


class ShapeError(SpinDDError, ValueError):
    pass


class DataError(SpinDDError, ValueError):
    pass


class StabilityError(SpinDDError):
    pass


class ConvergenceError(SpinDDError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class AccuracyError(SpinDDError):
    pass


class ParseError(SpinDDError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ConfigError(SpinDDError, ValueError):
    def __init__(self, field, message=""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field


class IoError(SpinDDError, OSError):
    pass
