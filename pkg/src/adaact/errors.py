"""Exception types raised across the package.

Every error derives from :class:`AdaActError` so callers (the CLI in
particular) can map whole families onto exit codes.
"""


class AdaActError(Exception):
    """Base class for all package errors."""


class DimensionError(AdaActError, ValueError):
    pass


class NumericDomainError(AdaActError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EmptyReductionError(AdaActError, ValueError):
    pass


class GeometryError(AdaActError, ValueError):
    pass


class CacheError(AdaActError, RuntimeError):
    pass


class LabelError(AdaActError, ValueError):
    pass


class NumericError(AdaActError, ArithmeticError):
    """Non-finite values reached an optimizer."""


class ScheduleRangeError(AdaActError, ValueError):
    pass


class FormatError(AdaActError, ValueError):
    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class ParameterError(AdaActError, ValueError):
    pass


class StateError(AdaActError, RuntimeError):
    pass


class SyncError(AdaActError, RuntimeError):
    pass


class ConfigError(AdaActError, ValueError):
    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line


class DivergenceError(AdaActError, ArithmeticError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateVarianceError(AdaActError, ValueError):
    pass
