"""Exception hierarchy shared by every sobolsa module."""


class SensitivityError(Exception):
    """Base class for all errors raised by sobolsa."""


class DesignError(SensitivityError, ValueError):
    """A sampling design is malformed or lacks a required block."""


class UnsupportedDimensionError(DesignError):
    pass


class EmptyDesignError(DesignError):
    pass


class ResolutionError(DesignError):
    """The VARS grid step does not divide the unit interval."""


class CombinationError(DesignError):
    """The first/total estimator pair is not supported by the block set."""


class ConstantOutputError(SensitivityError, ValueError):
    """Output variance is zero, so normalized indices are undefined."""


class AlignmentError(SensitivityError, ValueError):
    """Model outputs do not line up with the rows of the design."""


class InvalidOutputError(SensitivityError, ValueError):
    """Model outputs contain NaN or other non-finite values."""

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)


class InsufficientReplicatesError(SensitivityError, ValueError):
    pass


class DomainError(SensitivityError, ValueError):
    pass


class DivergenceError(SensitivityError, ArithmeticError):
    """An ODE trajectory produced a non-finite state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InfiniteQuantileError(DomainError):
    pass


class NoOracleError(SensitivityError, KeyError):
    pass


class ConfigError(SensitivityError, ValueError):
    pass


class ModelError(SensitivityError, RuntimeError):
    """An external or builtin model failed to produce outputs."""


class EmptyLagError(DesignError):
    """A cross-section has too few points for the requested lag."""
