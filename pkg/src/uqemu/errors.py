"""Exception hierarchy shared by every module of the package."""


class EmulatorError(Exception):
    """Base class for all errors raised by :mod:`uqemu`."""


class DimensionError(EmulatorError, ValueError):
    """Array shapes or subsystem dimensions are inconsistent."""


class DomainError(EmulatorError, ValueError):
    """An argument lies outside the mathematical domain of an operation
    (non-Hermitian, non-PSD, non-unitary, non-positive dimension, ...)."""


class PreconditionError(EmulatorError, ValueError):
    """A structural precondition of an algorithm is violated."""


class GenerationError(EmulatorError, RuntimeError):
    """Random instance generation exhausted its retry budget."""


class GapCollapseError(EmulatorError, ValueError):
    """The spectral gap of the sampling channel vanished."""


class ResourceError(EmulatorError, RuntimeError):
    """An exact computation would exceed its enumeration budget."""


class PostselectionError(EmulatorError, ValueError):
    """Postselection on an outcome with (numerically) zero probability."""


class ConfigError(EmulatorError, ValueError):
    """An experiment configuration could not be parsed or validated."""
