"""Exception hierarchy shared by all memsplit modules."""


class MemsplitError(Exception):
    """Base class for every error raised by this package."""


class InvalidGridError(MemsplitError, ValueError):
    pass


class InvalidWindowError(MemsplitError, ValueError):
    pass


class IncompatibleSignalsError(MemsplitError, ValueError):
    pass


class SpectrumSymmetryError(MemsplitError, ValueError):
    pass


class InvalidStepError(MemsplitError, ValueError):
    pass


class InvalidTimescaleError(MemsplitError, ValueError):
    pass


class OracleSizeError(MemsplitError, ValueError):
    pass


class ModelError(MemsplitError, ValueError):
    """Malformed network: dangling neuron ids, bad parameters."""


class DivergenceError(MemsplitError, RuntimeError):
    """An iteration or integration produced non-finite or runaway values.

    ``where`` holds the iteration index (solver) or the time stamp in ms
    (integrator) at which the blow-up was detected.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class ConfigError(MemsplitError, ValueError):
    """Scenario file could not be parsed or failed schema validation."""

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
