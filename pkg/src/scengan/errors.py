"""Exception hierarchy shared by all scengan modules."""


class ScenGanError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(ScenGanError, ValueError):
    """Invalid layer/model/run configuration (bad shapes, bad hyperparameters)."""


class DegenerateBatchError(ConfigurationError):
    """Batch statistics requested on a batch too small to define them."""


class DataError(ScenGanError, ValueError):
    """Malformed or inconsistent input data (CSV defects, bad labels)."""


class StateError(ScenGanError, RuntimeError):
    """Operation invoked in the wrong order (backward before forward, missing grads)."""


class FormatError(ScenGanError, ValueError):
    """Corrupt, truncated or incompatible checkpoint file."""


class NumericError(ScenGanError, ArithmeticError):
    """Non-finite value produced where finiteness is a contract.

    Training aborts carry the partial trace in ``trace`` for diagnosis.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UndefinedStatisticError(ScenGanError, ValueError):
    """A statistic is undefined for this input (e.g. ACF of a constant series)."""
