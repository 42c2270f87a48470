"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, shape or argument."""


class NumericalError(ArithmeticError):
    """A NaN or infinity appeared where a finite value is required."""


class TrainingAborted(RuntimeError):
    """Training stopped because of a non-finite loss or gradient."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
