"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError (and
subclasses) -> 3, ShapeError / NumericError -> 4.
"""


class AquaprobeError(Exception):
    """Base class for every error this package raises deliberately."""


class ConfigError(AquaprobeError):
    """A configuration value, flag, or config file is invalid."""


class DataError(AquaprobeError):
    """Input data violates the documented schema or value range."""


class CadenceError(DataError):
    """Dates are not a strictly increasing daily sequence."""


class DegenerateFeatureError(DataError):
    """A feature is constant, so min-max scaling is undefined."""


class FormatError(DataError):
    """A persisted artifact (model file, CSV) cannot be parsed."""


class ShapeError(AquaprobeError, ValueError):
    """Operands have incompatible shapes."""


class NumericError(AquaprobeError, ArithmeticError):
    """A computation produced non-finite values."""


class TrainingDivergedError(NumericError):
    """Training loss became non-finite; carries the offending epoch."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")
