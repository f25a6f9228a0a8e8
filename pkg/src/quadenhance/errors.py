"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: check failures exit 1,
configuration problems exit 2, data/I-O problems exit 3.
"""


class QuadEnhanceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(QuadEnhanceError, ValueError):
    """Tensor shapes (or dtypes) are incompatible with an operation."""


class UsageError(QuadEnhanceError, RuntimeError):
    """An API was driven incorrectly, e.g. mixing variables across tapes."""


class NumericError(QuadEnhanceError, ArithmeticError):
    """A non-finite value appeared where the contract requires finite ones."""


class ConfigError(QuadEnhanceError, ValueError):
    """A run configuration is invalid (unknown keys, bad values)."""


class DataError(QuadEnhanceError, ValueError):
    """A data file is malformed, truncated, or internally inconsistent."""


class CheckpointError(DataError):
    """A checkpoint file failed validation on load."""


class ChecksumError(CheckpointError):
    """Stored checksum does not match the file contents."""


class CheckFailure(QuadEnhanceError):
    """A verification subcommand found a deviation above tolerance."""
