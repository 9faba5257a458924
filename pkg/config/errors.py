"""Typed exception hierarchy shared by every phase.

The CLI maps these onto exit codes: UsageError -> 1, ConfigError/DataError -> 2,
NumericFailure -> 3.
"""

from typing import Optional


class EEGViTError(Exception):
    """Base class for all errors raised by this project."""


# --- Configuration -----------------------------------------------------------

class ConfigError(EEGViTError):
    """A configuration violates one of its invariants."""


class UsageError(EEGViTError):
    """The command line could not be parsed."""


# --- Data ---------------------------------------------------------------------

class DataError(EEGViTError):
    """Base class for dataset and file problems."""


class FormatError(DataError):
    """A binary file does not follow its documented layout."""


class BadMagicError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class ChecksumMismatchError(FormatError):
    pass


class IngestionError(DataError):
    """A matrix export could not be converted into a Dataset."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class SplitError(DataError):
    pass


class CheckpointError(DataError):
    """A checkpoint does not match the model it is loaded into."""


class CheckpointBadMagicError(CheckpointError, BadMagicError):
    pass


class CheckpointTruncatedError(CheckpointError, TruncatedFileError):
    pass


class CheckpointChecksumError(CheckpointError, ChecksumMismatchError):
    pass


# --- Tensor engine ----------------------------------------------------------------

class DimensionError(EEGViTError, ValueError):
    """Operand shapes disagree. `axis` names the offending axis when known."""

    def __init__(self, message: str, axis: Optional[int] = None):
        super().__init__(message)
        self.axis = axis


class ContractError(EEGViTError):
    """An operation was called outside its documented contract."""


class ParameterError(EEGViTError, ValueError):
    pass


class SingularityError(EEGViTError, ArithmeticError):
    pass


class NumericFailure(EEGViTError):
    """A loss or activation became NaN/inf."""
