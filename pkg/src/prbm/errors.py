"""Exception hierarchy shared by every prbm module."""


class PRBMError(Exception):
    """Base class for all errors raised by prbm."""


class DomainError(PRBMError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class DimensionError(PRBMError, ValueError):
    """Array shapes disagree with the model or with each other."""


class CapacityError(PRBMError, ValueError):
    """An exact computation would exceed the enumeration budget."""


class NumericError(PRBMError, FloatingPointError):
    """Parameters became non-finite."""


class FitError(PRBMError, ValueError):
    """A baseline could not be estimated from the data."""


class DataFormatError(PRBMError, ValueError):
    """Input data is malformed or violates ordering rules."""


class ConfigError(PRBMError, ValueError):
    """A run configuration is invalid or inconsistent."""


class CheckpointError(PRBMError, ValueError):
    """Base class for checkpoint decoding failures."""


class FormatError(CheckpointError):
    """Checkpoint bytes are truncated or structurally inconsistent."""


class IntegrityError(CheckpointError):
    """Checkpoint CRC does not match its contents."""


class VersionError(CheckpointError):
    """Checkpoint was written by an unsupported format version."""
