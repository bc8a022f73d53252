"""Exception taxonomy shared across the package.

Validation problems (bad user input, bad config, empty datasets) map to CLI
exit code 1; everything else that escapes is a runtime failure (exit 2).
"""


class DermvlmError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DermvlmError):
    """Caller-supplied data violates a documented precondition."""


class InvalidConfigError(InvalidInputError):
    """A config object violates one of its invariants."""


class EmptyDatasetError(InvalidInputError):
    """A loader produced zero usable records."""


class NumericalError(DermvlmError):
    """A forward/backward pass produced non-finite values."""


class OracleInapplicableError(DermvlmError):
    """The pixel-statistics oracle was handed an image it cannot decode."""


class CheckpointFormatError(DermvlmError):
    """Checkpoint archive is malformed or has an unsupported format version."""


class ConfigurationError(DermvlmError):
    """Two artifacts (e.g. checkpoint and eval split) do not fit together."""


class ServiceUnreachableError(DermvlmError):
    """The benchmark target did not answer its health check."""
