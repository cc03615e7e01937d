class SclopError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ComputationError(SclopError):
    """A computation could not be carried out on the given data."""

    exit_code = 1


class PreprocessingError(ComputationError):
    """
    Every document became empty during preprocessing.

    :ivar stage: The filter stage after which no tokens were left.
    """

    def __init__(self, stage: str, message: str = None):
        self.stage = stage
        super().__init__(message or f"All documents are empty after {stage}")


class ConfigurationError(SclopError):
    """A configuration value is invalid."""

    exit_code = 2


class UsageError(SclopError):
    """The command line or an input file could not be used."""

    exit_code = 2
