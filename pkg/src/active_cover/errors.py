"""Exception hierarchy."""


class ActiveCoverError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ActiveCoverError, ValueError):
    """Invalid argument or configuration field."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class FormatError(ActiveCoverError, ValueError):
    """Malformed input file. ``row`` is the 1-based line number, if known."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SamplingError(ActiveCoverError, RuntimeError):
    pass


class CapabilityError(ActiveCoverError):
    """A learner needs information the dataset does not carry."""


class ProtocolError(ActiveCoverError):
    """next_query / observe called out of order."""


class LearnerStateError(ActiveCoverError):
    pass


class InsufficientDataError(ActiveCoverError, ValueError):
    pass
