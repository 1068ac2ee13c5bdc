"""Exception and warning types shared across the package."""


class ExpertCoverError(Exception):
    """Base class for all package errors."""


class ParameterError(ExpertCoverError, ValueError):
    """An argument is outside its valid range."""


class EnsembleFormatError(ParameterError):
    """An ensemble file or literal could not be parsed or is invalid."""


class SizeLimitError(ExpertCoverError):
    """A search or enumeration would exceed its configured resource guard."""


class CoverageError(ExpertCoverError):
    """An operation requiring a fully distinguishing ensemble got one that is not."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ConfigurationError(ExpertCoverError):
    """The ensemble cannot support the requested decoder."""


class BoundUndefinedError(ParameterError):
    """A bound formula is undefined for the given parameters."""


class DuplicateScopeWarning(UserWarning):
    pass


class PrecisionWarning(UserWarning):
    """A ceiling argument sits so close to an integer that rounding may flip it."""
