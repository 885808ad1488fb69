"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ModelError(Exception):
    """Base class for all errors raised by this package."""


class ParameterDomainError(ModelError, ValueError):
    """A parameter lies outside the domain where the model is defined."""


class ClassificationError(ModelError, ValueError):
    """A point could not be classified against the region boundary."""


class NeverExitsError(ModelError):
    """An entry point sits on the stable wall, so its orbit never leaves."""


class ConfigError(ModelError, ValueError):
    """A run configuration is malformed or inconsistent."""


class ResolutionError(ModelError):
    """A grid is too coarse to certify the requested bound."""


class NotApplicableError(ModelError):
    """The operation has no meaning for the supplied arguments."""


class DataError(ModelError, ValueError):
    """Two data records cannot be compared as supplied."""
