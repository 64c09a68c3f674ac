"""Exception hierarchy shared by every channelcut module."""

from __future__ import annotations


class ChannelCutError(Exception):
    """Base class for all channelcut failures."""


class ValidationError(ChannelCutError, ValueError):
    """Raised when an input violates a documented precondition."""


class SolverError(ChannelCutError, RuntimeError):
    """Raised when a numerical procedure cannot produce a trustworthy result."""


class DimensionError(ValidationError):
    """Raised when matrix shapes disagree or exceed the configured maximum."""
