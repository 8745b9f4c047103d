"""Exception hierarchy shared by the library and the command line."""


class VStarError(Exception):
    """Base class for every error raised deliberately by this package."""


class DomainError(VStarError, ValueError):
    """An input lies outside the domain of the operation."""


class RangeError(DomainError):
    """A result cannot be represented in 64-bit floating point."""


class EstimationError(DomainError):
    """Not enough data to produce a reported estimate."""


class ResourceError(VStarError, MemoryError):
    """The requested work exceeds the configured resource budget."""
