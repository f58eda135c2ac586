"""Exception hierarchy shared across the package."""


class LdpClassError(Exception):
    """Base class for all package errors."""


class DomainError(LdpClassError, ValueError):
    """A point lies outside [0, 1]^d or a label is not in {0, 1}."""


class ParameterError(LdpClassError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ConfigError(LdpClassError, ValueError):
    """Inconsistent configuration, e.g. reports built on different grids."""


class SizeError(LdpClassError, ValueError):
    """The two sample halves have different sizes."""


class TagError(LdpClassError, ValueError):
    """A report carries the wrong half tag."""


class FitError(LdpClassError, ValueError):
    """Rate fitting cannot proceed on the given table."""


class UnsupportedError(LdpClassError, NotImplementedError):
    """The requested evaluation path is not available for this input."""
