"""Exception hierarchy shared by every fdnshash module."""


class FdnsError(Exception):
    """Base class for all errors raised by fdnshash."""


class InvalidInputError(FdnsError, ValueError):
    """An image or matrix argument is malformed (empty, wrong shape, non-finite)."""


class InvalidParameterError(FdnsError, ValueError):
    """A numeric parameter is outside its legal range."""


class OutOfBoundsError(FdnsError, IndexError):
    """A central pixel is too close to the matrix border."""


class UnsupportedParameterError(FdnsError, ValueError):
    """Parameters are valid in general but not supported by this stage."""


class IncompatibleHashError(FdnsError, ValueError):
    """Two hashes were produced with different pipeline parameters."""


class ConfigurationError(FdnsError, ValueError):
    """An experiment or corpus configuration cannot be satisfied."""


class AttackParseError(FdnsError, ValueError):
    """An attack description could not be parsed."""
