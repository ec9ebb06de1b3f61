"""Exception types raised by the toolkit."""


class LPCarlemanError(Exception):
    """Base class for all toolkit errors."""


class DomainError(LPCarlemanError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResolutionError(LPCarlemanError, ValueError):
    """Grid data is not resolved well enough for the requested operation."""


class SupportError(LPCarlemanError, ValueError):
    """A block violates its declared spectral support."""


class GridMismatchError(LPCarlemanError, ValueError):
    """Two grid functions do not live on the same grid."""


class NonOsgoodRangeError(LPCarlemanError, ValueError):
    """The weight function is requested beyond sup(phi) of a non-Osgood modulus."""


class TableRangeError(LPCarlemanError, ValueError):
    """A weight table cannot be extended far enough in floating point."""


class DegenerateInputError(LPCarlemanError, ValueError):
    """A ratio is requested with a vanishing denominator."""


class ConfigError(LPCarlemanError, ValueError):
    """A run configuration is malformed or violates an invariant."""


class InternalError(LPCarlemanError, RuntimeError):
    """An internal consistency check failed."""
