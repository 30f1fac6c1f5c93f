"""Exception types shared across the package."""


class CarpetError(Exception):
    """Base class for all package errors."""


class InvalidAddressError(CarpetError):
    """A cell address digit is out of range for the generator base."""


class CapacityError(CarpetError):
    """Requested lattice exceeds the configured resource guard."""


class NotAVertexError(CarpetError):
    """The given point is not a vertex of the carpet lattice."""


class LevelError(CarpetError):
    """A scale parameter is out of range for the requested operation."""


class DomainError(CarpetError):
    """A numeric argument is outside its admissible domain."""


class PairingError(CarpetError):
    """A configuration and a dual graph refer to different base graphs."""


class GeometryError(CarpetError):
    """The ambient window does not contain the region an event needs."""


class ArgumentError(CarpetError):
    """An argument is structurally invalid (e.g. a path that is not a crossing)."""


class SubcriticalError(DomainError):
    """A fixed-point equation has no positive solution for this parameter."""


class StarvationError(CarpetError):
    """Rejection sampling produced no accepted sample within the budget."""


class SaturationError(CarpetError):
    """A bisection target is not bracketed by the observable on [0, 1]."""
