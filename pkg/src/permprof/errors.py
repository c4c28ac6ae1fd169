"""Exception hierarchy shared across the package."""


class PermProfError(Exception):
    """Base class for all errors raised by permprof."""


class DomainError(PermProfError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ZeroMeasure(PermProfError):
    """No permutation of the requested size carries positive weight."""


class InvalidSpec(PermProfError, ValueError):
    """A malformed moment specification or weight description."""


class CapExceeded(PermProfError):
    """Enumeration was requested above the configured size cap."""


class CalibrationError(PermProfError):
    """The Boltzmann parameter cannot reach the requested mean size."""


class TailError(PermProfError):
    """The Boltzmann tail mass could not be certified."""


class SeriesOverflow(PermProfError, ArithmeticError):
    """A float-mode series coefficient became non-finite."""
