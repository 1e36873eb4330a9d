"""Exception hierarchy shared by all modules."""


class BubbleScreenError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BubbleScreenError, ValueError):
    """Argument outside the domain of a kernel (log singularity, coincident points)."""


class ConfigurationError(BubbleScreenError, ValueError):
    """Invalid geometry, media or run configuration."""


class RegimeError(BubbleScreenError):
    """Configuration outside the supported physical regime."""


class WoodAnomalyError(RegimeError):
    """A Floquet order sits exactly at grazing (k**2 == k_{1p}**2)."""


class DiffractionError(RegimeError):
    """More than one propagating Floquet order (above the first diffraction threshold)."""


class ConvergenceError(BubbleScreenError):
    """A numerical procedure failed to converge or to find what it was looking for."""

    def __init__(self, message, **payload):
        super().__init__(message)
        self.payload = payload


class PoleError(BubbleScreenError, ZeroDivisionError):
    """A resonance denominator vanished exactly (a resonance hit)."""
