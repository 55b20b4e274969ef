"""
errors.py

Exception types raised by the pm_fusion package.

Plain argument and precondition violations raise the built-in ValueError;
the classes below mark failures callers may want to tell apart.
"""


class PMFusionError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInputError(PMFusionError, ValueError):
    """A probability vector cannot be formed (all-zero, negative or non-finite input)."""


class ConfigurationError(PMFusionError, ValueError):
    """A scenario document or probability table is incomplete or inconsistent."""


class ConflictError(PMFusionError, ValueError):
    """Dempster's rule met total conflict: the normalizing mass is zero."""


class MarketStateError(PMFusionError, RuntimeError):
    """A market operation was requested in the wrong phase of an object's window."""
