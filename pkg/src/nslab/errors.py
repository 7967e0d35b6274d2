"""Exception types shared across the package.

The CLI maps these onto process exit codes, so keep the hierarchy flat and
stable: ConfigurationError -> 2, StabilityError -> 3, DegenerateFitError -> 4.
"""

__all__ = [
    "NslabError",
    "ConfigurationError",
    "RepresentationError",
    "GridMismatchError",
    "StabilityError",
    "DegenerateFitError",
]


class NslabError(Exception):
    """Base class for package-specific failures."""


class ConfigurationError(NslabError, ValueError):
    """Invalid or inconsistent configuration / arguments."""


class RepresentationError(NslabError, ValueError):
    """Field passed in the wrong representation (spectral vs physical)."""


class GridMismatchError(NslabError, ValueError):
    """Operands live on different grids."""


class StabilityError(NslabError, RuntimeError):
    """Time integration left the stable regime (blow-up proxy tripped)."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class DegenerateFitError(NslabError, ValueError):
    """Rate fit attempted on unusable samples (too few positive values)."""
