"""
Exception hierarchy for idewave.

Management commands map ConfigError, ModelError and KernelError to exit
code 2 (invalid input); every other IdewaveError maps to exit code 1.
"""


class IdewaveError(Exception):
    """Base class for every error raised by the waves services."""
    pass


class KernelError(IdewaveError):
    """Invalid dispersal kernel or kernel discretization."""
    pass


class DispersionError(IdewaveError):
    """Speed, root or constant computation has no admissible answer."""
    pass


class ModelError(IdewaveError):
    """A recurrence map fails its admissibility checks."""
    pass


class BoundsError(IdewaveError):
    """Upper/lower solution pair cannot be built or evaluated."""
    pass


class WaveOperatorError(IdewaveError):
    """Profile grid or operator setup is unusable."""
    pass


class RectangleError(IdewaveError):
    """Contracting rectangle construction or confinement failed."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SimulationError(IdewaveError):
    """Spatial simulation left its valid regime."""
    pass


class ConfigError(IdewaveError):
    """Malformed run configuration."""
    pass
