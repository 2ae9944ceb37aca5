"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` -> 2, ``ImageIOError`` -> 3,
``SidecarError`` (and subclasses) -> 4.
"""


class SeedCodecError(Exception):
    """Base class for all package errors."""


class ConfigError(SeedCodecError, ValueError):
    """Invalid configuration value. ``field`` names the offending setting."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DimensionError(SeedCodecError, ValueError):
    """Array geometries that must agree do not."""


class StateError(SeedCodecError, RuntimeError):
    """Operation not valid in the object's current state."""


class ImageIOError(SeedCodecError, OSError):
    pass


class SidecarError(SeedCodecError, ValueError):
    pass


class SidecarFormatError(SidecarError):
    """Wrong magic or version."""


class SidecarCorruptionError(SidecarError):
    """CRC mismatch."""


class SidecarTruncationError(SidecarError):
    """Input shorter than a full record."""


class SidecarSemanticError(SidecarError):
    """Fields decode cleanly but are inconsistent (selected index >= N)."""


class TrajectoryError(SeedCodecError, RuntimeError):
    """Failure while generating one candidate; carries its seed index."""

    def __init__(self, seed_index, cause):
        self.seed_index = seed_index
        super().__init__(f"candidate {seed_index}: {cause}")
