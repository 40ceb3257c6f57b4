"""Exception hierarchy for voxshell."""


class VoxshellError(Exception):
    """Base class for all voxshell errors."""


class PreconditionError(VoxshellError, ValueError):
    """An operation was called with arguments outside its contract."""


class InvariantError(VoxshellError, RuntimeError):
    """An internal invariant was violated.

    Notes
    -----
    These signal a bug, not bad input: the surface construction guarantees
    them for every volume.
    """


class CycleCensusError(InvariantError):
    """A surface cycle has a length outside {3, ..., 9, 12}."""


class VolumeLoadError(VoxshellError, OSError):
    """A volume header, payload or image stack could not be read."""


class MeshNotClosedError(VoxshellError):
    """A measurement that needs a closed mesh was given an open one."""


class TableValidationError(VoxshellError):
    """A generated lookup table disagrees with the surface-cycle perimeters."""


class ConfigError(VoxshellError, ValueError):
    """An environment setting could not be parsed."""
