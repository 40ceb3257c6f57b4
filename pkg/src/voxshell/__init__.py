"""Closed, oriented isosurfaces from voxel volumes by surface-cycle tracing."""

from voxshell._version import __version__
from voxshell.engines import Engine, extract
from voxshell.tessellate import Mesh, Resolution
from voxshell.volume import ConnectivityMode, IsoConfig, ScalarGrid

__all__ = [
    "ConnectivityMode",
    "Engine",
    "IsoConfig",
    "Mesh",
    "Resolution",
    "ScalarGrid",
    "__version__",
    "extract",
]
