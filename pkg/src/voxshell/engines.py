"""One entry point for every surface engine."""

from __future__ import annotations

import enum
import logging
from typing import TYPE_CHECKING

from voxshell.marching import extract_marching
from voxshell.mc_reference import McVariant, mc_extract, require_mc_settings
from voxshell.tessellate import Resolution, build_mesh, require_resolution
from voxshell.vesta_core import PoaPolicy, collect_boundary_faces, trace_cycles
from voxshell.volume import ConnectivityMode

if TYPE_CHECKING:
    from voxshell.tessellate import Mesh
    from voxshell.vesta_core import SurfaceCycle
    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)


class Engine(enum.StrEnum):
    """Available surface engines."""

    VESTA_CORE = "vesta-core"
    VESTA_MARCHING = "vesta-marching"
    MC_CLASSIC = "mc-classic"
    MC_EXTENDED = "mc-extended"

    @property
    def is_vesta(self) -> bool:
        return self in (Engine.VESTA_CORE, Engine.VESTA_MARCHING)


def core_cycles(
    grid: ScalarGrid, iso: IsoConfig, mode: ConnectivityMode = ConnectivityMode.DISCONNECT
) -> list[SurfaceCycle]:
    """Trace the whole volume at once; cycles come back canonical and sorted."""
    faces = collect_boundary_faces(grid, iso)
    return trace_cycles(faces, PoaPolicy(mode, grid, iso))


def extract(
    grid: ScalarGrid,
    iso: IsoConfig,
    engine: Engine | str = Engine.VESTA_CORE,
    mode: ConnectivityMode | str = ConnectivityMode.DISCONNECT,
    resolution: Resolution | str = Resolution.L,
    *,
    displace: bool = True,
    threads: int = 1,
    slab_layers: int = 16,
) -> Mesh:
    """Extract a surface mesh.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue and mixed-mode threshold.
    engine : Engine, optional
        Which engine to run.
    mode : ConnectivityMode, optional
        Decision at points of ambiguity.
    resolution : Resolution, optional
        ``L`` or ``H`` decomposition.
    displace : bool, optional
        Slide support points to the isovalue.
    threads, slab_layers : int, optional
        Marching-scan partitioning; ignored by the other engines.

    Returns
    -------
    Mesh
        The extracted mesh with its provenance and cycle census.

    Raises
    ------
    PreconditionError
        For an unknown resolution, or Marching Cubes with anything but
        ``L`` and disconnect.
    """
    engine = Engine(engine)
    mode = ConnectivityMode(mode)
    resolution = require_resolution(str(resolution))
    logger.debug("Extracting with %s (%s, %s)", engine, mode, resolution)
    if engine is Engine.VESTA_CORE:
        cycles = core_cycles(grid, iso, mode)
        return build_mesh(
            cycles, grid, iso, resolution, displace=displace, engine=engine.value, mode=mode
        )
    if engine is Engine.VESTA_MARCHING:
        return extract_marching(
            grid,
            iso,
            mode,
            resolution,
            displace=displace,
            threads=threads,
            slab_layers=slab_layers,
        )
    require_mc_settings(mode, resolution)
    variant = McVariant.CLASSIC15 if engine is Engine.MC_CLASSIC else McVariant.EXTENDED
    return mc_extract(grid, iso, variant, displace=displace)
