"""Reference Marching Cubes on the voxel-center lattice.

The cube corners are the eight voxels of a 3-cell and the cube edges are its
twelve centers, so MC and the marching VESTA scan share one cell embedding
and one support-point id space.

Two table variants are generated rather than typed in:

* ``extended`` cuts every cube face on its own: a face with two crossing
  edges gets one segment, an ambiguous face gets one segment around each
  active corner. The segments chain into polygons, which are fanned.
* ``classic15`` keeps only the fifteen base configurations of popcount up
  to four. Every other configuration is a rotation of a base, or the
  complement of one with its triangles reversed. Complements of ambiguous
  configurations therefore join what their neighbors separate.
"""

from __future__ import annotations

import enum
import functools
import itertools
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from voxshell.exceptions import PreconditionError, TableValidationError
from voxshell.marching import (
    CENTER_POSITION,
    CENTER_VOXELS,
    JUNCTURE_CENTERS,
    JUNCTURE_POSITION,
    JUNCTURES,
    POA_MASK,
    RANK_OF,
    VOXEL_OFFSETS,
    is_crossing,
    link_cell,
    padded_inputs,
    slab_configurations,
)
from voxshell.tessellate import Mesh, Provenance, Resolution, census_of, support_positions
from voxshell.volume import ConnectivityMode, LatticeKeys

if TYPE_CHECKING:
    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)

Polygon = tuple[int, ...]


class McVariant(enum.StrEnum):
    """Marching Cubes table variant."""

    CLASSIC15 = "classic15"
    EXTENDED = "extended"

    @property
    def engine_name(self) -> str:
        """Engine name recorded in mesh provenance."""
        return "mc-classic" if self is McVariant.CLASSIC15 else "mc-extended"


@dataclass(frozen=True, eq=False)
class McTables:
    """Lookup tables indexed by cell occupancy.

    Attributes
    ----------
    variant : McVariant
        Which rule built the tables.
    edge_masks : tuple[int, ...]
        Bit ``c`` is set when cube edge (center) ``c`` is crossed.
    polygons : tuple[tuple[Polygon, ...], ...]
        Oriented surface polygons over cube edges.
    triangles : tuple[numpy.ndarray, ...]
        Fan triangles over cube edges, shape ``(k, 3)`` per occupancy.
    """

    variant: McVariant
    edge_masks: tuple[int, ...]
    polygons: tuple[tuple[Polygon, ...], ...]
    triangles: tuple[np.ndarray, ...]


def _corner(v: int) -> np.ndarray:
    return 2 * VOXEL_OFFSETS[v]


def _face_segments(code: int, juncture: int) -> list[tuple[int, int]]:
    """Oriented segments of one cube face, active corners on the right."""
    centers = [c for c in JUNCTURE_CENTERS[juncture] if is_crossing(code, c)]
    if not centers:
        return []
    normal = np.asarray(JUNCTURE_POSITION[juncture]) - 1
    face_corners = {v for c in JUNCTURE_CENTERS[juncture] for v in CENTER_VOXELS[c]}
    active = [v for v in sorted(face_corners) if (code >> v) & 1]
    if len(centers) == 2:
        pairs = [(centers[0], centers[1], active[0])]
    else:
        pairs = []
        for v in active:
            around = [c for c in centers if v in CENTER_VOXELS[c]]
            pairs.append((around[0], around[1], v))
    segments = []
    for p, q, v in pairs:
        side = np.cross(CENTER_POSITION[q] - CENTER_POSITION[p], _corner(v) - CENTER_POSITION[p])
        segments.append((p, q) if np.dot(side, normal) < 0 else (q, p))
    return segments


def _chain(segments: list[tuple[int, int]]) -> tuple[Polygon, ...]:
    following = dict(segments)
    if len(following) != len(segments):
        msg = "two face segments leave the same cube edge"
        raise TableValidationError(msg)
    polygons = []
    seen: set[int] = set()
    for first in sorted(following, key=RANK_OF.__getitem__):
        if first in seen:
            continue
        loop = []
        c = first
        while c not in seen:
            seen.add(c)
            loop.append(c)
            if c not in following:
                msg = f"face segments do not close at cube edge {c}"
                raise TableValidationError(msg)
            c = following[c]
        if c != first:
            msg = f"cube edge {c} reached twice while chaining face segments"
            raise TableValidationError(msg)
        polygons.append(tuple(loop))
    return tuple(polygons)


def _canonical(polygon: Polygon) -> Polygon:
    start = min(range(len(polygon)), key=lambda i: RANK_OF[polygon[i]])
    return polygon[start:] + polygon[:start]


def _fan(polygons: tuple[Polygon, ...]) -> np.ndarray:
    triangles = [
        (p[0], p[i], p[i + 1]) for p in polygons for i in range(1, len(p) - 1)
    ]
    return np.array(triangles, dtype=np.int64).reshape(-1, 3)


def extended_polygons(code: int) -> tuple[Polygon, ...]:
    """Polygons of one occupancy under the per-face rule."""
    segments = [s for j in JUNCTURES for s in _face_segments(code, j)]
    return _chain(segments)


@functools.cache
def cube_rotations() -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
    """The 24 proper cube rotations as (voxel, center) permutations."""
    center_of = {frozenset(pair): c for c, pair in enumerate(CENTER_VOXELS)}
    signed = 2 * VOXEL_OFFSETS - 1
    rotations = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            matrix = np.zeros((3, 3), dtype=np.int64)
            matrix[range(3), perm] = signs
            if round(np.linalg.det(matrix)) != 1:
                continue
            moved = (signed @ matrix.T + 1) // 2
            voxels = tuple(int(x + 2 * y + 4 * z) for x, y, z in moved.tolist())
            centers = tuple(
                center_of[frozenset((voxels[u], voxels[v]))] for u, v in CENTER_VOXELS
            )
            rotations.append((voxels, centers))
    return tuple(rotations)


def _rotate_code(code: int, voxels: tuple[int, ...]) -> int:
    return sum(1 << voxels[v] for v in range(8) if (code >> v) & 1)


@functools.cache
def classic_bases() -> dict[int, tuple[int, int, bool]]:
    """Map every occupancy to ``(base, rotation index, complemented)``."""
    rotations = cube_rotations()
    assigned: dict[int, tuple[int, int, bool]] = {}
    candidates = sorted(
        (c for c in range(256) if c.bit_count() <= 4), key=lambda c: (c.bit_count(), c)
    )
    for base in candidates:
        if base in assigned:
            continue
        for r, (voxels, _) in enumerate(rotations):
            assigned.setdefault(_rotate_code(base, voxels), (base, r, False))
    for code in range(256):
        if code not in assigned:
            base, r, _ = assigned[255 ^ code]
            assigned[code] = (base, r, True)
    return assigned


def _classic_polygons(code: int) -> tuple[Polygon, ...]:
    base, r, complemented = classic_bases()[code]
    _, centers = cube_rotations()[r]
    polygons = [tuple(centers[c] for c in p) for p in extended_polygons(base)]
    if complemented:
        polygons = [tuple(reversed(p)) for p in polygons]
    polygons = [_canonical(p) for p in polygons]
    return tuple(sorted(polygons, key=lambda p: RANK_OF[p[0]]))


def _validate_extended(polygons: tuple[tuple[Polygon, ...], ...]) -> None:
    for code, mine in enumerate(polygons):
        expected = link_cell(code, 0)
        if tuple(mine) != tuple(expected):
            msg = (
                f"extended MC polygons {mine} of configuration {code} differ from "
                f"the disconnect surface cycles {expected}"
            )
            logger.error(msg)
            raise TableValidationError(msg)


@functools.cache
def mc_tables(variant: McVariant) -> McTables:
    """Build, validate and cache the tables of one variant.

    Raises
    ------
    TableValidationError
        If the extended polygons disagree with the disconnect surface cycles
        of any configuration.
    """
    variant = McVariant(variant)
    if variant is McVariant.EXTENDED:
        polygons = tuple(extended_polygons(code) for code in range(256))
        _validate_extended(polygons)
    else:
        polygons = tuple(_classic_polygons(code) for code in range(256))
        n_bases = len({base for base, _, _ in classic_bases().values()})
        if n_bases != 15:
            msg = f"classic table has {n_bases} base configurations, expected 15"
            logger.error(msg)
            raise TableValidationError(msg)
    masks = tuple(
        sum(1 << c for c in range(12) if is_crossing(code, c)) for code in range(256)
    )
    triangles = tuple(_fan(p) for p in polygons)
    for t in triangles:
        t.setflags(write=False)
    logger.debug("Built %s Marching Cubes tables", variant)
    return McTables(variant=variant, edge_masks=masks, polygons=polygons, triangles=triangles)


def cell_boundary(triangles: np.ndarray) -> set[tuple[int, int]]:
    """Directed triangle edges without their reverse inside the same cell."""
    edges = {
        (int(a), int(b))
        for t in triangles
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))
    }
    return {e for e in edges if (e[1], e[0]) not in edges}


def ambiguous_face_configurations() -> list[int]:
    """Occupancies with at least one ambiguous cube face."""
    return [code for code in range(256) if POA_MASK[code]]


def classic_differs(code: int) -> bool:
    """Whether the classic and extended polygons of ``code`` differ."""
    classic = mc_tables(McVariant.CLASSIC15).polygons[code]
    extended = mc_tables(McVariant.EXTENDED).polygons[code]
    return set(classic) != set(extended)


def mc_extract(
    grid: ScalarGrid,
    iso: IsoConfig,
    variant: McVariant = McVariant.EXTENDED,
    *,
    displace: bool = True,
) -> Mesh:
    """Run Marching Cubes over every cell of the haloed volume.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue.
    variant : McVariant, optional
        Table variant.
    displace : bool, optional
        Interpolate vertices along their cube edges.

    Returns
    -------
    Mesh
        Three points per triangle, keyed by support-point id; the census
        counts the table polygons by length.
    """
    variant = McVariant(variant)
    tables = mc_tables(variant)
    mode = ConnectivityMode.DISCONNECT
    provenance = Provenance(variant.engine_name, mode, Resolution.L, displace)
    keys = LatticeKeys.for_grid(grid)
    active, _ = padded_inputs(grid, iso, mode)
    code, _, bases = slab_configurations(
        active, None, mode, iso.poa_threshold, 0, grid.dims[2] + 1
    )
    if len(code) == 0:
        return Mesh.empty(provenance=provenance, spacing=grid.spacing)

    order = np.argsort(code, kind="stable")
    code = code[order]
    bases = bases[order]
    starts = np.flatnonzero(np.r_[True, code[1:] != code[:-1]])
    stops = np.r_[starts[1:], len(code)]
    key_blocks = []
    lengths: list[int] = []
    for start, stop in zip(starts.tolist(), stops.tolist(), strict=True):
        c = int(code[start])
        triangles = tables.triangles[c]
        cell_bases = bases[start:stop]
        ids = keys.encode(2 * cell_bases[:, None, None, :] + CENTER_POSITION[triangles][None])
        key_blocks.append(ids.reshape(-1))
        lengths.extend(len(p) for p in tables.polygons[c] for _ in range(stop - start))
    all_keys = np.concatenate(key_blocks)
    unique, inverse = np.unique(all_keys, return_inverse=True)
    points = support_positions(grid, iso, keys, unique, displace=displace)[inverse.reshape(-1)]
    mesh = Mesh(
        keys=all_keys,
        points=points,
        triangles=np.arange(len(all_keys), dtype=np.int64).reshape(-1, 3),
        census=census_of(lengths),
        provenance=provenance,
        spacing=grid.spacing,
    )
    logger.info("Marching Cubes (%s): %d triangles", variant, mesh.n_triangles)
    return mesh


def require_mc_settings(mode: ConnectivityMode, resolution: Resolution) -> None:
    """Reject settings Marching Cubes has no counterpart for."""
    if ConnectivityMode(mode) is not ConnectivityMode.DISCONNECT:
        msg = f"Marching Cubes only supports disconnect mode, got {mode}"
        raise PreconditionError(msg)
    if Resolution(resolution) is not Resolution.L:
        msg = f"Marching Cubes only supports resolution L, got {resolution}"
        raise PreconditionError(msg)
