"""Marching 2x2x2 scan that builds surface cycles cell by cell.

A 3-cell holds eight voxels numbered ``v = x + 2y + 4z`` from its base
voxel. Its six face centers are the junctures 12-17 and its twelve edge
midpoints are the centers 0-11, the support points shared between two
voxels of the cell. Every crossing center (one active and one inactive end)
carries one quadrant path from the path table. Linking the paths through the
junctures and dropping the junctures leaves the surface cycles of the cell.

The scan covers one layer of cells beyond the domain on every side, so
border voxels are enclosed like every other voxel.
"""

from __future__ import annotations

import enum
import functools
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from voxshell.exceptions import InvariantError, PreconditionError
from voxshell.tessellate import (
    Mesh,
    Provenance,
    Resolution,
    census_of,
    centroid_keys,
    cycle_centroids,
    l_triangulation,
    support_positions,
)
from voxshell.vesta_core import PoaDecision, SurfaceCycle
from voxshell.volume import ConnectivityMode, LatticeKeys, VoxelIndex, edge_voxel_array, mean4

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)

JUNCTURES = (12, 13, 14, 15, 16, 17)

VOXEL_OFFSETS = np.array([(v & 1, (v >> 1) & 1, (v >> 2) & 1) for v in range(8)], dtype=np.int64)
VOXEL_OFFSETS.setflags(write=False)

# Voxel pair joined by each cell-edge center.
CENTER_VOXELS = (
    (0, 2),
    (2, 3),
    (0, 1),
    (1, 3),
    (2, 6),
    (0, 4),
    (3, 7),
    (1, 5),
    (4, 6),
    (6, 7),
    (4, 5),
    (5, 7),
)

CENTER_POSITION = np.array(
    [VOXEL_OFFSETS[u] + VOXEL_OFFSETS[v] for u, v in CENTER_VOXELS], dtype=np.int64
)
CENTER_POSITION.setflags(write=False)

JUNCTURE_POSITION = {
    12: (1, 1, 0),
    13: (0, 1, 1),
    14: (1, 2, 1),
    15: (1, 0, 1),
    16: (2, 1, 1),
    17: (1, 1, 2),
}

JUNCTURE_CENTERS = {
    12: (0, 1, 2, 3),
    13: (0, 4, 5, 8),
    14: (1, 4, 6, 9),
    15: (2, 5, 7, 10),
    16: (3, 6, 7, 11),
    17: (8, 9, 10, 11),
}

# (entry, exit) of the positive path through each center.
QUADRANT_PATHS = {
    0: (13, 12),
    1: (12, 14),
    2: (15, 12),
    3: (12, 16),
    4: (14, 13),
    5: (13, 15),
    6: (16, 14),
    7: (15, 16),
    8: (17, 13),
    9: (14, 17),
    10: (17, 15),
    11: (16, 17),
}

# Centers ordered as their global ids are.
CENTER_RANK = tuple(
    sorted(range(12), key=lambda c: tuple(CENTER_POSITION[c][::-1].tolist()))
)
RANK_OF = {c: r for r, c in enumerate(CENTER_RANK)}


class Orientation(enum.StrEnum):
    """Direction of a quadrant path through its center."""

    PLUS = "+"
    MINUS = "-"


def quadrant_path(center: int, orientation: Orientation | str) -> tuple[int, int, int]:
    """Look up the directed path ``entry -> center -> exit``.

    Parameters
    ----------
    center : int
        Cell-edge center, 0-11.
    orientation : Orientation
        ``+`` for the table direction, ``-`` for its reverse.

    Returns
    -------
    tuple[int, int, int]
        Entry juncture, center, exit juncture.

    Raises
    ------
    PreconditionError
        If the center or orientation is unknown.

    Examples
    --------
    >>> quadrant_path(0, "+")
    (13, 0, 12)
    >>> quadrant_path(7, "-")
    (16, 7, 15)
    """
    if center not in QUADRANT_PATHS:
        msg = f"cell-edge centers are numbered 0-11, got {center}"
        raise PreconditionError(msg)
    try:
        orientation = Orientation(orientation)
    except ValueError:
        msg = f"orientation must be '+' or '-', got {orientation!r}"
        raise PreconditionError(msg) from None
    entry, exit_ = QUADRANT_PATHS[center]
    if orientation is Orientation.MINUS:
        entry, exit_ = exit_, entry
    return (entry, center, exit_)


def path_orientation(center: int, active: int) -> Orientation:
    """Orientation that keeps the active voxel on the left of the path.

    The path turns from its exit toward its entry counterclockwise about
    the outward normal (active toward inactive voxel).
    """
    u, v = CENTER_VOXELS[center]
    if active not in (u, v):
        msg = f"voxel {active} does not border center {center}"
        raise PreconditionError(msg)
    inactive = v if active == u else u
    normal = VOXEL_OFFSETS[inactive] - VOXEL_OFFSETS[active]
    entry, exit_ = QUADRANT_PATHS[center]
    d_entry = np.asarray(JUNCTURE_POSITION[entry]) - CENTER_POSITION[center]
    d_exit = np.asarray(JUNCTURE_POSITION[exit_]) - CENTER_POSITION[center]
    turned = np.cross(normal, d_exit)
    if np.array_equal(turned, d_entry):
        return Orientation.PLUS
    if np.array_equal(turned, -d_entry):
        return Orientation.MINUS
    msg = f"path through center {center} is not perpendicular to its range vector"
    raise InvariantError(msg)


ORIENTATION = {
    (c, a): path_orientation(c, a) for c, pair in enumerate(CENTER_VOXELS) for a in pair
}


def _face_voxels(juncture: int) -> tuple[int, int, int, int]:
    offsets = edge_voxel_array(JUNCTURE_POSITION[juncture])[0]
    a, b, c, d = (int(x + 2 * y + 4 * z) for x, y, z in offsets.tolist())
    return (a, b, c, d)


# The four voxels of each cell face in the cyclic order used for edge averages.
FACE_VOXELS = {j: _face_voxels(j) for j in JUNCTURES}


def is_crossing(code: int, center: int) -> bool:
    u, v = CENTER_VOXELS[center]
    return ((code >> u) & 1) != ((code >> v) & 1)


def _poa_mask(code: int) -> int:
    mask = 0
    for j in JUNCTURES:
        if all(is_crossing(code, c) for c in JUNCTURE_CENTERS[j]):
            mask |= 1 << (j - 12)
    return mask


# Bit j - 12 is set where cell face j holds a point of ambiguity.
POA_MASK = np.array([_poa_mask(code) for code in range(256)], dtype=np.int64)
POA_MASK.setflags(write=False)


# Connect bits of the two opposite faces along x, y and z.
AXIS_FACE_BITS = (0b010010, 0b001100, 0b100001)


def is_realizable(code: int, connect_bits: int) -> bool:
    """Return whether some voxel values give ``connect_bits`` in mixed mode.

    The two opposite faces along any axis together hold all eight voxels, so
    their averages sum to the same total on every axis. No axis can then have
    both faces connected while another has both faces disconnected.
    """
    mask = int(POA_MASK[code])
    joined = split = False
    for pair in AXIS_FACE_BITS:
        if mask & pair != pair:
            continue
        joined |= (connect_bits & pair) == pair
        split |= (connect_bits & pair) == 0
    return not (joined and split)


def decision_patterns(code: int) -> Iterator[int]:
    """Every realizable connect-bit pattern over the ambiguous faces of ``code``."""
    mask = int(POA_MASK[code])
    sub = mask
    while True:
        if is_realizable(code, sub):
            yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@functools.lru_cache(maxsize=None)
def link_cell(code: int, connect_bits: int) -> tuple[tuple[int, ...], ...]:
    """Cycles of centers for one occupancy and set of face decisions.

    Each cycle starts at its lowest-ranked center; cycles are ordered by
    their first center.
    """
    paths: dict[int, tuple[int, int, int, int]] = {}
    leaving: defaultdict[int, list[int]] = defaultdict(list)
    for c, (u, v) in enumerate(CENTER_VOXELS):
        if not is_crossing(code, c):
            continue
        active, inactive = (u, v) if (code >> u) & 1 else (v, u)
        entry, _, exit_ = quadrant_path(c, ORIENTATION[c, active])
        paths[c] = (entry, exit_, active, inactive)
        leaving[entry].append(c)

    def successor(c: int) -> int:
        _, exit_, active, inactive = paths[c]
        outs = leaving[exit_]
        if len(outs) == 1:
            return outs[0]
        if len(outs) != 2:
            msg = f"juncture {exit_} of configuration {code} has {len(outs)} leaving paths"
            raise InvariantError(msg)
        if (connect_bits >> (exit_ - 12)) & 1:
            pick = [o for o in outs if paths[o][3] == inactive and paths[o][2] != active]
        else:
            pick = [o for o in outs if paths[o][2] == active]
        if len(pick) != 1:
            msg = f"juncture {exit_} of configuration {code} has no unique successor"
            raise InvariantError(msg)
        return pick[0]

    seen: set[int] = set()
    cycles = []
    for first in sorted(paths, key=RANK_OF.__getitem__):
        if first in seen:
            continue
        loop = []
        c = first
        while c not in seen:
            seen.add(c)
            loop.append(c)
            c = successor(c)
        if c != first:
            msg = f"center {c} reached twice in configuration {code}"
            raise InvariantError(msg)
        cycles.append(tuple(loop))
    return tuple(cycles)


@dataclass(frozen=True)
class Cell3:
    """A 2x2x2 voxel neighborhood.

    Attributes
    ----------
    base : VoxelIndex
        Voxel 0 of the cell; may lie one step outside the domain.
    occupancy : int
        Bit ``v`` is set when voxel ``v`` is active.
    values : tuple[float, ...]
        The eight voxel values, ``nan`` for outside voxels.
    """

    base: VoxelIndex
    occupancy: int
    values: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.occupancy < 256:
            msg = f"occupancy must fit in 8 bits, got {self.occupancy}"
            raise PreconditionError(msg)

    @classmethod
    def from_grid(cls, grid: ScalarGrid, iso: IsoConfig, base: tuple[int, int, int]) -> Cell3:
        """Read the eight voxels at ``base`` from a grid."""
        corner = np.asarray(base, dtype=np.int64)
        occupancy = 0
        values = []
        for v, offset in enumerate(VOXEL_OFFSETS):
            voxel = tuple((corner + offset).tolist())
            if grid.contains(voxel):
                value = float(grid.values[voxel])
                occupancy |= int(value >= iso.isovalue) << v
            else:
                value = float("nan")
            values.append(value)
        return cls(VoxelIndex(*corner.tolist()), occupancy, tuple(values))

    def is_active(self, v: int) -> bool:
        return bool((self.occupancy >> v) & 1)

    def face_average(self, juncture: int) -> float:
        """Mean of the four voxel values of cell face ``juncture``."""
        vals = np.array([self.values[v] for v in FACE_VOXELS[juncture]], dtype=np.float64)
        return float(mean4(vals))

    def mixed_resolver(self, threshold: float) -> Callable[[int], PoaDecision]:
        """Face decisions from the four-voxel average against ``threshold``."""

        def resolve(juncture: int) -> PoaDecision:
            if self.face_average(juncture) >= threshold:
                return PoaDecision.CONNECT
            return PoaDecision.DISCONNECT

        return resolve


@dataclass(frozen=True)
class CellCycles:
    """Cycles of one cell in local center ids, with the cell base."""

    base: VoxelIndex
    cycles: tuple[tuple[int, ...], ...]

    def placed(self, keys: LatticeKeys) -> list[SurfaceCycle]:
        """The cycles as global support-point ids, each rotated canonically."""
        base2 = 2 * np.asarray(self.base, dtype=np.int64)
        out = []
        for cycle in self.cycles:
            ids = keys.encode(base2 + CENTER_POSITION[list(cycle)])
            out.append(SurfaceCycle(tuple(ids.tolist())).canonical())
        return out


def cell_cycles(
    cell: Cell3,
    mode: ConnectivityMode,
    resolver: Callable[[int], PoaDecision] | None = None,
    *,
    threshold: float | None = None,
) -> CellCycles:
    """Link the quadrant paths of one cell into cycles.

    Parameters
    ----------
    cell : Cell3
        The neighborhood.
    mode : ConnectivityMode
        Decision at ambiguous cell faces.
    resolver : callable, optional
        Decision per juncture id 12-17; overrides ``mode`` when given.
    threshold : float, optional
        Mixed-mode face-average threshold, used with the cell's own values
        when no resolver is given.

    Returns
    -------
    CellCycles
        Empty for an empty or full cell.

    Raises
    ------
    PreconditionError
        In mixed mode without a resolver, a threshold or the cell's values.
    """
    mode = ConnectivityMode(mode)
    mask = int(POA_MASK[cell.occupancy])
    if resolver is None and mode is ConnectivityMode.MIXED:
        if threshold is None or len(cell.values) != 8:
            msg = "mixed mode needs a resolver, or a threshold and the cell's values"
            raise PreconditionError(msg)
        resolver = cell.mixed_resolver(threshold)
    if resolver is not None:
        bits = 0
        for j in JUNCTURES:
            if (mask >> (j - 12)) & 1 and resolver(j) is PoaDecision.CONNECT:
                bits |= 1 << (j - 12)
    elif mode is ConnectivityMode.CONNECT:
        bits = mask
    else:
        bits = 0
    return CellCycles(cell.base, link_cell(cell.occupancy, bits))


def cell_census_table(mode: ConnectivityMode) -> dict[int, dict[int, int]]:
    """Cycle census of every occupancy under a global mode.

    Raises
    ------
    PreconditionError
        For mixed mode, whose decisions depend on voxel values.
    """
    mode = ConnectivityMode(mode)
    if mode is ConnectivityMode.MIXED:
        msg = "mixed decisions depend on voxel values; enumerate decision_patterns instead"
        raise PreconditionError(msg)
    table = {}
    for code in range(256):
        bits = int(POA_MASK[code]) if mode is ConnectivityMode.CONNECT else 0
        table[code] = census_of(len(c) for c in link_cell(code, bits))
    return table


def slab_configurations(
    active: np.ndarray,
    values: np.ndarray | None,
    mode: ConnectivityMode,
    threshold: float,
    z0: int,
    z1: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Occupancy, decision bits and base of every surface cell in a slab.

    ``active`` and ``values`` carry a one-voxel halo. Cells ``z0 <= c < z1``
    along z have base ``c - 1``. Cells come out ordered by z, then y, then x.
    """
    nxp, nyp, _ = active.shape
    depth = z1 - z0
    sub = active[:, :, z0 : z1 + 1]
    codes = np.zeros((nxp - 1, nyp - 1, depth), dtype=np.int64)
    for v, (ox, oy, oz) in enumerate(VOXEL_OFFSETS.tolist()):
        codes |= sub[ox : ox + nxp - 1, oy : oy + nyp - 1, oz : oz + depth].astype(np.int64) << v
    cells = np.argwhere(((codes != 0) & (codes != 255)).transpose(2, 1, 0))[:, ::-1]
    code = codes[cells[:, 0], cells[:, 1], cells[:, 2]]
    bases = cells + np.array([-1, -1, z0 - 1])
    mask = POA_MASK[code]
    if mode is ConnectivityMode.CONNECT:
        bits = mask.copy()
    elif mode is ConnectivityMode.DISCONNECT or values is None:
        bits = np.zeros_like(mask)
    else:
        bits = np.zeros_like(mask)
        for j in JUNCTURES:
            hit = np.flatnonzero((mask >> (j - 12)) & 1)
            if len(hit) == 0:
                continue
            corner = bases[hit] + 1
            quad = np.stack(
                [
                    values[
                        corner[:, 0] + VOXEL_OFFSETS[v, 0],
                        corner[:, 1] + VOXEL_OFFSETS[v, 1],
                        corner[:, 2] + VOXEL_OFFSETS[v, 2],
                    ]
                    for v in FACE_VOXELS[j]
                ],
                axis=1,
            )
            connect = mean4(quad) >= threshold
            bits[hit[connect]] |= 1 << (j - 12)
    return code, bits, bases


def padded_inputs(
    grid: ScalarGrid, iso: IsoConfig, mode: ConnectivityMode
) -> tuple[np.ndarray, np.ndarray | None]:
    values = grid.padded_values() if mode is ConnectivityMode.MIXED else None
    return grid.padded_active(iso), values


def _slabs(nz: int, slab_layers: int) -> list[tuple[int, int]]:
    if slab_layers < 1:
        msg = f"slab_layers must be at least 1, got {slab_layers}"
        raise PreconditionError(msg)
    n_cells = nz + 1
    return [(z, min(z + slab_layers, n_cells)) for z in range(0, n_cells, slab_layers)]


def scan_volume(
    grid: ScalarGrid,
    iso: IsoConfig,
    mode: ConnectivityMode,
    *,
    slab_layers: int = 16,
) -> Iterator[SurfaceCycle]:
    """Stream the placed cycles of every cell, in cell order.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue and mixed-mode threshold.
    mode : ConnectivityMode
        Decision at points of ambiguity.
    slab_layers : int, optional
        Cell layers held in memory at a time.

    Yields
    ------
    SurfaceCycle
        Canonical cycles of global support-point ids.
    """
    mode = ConnectivityMode(mode)
    keys = LatticeKeys.for_grid(grid)
    active, values = padded_inputs(grid, iso, mode)
    for z0, z1 in _slabs(grid.dims[2], slab_layers):
        code, bits, bases = slab_configurations(
            active, values, mode, iso.poa_threshold, z0, z1
        )
        for c, b, base in zip(code.tolist(), bits.tolist(), bases.tolist(), strict=True):
            yield from CellCycles(VoxelIndex(*base), link_cell(c, b)).placed(keys)


@dataclass(frozen=True, eq=False)
class _Template:
    """Mesh pattern of one configuration in cell-local indices."""

    centers: np.ndarray
    triangles: np.ndarray
    centroids: tuple[tuple[np.ndarray, int, int], ...]
    lengths: tuple[int, ...]


@functools.lru_cache(maxsize=None)
def _template(code: int, bits: int, resolution: Resolution) -> _Template:
    cycles = link_cell(code, bits)
    used = sorted({c for cycle in cycles for c in cycle}, key=RANK_OF.__getitem__)
    index = {c: i for i, c in enumerate(used)}
    triangles: list[tuple[int, int, int]] = []
    centroids: list[tuple[np.ndarray, int, int]] = []
    for cycle in cycles:
        s = [index[c] for c in cycle]
        n = len(s)
        if resolution is Resolution.L or n == 3:
            local = tuple(tuple(CENTER_POSITION[c].tolist()) for c in cycle)
            triangles.extend((s[i], s[j], s[k]) for i, j, k in l_triangulation(local))
            continue
        slot = len(used) + len(centroids)
        centroids.append((np.array(sorted(s), dtype=np.int64), s[0], s[1]))
        triangles.extend((s[i], s[(i + 1) % n], slot) for i in range(n))
    return _Template(
        centers=np.array(used, dtype=np.int64),
        triangles=np.array(triangles, dtype=np.int64).reshape(-1, 3),
        centroids=tuple(centroids),
        lengths=tuple(len(c) for c in cycles),
    )


@dataclass
class _SlabMesh:
    keys: list[np.ndarray] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    triangles: list[np.ndarray] = field(default_factory=list)
    census: Counter[int] = field(default_factory=Counter)
    n_points: int = 0


def _mesh_slab(
    grid: ScalarGrid,
    iso: IsoConfig,
    keys: LatticeKeys,
    configurations: tuple[np.ndarray, np.ndarray, np.ndarray],
    resolution: Resolution,
    displace: bool,
) -> _SlabMesh:
    code, bits, bases = configurations
    out = _SlabMesh()
    if len(code) == 0:
        return out
    group = code * 64 + bits
    order = np.argsort(group, kind="stable")
    group = group[order]
    starts = np.flatnonzero(np.r_[True, group[1:] != group[:-1]])
    stops = np.r_[starts[1:], len(group)]

    batches = []
    for start, stop in zip(starts.tolist(), stops.tolist(), strict=True):
        g = int(group[start])
        template = _template(g // 64, g % 64, resolution)
        cell_bases = bases[order[start:stop]]
        ids = keys.encode(2 * cell_bases[:, None, :] + CENTER_POSITION[template.centers][None])
        batches.append((template, ids))

    all_ids = np.unique(np.concatenate([ids.ravel() for _, ids in batches]))
    all_xyz = support_positions(grid, iso, keys, all_ids, displace=displace)

    for template, ids in batches:
        m, width = ids.shape
        xyz = all_xyz[np.searchsorted(all_ids, ids)]
        block_keys = [ids]
        block_xyz = [xyz]
        for members, pivot, following in template.centroids:
            block_keys.append(centroid_keys(keys, ids[:, pivot], ids[:, following])[:, None])
            block_xyz.append(cycle_centroids(xyz[:, members])[:, None])
        block_width = width + len(template.centroids)
        tri = template.triangles[None] + (np.arange(m) * block_width)[:, None, None]
        out.keys.append(np.concatenate(block_keys, axis=1).ravel())
        out.points.append(np.concatenate(block_xyz, axis=1).reshape(-1, 3))
        out.triangles.append(tri.reshape(-1, 3) + out.n_points)
        out.n_points += m * block_width
        for length in template.lengths:
            out.census[length] += m
    return out


def extract_marching(
    grid: ScalarGrid,
    iso: IsoConfig,
    mode: ConnectivityMode = ConnectivityMode.DISCONNECT,
    resolution: Resolution = Resolution.L,
    *,
    displace: bool = True,
    threads: int = 1,
    slab_layers: int = 16,
) -> Mesh:
    """Mesh a volume with the marching scan.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue and mixed-mode threshold.
    mode : ConnectivityMode, optional
        Decision at points of ambiguity.
    resolution : Resolution, optional
        ``L`` fans or ``H`` centroid fans.
    displace : bool, optional
        Slide support points to the isovalue.
    threads : int, optional
        Worker threads; slabs are merged in order, so the mesh does not
        depend on this value.
    slab_layers : int, optional
        Cell layers per slab.

    Returns
    -------
    Mesh
        Points repeat once per cell that uses them; ids are global, so
        deduplication by id is exact.
    """
    mode = ConnectivityMode(mode)
    resolution = Resolution(resolution)
    if threads < 1:
        msg = f"threads must be at least 1, got {threads}"
        raise PreconditionError(msg)
    keys = LatticeKeys.for_grid(grid)
    active, values = padded_inputs(grid, iso, mode)
    slabs = _slabs(grid.dims[2], slab_layers)

    def work(bounds: tuple[int, int]) -> _SlabMesh:
        z0, z1 = bounds
        configurations = slab_configurations(active, values, mode, iso.poa_threshold, z0, z1)
        return _mesh_slab(grid, iso, keys, configurations, resolution, displace)

    if threads == 1:
        parts = [work(b) for b in slabs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, slabs))

    provenance = Provenance("vesta-marching", mode, resolution, displace)
    census: Counter[int] = Counter()
    for part in parts:
        census.update(part.census)
    if not census:
        return Mesh.empty(provenance=provenance, spacing=grid.spacing)

    offsets = np.cumsum([0] + [p.n_points for p in parts])
    mesh = Mesh(
        keys=np.concatenate([k for p in parts for k in p.keys]),
        points=np.concatenate([x for p in parts for x in p.points]),
        triangles=np.concatenate(
            [t + offsets[n] for n, p in enumerate(parts) for t in p.triangles]
        ),
        census=dict(sorted(census.items())),
        provenance=provenance,
        spacing=grid.spacing,
    )
    logger.info(
        "Marching scan (%s, %s): %d slabs, %d points, %d triangles",
        mode,
        resolution,
        len(slabs),
        mesh.n_points,
        mesh.n_triangles,
    )
    return mesh
