"""Whole-volume surface-cycle tracing.

Each boundary face (an active voxel facing an inactive 6-neighbor) is split
into four quadrant paths ``juncture -> face center -> juncture``. Paths of
neighboring faces meet at junctures, the midpoints of voxel edges. Following
the paths from juncture to juncture closes oriented loops; dropping the
junctures leaves surface cycles of face centers, the support points of the
final mesh.

At a juncture shared by four boundary faces (two active voxels touching
only along that edge) two successors are possible. The successor of a path
is always the outgoing path of the *partner* face at that juncture:

* two faces: the other face;
* four faces, disconnect: the other face of the same active voxel;
* four faces, connect: the other face bordering the same inactive voxel.
"""

from __future__ import annotations

import enum
import functools
import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from voxshell.exceptions import CycleCensusError, InvariantError, PreconditionError
from voxshell.volume import (
    ConnectivityMode,
    EdgeKey,
    LatticeKeys,
    RangeVector,
    VoxelIndex,
    edge_averages,
    edge_voxel_array,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import NDArray

    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)

VALID_CYCLE_LENGTHS = frozenset({3, 4, 5, 6, 7, 8, 9, 12})
PURE_CYCLE_LENGTHS = frozenset({3, 4, 5, 6, 7})

# (axis, sign) of the six face normals.
FACE_DIRECTIONS = ((0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1))


class PoaDecision(enum.Enum):
    """Successor choice at a point of ambiguity."""

    CONNECT = "connect"
    DISCONNECT = "disconnect"


@functools.cache
def juncture_offsets(axis: int, sign: int) -> np.ndarray:
    """Doubled offsets from a face center to its junctures 1-4.

    The junctures run counterclockwise about the outward normal
    ``sign * e_axis``: juncture 1 lies along the next axis and each
    following one is the previous direction turned by the normal.
    """
    normal = np.zeros(3, dtype=np.int64)
    normal[axis] = sign
    first = np.zeros(3, dtype=np.int64)
    first[(axis + 1) % 3] = 1
    offsets = [first]
    for _ in range(3):
        offsets.append(np.cross(normal, offsets[-1]))
    table = np.array(offsets, dtype=np.int64)
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class BoundaryFace:
    """A voxel face separating an active voxel from an inactive neighbor.

    Attributes
    ----------
    range : RangeVector
        Active-to-inactive range vector through the face.
    support : int
        Id of the face center.
    junctures : tuple[int, int, int, int]
        Ids of the edge midpoints 1-4, counterclockwise about the range
        vector.
    """

    range: RangeVector
    support: int
    junctures: tuple[int, int, int, int]

    def quadrant_paths(self) -> tuple[FaceQuadrantPath, ...]:
        """The internal paths 4->3, 3->2, 2->1 and 1->4."""
        j = self.junctures
        return tuple(
            FaceQuadrantPath(entry=j[(k + 1) % 4], support=self.support, exit=j[k])
            for k in (2, 1, 0, 3)
        )


@dataclass(frozen=True)
class FaceQuadrantPath:
    """Directed path juncture -> face center -> juncture."""

    entry: int
    support: int
    exit: int


@dataclass(frozen=True)
class Juncture:
    """A voxel-edge midpoint where quadrant paths meet."""

    edge: EdgeKey
    faces: tuple[int, ...]

    @property
    def ambiguous(self) -> bool:
        """True for four incoming and four outgoing paths."""
        return len(self.faces) == 4


@dataclass(frozen=True)
class SurfaceCycle:
    """Oriented loop of support-point ids.

    Raises
    ------
    CycleCensusError
        If the length is outside {3, ..., 9, 12}.
    """

    support: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.support) not in VALID_CYCLE_LENGTHS:
            msg = f"surface cycle of length {len(self.support)} cannot exist"
            raise CycleCensusError(msg)

    def __len__(self) -> int:
        return len(self.support)

    def canonical(self) -> SurfaceCycle:
        """The same cycle rotated to start at its lowest id."""
        start = self.support.index(min(self.support))
        return SurfaceCycle(self.support[start:] + self.support[:start])

    def reversed(self) -> SurfaceCycle:
        """The cycle with opposite orientation."""
        return SurfaceCycle(tuple(reversed(self.support)))

    def edges(self) -> list[tuple[int, int]]:
        """Directed support-point pairs (cycle vectors)."""
        s = self.support
        return [(s[i], s[(i + 1) % len(s)]) for i in range(len(s))]


class PoaPolicy:
    """Resolves points of ambiguity for one grid and mode.

    Parameters
    ----------
    mode : ConnectivityMode
        Global or per-edge policy.
    grid : ScalarGrid
        The lattice, used by mixed mode.
    iso : IsoConfig
        Isovalue and mixed-mode threshold.
    """

    def __init__(self, mode: ConnectivityMode, grid: ScalarGrid, iso: IsoConfig) -> None:
        self.mode = ConnectivityMode(mode)
        self.grid = grid
        self.iso = iso

    def connects(self, edges: NDArray[np.int64]) -> NDArray[np.bool_]:
        """Vectorised decision for doubled edge coordinates ``(n, 3)``."""
        if self.mode is ConnectivityMode.CONNECT:
            return np.ones(len(edges), dtype=bool)
        if self.mode is ConnectivityMode.DISCONNECT or len(edges) == 0:
            return np.zeros(len(edges), dtype=bool)
        return edge_averages(self.grid, edges) >= self.iso.poa_threshold

    def __call__(self, edge: EdgeKey) -> PoaDecision:
        return resolve_poa(self.mode, self.grid, self.iso, edge)


PoaResolver = PoaPolicy | Callable[[EdgeKey], PoaDecision]


def resolve_poa(
    mode: ConnectivityMode, grid: ScalarGrid, iso: IsoConfig, edge: EdgeKey
) -> PoaDecision:
    """Decide connect or disconnect at a point of ambiguity.

    Parameters
    ----------
    mode : ConnectivityMode
        Global modes return their constant; mixed mode connects when the
        average of the four voxels reaches the threshold.
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue and mixed-mode threshold.
    edge : EdgeKey
        Doubled coordinates of the voxel-edge midpoint.

    Returns
    -------
    PoaDecision
        The decision for this edge.

    Raises
    ------
    PreconditionError
        If the edge is not shared by exactly two diagonal active voxels.
    """
    vox = edge_voxel_array(edge)[0]
    dims = np.asarray(grid.dims)
    inside = np.all((vox >= 0) & (vox < dims), axis=1)
    active = np.zeros(4, dtype=bool)
    active[inside] = grid.values[vox[inside, 0], vox[inside, 1], vox[inside, 2]] >= iso.isovalue
    pattern = active.tolist()
    if pattern not in ([True, False, True, False], [False, True, False, True]):
        msg = f"edge {edge} is not a point of ambiguity"
        raise PreconditionError(msg)
    policy = PoaPolicy(mode, grid, iso)
    connect = policy.connects(np.asarray([edge], dtype=np.int64))[0]
    return PoaDecision.CONNECT if connect else PoaDecision.DISCONNECT


def _face_arrays(
    grid: ScalarGrid, iso: IsoConfig
) -> tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.int64]]:
    """Active voxels, inactive voxels and juncture offsets of all faces."""
    padded = grid.padded_active(iso)
    active = padded[1:-1, 1:-1, 1:-1]
    nx, ny, nz = grid.dims
    actives, inactives, offsets = [], [], []
    for axis, sign in FACE_DIRECTIONS:
        step = np.zeros(3, dtype=np.int64)
        step[axis] = sign
        neighbor = padded[
            1 + step[0] : 1 + step[0] + nx,
            1 + step[1] : 1 + step[1] + ny,
            1 + step[2] : 1 + step[2] + nz,
        ]
        idx = np.argwhere(active & ~neighbor).astype(np.int64)
        actives.append(idx)
        inactives.append(idx + step)
        offsets.append(np.broadcast_to(juncture_offsets(axis, sign), (len(idx), 4, 3)))
    return (
        np.concatenate(actives),
        np.concatenate(inactives),
        np.concatenate(offsets),
    )


def collect_boundary_faces(grid: ScalarGrid, iso: IsoConfig) -> list[BoundaryFace]:
    """Record one face per active-to-inactive 6-neighbor transition.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue.

    Returns
    -------
    list[BoundaryFace]
        Faces sorted by support id, including faces toward outside voxels.
    """
    keys = LatticeKeys.for_grid(grid)
    active, inactive, offsets = _face_arrays(grid, iso)
    centers = active + inactive
    support = keys.encode(centers)
    junctures = keys.encode(centers[:, None, :] + offsets)
    order = np.argsort(support, kind="stable")
    return [
        BoundaryFace(
            range=RangeVector(VoxelIndex(*active[f].tolist()), VoxelIndex(*inactive[f].tolist())),
            support=int(support[f]),
            junctures=tuple(junctures[f].tolist()),
        )
        for f in order
    ]


def junctures_of(faces: Sequence[BoundaryFace], keys: LatticeKeys) -> list[Juncture]:
    """Group faces by the junctures they touch."""
    touching: dict[int, list[int]] = {}
    for f, face in enumerate(faces):
        for j in face.junctures:
            touching.setdefault(j, []).append(f)
    return [
        Juncture(edge=tuple(keys.decode(j).tolist()), faces=tuple(fs))
        for j, fs in sorted(touching.items())
    ]


def _partners(
    juncture: NDArray[np.int64],
    voxel_in: NDArray[np.int64],
    voxel_out: NDArray[np.int64],
    connect_at: Callable[[NDArray[np.int64]], NDArray[np.bool_]],
) -> NDArray[np.int64]:
    """Partner incidence of every (face, juncture) incidence."""
    order = np.lexsort((np.arange(len(juncture)), juncture))
    sorted_j = juncture[order]
    starts = np.flatnonzero(np.r_[True, sorted_j[1:] != sorted_j[:-1]])
    sizes = np.diff(np.r_[starts, len(sorted_j)])
    if np.any((sizes != 2) & (sizes != 4)):
        bad = sorted_j[starts[(sizes != 2) & (sizes != 4)][0]]
        msg = f"juncture {bad} is touched by an odd number of boundary faces"
        raise InvariantError(msg)
    partner = np.empty(len(juncture), dtype=np.int64)

    pairs = starts[sizes == 2]
    partner[order[pairs]] = order[pairs + 1]
    partner[order[pairs + 1]] = order[pairs]

    quads = starts[sizes == 4]
    if len(quads):
        members = order[quads[:, None] + np.arange(4)]
        connect = connect_at(members[:, 0])
        act = voxel_in[members]
        ina = voxel_out[members]
        same_active = act[:, :, None] == act[:, None, :]
        same_inactive = ina[:, :, None] == ina[:, None, :]
        not_self = ~np.eye(4, dtype=bool)
        match = np.where(
            connect[:, None, None],
            same_inactive & ~same_active,
            same_active & not_self,
        )
        if not np.all(match.sum(axis=2) == 1):
            msg = "point of ambiguity without a unique partner face"
            raise InvariantError(msg)
        partner[members] = np.take_along_axis(members, match.argmax(axis=2), axis=1)
    return partner


def trace_cycles(
    faces: Sequence[BoundaryFace], poa_resolver: PoaResolver
) -> list[SurfaceCycle]:
    """Link the quadrant paths of all faces into surface cycles.

    Parameters
    ----------
    faces : Sequence[BoundaryFace]
        Output of :func:`collect_boundary_faces`.
    poa_resolver : PoaPolicy or callable
        Decision for each point of ambiguity. A plain callable receives the
        doubled edge coordinates.

    Returns
    -------
    list[SurfaceCycle]
        Canonical cycles (rotated to their lowest id), sorted.

    Raises
    ------
    InvariantError
        If a path is left over or reached twice.
    """
    if not faces:
        return []
    n = len(faces)
    active = np.array([f.range.active for f in faces], dtype=np.int64)
    inactive = np.array([f.range.inactive for f in faces], dtype=np.int64)
    _, voxel_ids = np.unique(np.concatenate([active, inactive]), axis=0, return_inverse=True)
    voxel_ids = voxel_ids.reshape(-1)
    voxel_in = np.repeat(voxel_ids[:n], 4)
    voxel_out = np.repeat(voxel_ids[n:], 4)
    juncture = np.array([f.junctures for f in faces], dtype=np.int64).reshape(-1)
    support = [f.support for f in faces]
    step = inactive - active
    axis = np.argmax(np.abs(step), axis=1)
    direction = 2 * axis + (step[np.arange(n), axis] < 0)
    table = np.stack([juncture_offsets(a, s) for a, s in FACE_DIRECTIONS])
    edge_coords = ((active + inactive)[:, None, :] + table[direction]).reshape(-1, 3)

    if isinstance(poa_resolver, PoaPolicy):
        resolver = poa_resolver

        def connect_at(incidences: NDArray[np.int64]) -> NDArray[np.bool_]:
            return resolver.connects(edge_coords[incidences])

    else:
        callback = poa_resolver

        def connect_at(incidences: NDArray[np.int64]) -> NDArray[np.bool_]:
            return np.array(
                [
                    callback(tuple(edge_coords[i].tolist())) is PoaDecision.CONNECT
                    for i in incidences.tolist()
                ],
                dtype=bool,
            )

    partner = _partners(juncture, voxel_in, voxel_out, connect_at)
    # Path k of a face ends at its juncture k; the partner's path leaving
    # that juncture is the one ending at the partner's previous juncture.
    successor = (partner // 4) * 4 + (partner % 4 - 1) % 4
    cycles = _walk(successor.tolist(), support, n)
    logger.debug("Traced %d cycles from %d boundary faces", len(cycles), n)
    return cycles


def _walk(successor: list[int], support: list[int], n_faces: int) -> list[SurfaceCycle]:
    visited = [False] * (4 * n_faces)
    cycles = []
    for first in range(4 * n_faces):
        if visited[first]:
            continue
        loop = []
        path = first
        while not visited[path]:
            visited[path] = True
            loop.append(support[path // 4])
            path = successor[path]
        if path != first:
            msg = f"quadrant path {path} reached twice while tracing"
            raise InvariantError(msg)
        cycles.append(SurfaceCycle(tuple(loop)).canonical())
    cycles.sort(key=lambda c: c.support)
    return cycles


def cycle_lengths(cycles: Iterable[SurfaceCycle]) -> list[int]:
    return [len(c) for c in cycles]
