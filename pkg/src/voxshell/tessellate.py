"""Support-point displacement, cycle decomposition and the mesh container.

Surface cycles become triangles in one of two resolutions:

* ``L`` triangulates every cycle on its own support points. It fans from the
  lowest id unless that would put a chord inside a square shared with the
  neighbouring cycle, where each side of the square gets its own chords.
* ``H`` keeps 3-cycles and splits every longer cycle into a triangle per
  cycle vector around the centroid of its displaced support points.

Centroids get negative ids derived from the cycle's first directed edge, so
every engine names the same centroid the same way.
"""

from __future__ import annotations

import enum
import functools
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from voxshell.exceptions import InvariantError, PreconditionError
from voxshell.volume import (
    ConnectivityMode,
    LatticeKeys,
    RangeVector,
    VoxelIndex,
    support_geometry,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from numpy.typing import ArrayLike, NDArray

    from voxshell.vesta_core import SurfaceCycle
    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)


class Resolution(enum.StrEnum):
    """Cycle triangulation: fan without new points, or centroid fan."""

    L = "L"
    H = "H"


@dataclass(frozen=True, eq=False)
class SupportPoint:
    """Boundary-face center, possibly slid along its range vector."""

    id: int
    position: np.ndarray
    range: RangeVector
    t: float = 0.5


@dataclass(frozen=True)
class CentroidPoint:
    """Centroid added by the H decomposition of one cycle."""

    id: int
    position: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class Triangle:
    """Oriented triangle over point ids."""

    corners: tuple[int, int, int]

    def __post_init__(self) -> None:
        if len(set(self.corners)) != 3:
            msg = f"triangle corners {self.corners} are not distinct"
            raise InvariantError(msg)


@dataclass(frozen=True, eq=False)
class CycleNormal:
    """Summed area vector of a cycle's triangles and its anchor point."""

    d_sigma: np.ndarray
    anchor: np.ndarray


@dataclass(frozen=True)
class Provenance:
    """How a mesh was produced."""

    engine: str
    mode: ConnectivityMode
    resolution: Resolution
    displaced: bool = True


@dataclass(eq=False)
class Mesh:
    """Indexed triangle mesh keyed by global point ids.

    Attributes
    ----------
    keys : numpy.ndarray
        Global id of every point: support-point ids are non-negative,
        centroid ids negative. Ids may repeat before deduplication.
    points : numpy.ndarray
        World positions, shape ``(n, 3)``.
    triangles : numpy.ndarray
        Point indices, shape ``(m, 3)``, counterclockwise seen from outside.
    census : dict[int, int]
        Number of cycles per cycle length.
    provenance : Provenance | None
        Engine, mode and resolution.
    spacing : tuple[float, float, float]
        Voxel size of the source grid.
    """

    keys: np.ndarray
    points: np.ndarray
    triangles: np.ndarray
    census: dict[int, int] = field(default_factory=dict)
    provenance: Provenance | None = None
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @classmethod
    def empty(cls, **kwargs: object) -> Mesh:
        return cls(
            keys=np.empty(0, dtype=np.int64),
            points=np.empty((0, 3)),
            triangles=np.empty((0, 3), dtype=np.int64),
            **kwargs,  # type: ignore[arg-type]
        )

    @property
    def n_points(self) -> int:
        return len(self.keys)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def triangle_keys(self) -> np.ndarray:
        """Point ids of each triangle corner, shape ``(m, 3)``."""
        return self.keys[self.triangles]

    @functools.cached_property
    def component_labels(self) -> np.ndarray:
        """Connected-component label of each triangle.

        Triangles sharing a point id belong to one component.
        """
        if self.n_triangles == 0:
            return np.empty(0, dtype=np.int64)
        _, corner = np.unique(self.triangle_keys, return_inverse=True)
        corner = corner.reshape(-1, 3)
        n = int(corner.max()) + 1
        rows = np.concatenate([corner[:, 0], corner[:, 1]])
        cols = np.concatenate([corner[:, 1], corner[:, 2]])
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
        return labels[corner[:, 0]].astype(np.int64)

    @property
    def n_components(self) -> int:
        labels = self.component_labels
        return len(np.unique(labels))

    def reversed(self) -> Mesh:
        """The same mesh with every triangle flipped."""
        return Mesh(
            keys=self.keys,
            points=self.points,
            triangles=self.triangles[:, ::-1].copy(),
            census=dict(self.census),
            provenance=self.provenance,
            spacing=self.spacing,
        )


def support_positions(
    grid: ScalarGrid,
    iso: IsoConfig,
    keys: LatticeKeys,
    ids: ArrayLike,
    *,
    displace: bool = True,
) -> NDArray[np.float64]:
    """World positions of support points.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue.
    keys : LatticeKeys
        Id space of ``ids``.
    ids : ArrayLike
        Support-point ids.
    displace : bool, optional
        Slide the points to the isovalue; otherwise keep face centers.

    Returns
    -------
    numpy.ndarray
        Positions of shape ``(n, 3)``.
    """
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    spacing = np.asarray(grid.spacing)
    if not displace:
        return keys.decode(ids) / 2.0 * spacing
    active, inactive, t = support_geometry(grid, iso, keys, ids)
    return (active + t[:, None] * (inactive - active)) * spacing


def make_support_points(
    grid: ScalarGrid, iso: IsoConfig, ids: Iterable[int]
) -> list[SupportPoint]:
    """Undisplaced support points (``t = 0.5``) for the given ids."""
    keys = LatticeKeys.for_grid(grid)
    ids = np.fromiter(ids, dtype=np.int64)
    active, inactive, _ = support_geometry(grid, iso, keys, ids)
    centers = keys.decode(ids) / 2.0 * np.asarray(grid.spacing)
    return [
        SupportPoint(
            id=int(i),
            position=centers[n],
            range=RangeVector(VoxelIndex(*active[n].tolist()), VoxelIndex(*inactive[n].tolist())),
        )
        for n, i in enumerate(ids)
    ]


def displace_support_points(
    points: Sequence[SupportPoint], grid: ScalarGrid, iso: IsoConfig
) -> list[SupportPoint]:
    """Slide support points along their range vectors to the isovalue.

    Parameters
    ----------
    points : Sequence[SupportPoint]
        Points with valid range vectors.
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue.

    Returns
    -------
    list[SupportPoint]
        New points with ``t`` from linear interpolation. Points whose
        inactive voxel lies outside the domain keep ``t = 0.5``. Applying
        the function twice gives the same result.
    """
    if not points:
        return []
    keys = LatticeKeys.for_grid(grid)
    ids = np.array([p.id for p in points], dtype=np.int64)
    active, inactive, t = support_geometry(grid, iso, keys, ids)
    positions = (active + t[:, None] * (inactive - active)) * np.asarray(grid.spacing)
    return [
        SupportPoint(id=p.id, position=positions[n], range=p.range, t=float(t[n]))
        for n, p in enumerate(points)
    ]


def centroid_keys(keys: LatticeKeys, pivot: ArrayLike, following: ArrayLike) -> NDArray[np.int64]:
    """Negative ids for the centroids of cycles starting ``pivot -> following``.

    A directed support-point pair belongs to exactly one cycle, so the pair
    names the cycle.
    """
    pivot = np.asarray(pivot, dtype=np.int64)
    delta = keys.decode(following) - keys.decode(pivot) + 2
    if np.any((delta < 0) | (delta > 4)):
        msg = "consecutive cycle points are not neighbors in one 3-cell"
        raise InvariantError(msg)
    code = delta[..., 0] + 5 * delta[..., 1] + 25 * delta[..., 2]
    return -(1 + pivot * 125 + code)


def cycle_centroids(positions: NDArray[np.float64]) -> NDArray[np.float64]:
    """Centroids of point sets of shape ``(k, N, 3)``.

    Callers pass the points in increasing id order; the sum runs in that
    order so every engine computes bit-identical centroids.
    """
    acc = positions[:, 0].copy()
    for i in range(1, positions.shape[1]):
        acc = acc + positions[:, i]
    return acc / positions.shape[1]


def _rank(point: tuple[int, int, int]) -> tuple[int, int, int]:
    return (point[2], point[1], point[0])


def _blocked_chords(
    points: Sequence[tuple[int, int, int]], *, allow_diagonals: bool
) -> set[frozenset[int]]:
    """Chords that may not appear inside squares whose four points all lie on the cycle.

    A square on the high side of the vertex keeps the side through its
    lowest-ranked point, a square on the low side keeps the opposite side.
    The two cycles sharing a square then use disjoint chords inside it.
    """
    blocked: set[frozenset[int]] = set()
    for axis in range(3):
        for side in (0, 2):
            members = [i for i, p in enumerate(points) if p[axis] == side]
            if len(members) < 4:
                continue
            low = min(members, key=lambda i: _rank(points[i]))
            for i, j in itertools.combinations(members, 2):
                diagonal = any(points[i][b] == 1 == points[j][b] for b in range(3))
                if (low in (i, j)) != (side == 2) or (diagonal and not allow_diagonals):
                    blocked.add(frozenset((i, j)))
    return blocked


def _triangulate(n: int, blocked: set[frozenset[int]]) -> tuple[tuple[int, int, int], ...] | None:
    memo: dict[tuple[int, int], tuple[tuple[int, int, int], ...] | None] = {}

    def usable(i: int, j: int) -> bool:
        return j - i == 1 or frozenset((i, j)) not in blocked

    def solve(i: int, j: int) -> tuple[tuple[int, int, int], ...] | None:
        if j - i == 1:
            return ()
        if (i, j) not in memo:
            memo[i, j] = None
            for k in range(j - 1, i, -1):
                if not (usable(i, k) and usable(k, j)):
                    continue
                left, right = solve(i, k), solve(k, j)
                if left is not None and right is not None:
                    memo[i, j] = (*left, (i, k, j), *right)
                    break
        return memo[i, j]

    return solve(0, n - 1)


@functools.lru_cache(maxsize=4096)
def l_triangulation(local: tuple[tuple[int, int, int], ...]) -> tuple[tuple[int, int, int], ...]:
    """Triangles of an ``L`` decomposition as index triples into the cycle.

    Parameters
    ----------
    local : tuple of (int, int, int)
        Support points of a canonical cycle in cell-local doubled
        coordinates, every entry 0, 1 or 2 with the vertex at ``(1, 1, 1)``.

    Returns
    -------
    tuple of (int, int, int)
        ``N - 2`` triangles with the cycle's orientation, sorted. The fan from
        the first point is kept when its chords are allowed. A cycle and its
        reverse give the same triangles with opposite orientation.
    """
    n = len(local)
    if n == 3:
        return ((0, 1, 2),)
    order = [0, *range(n - 1, 0, -1)] if _rank(local[1]) > _rank(local[-1]) else list(range(n))
    points = [local[i] for i in order]
    for allow_diagonals in (False, True):
        found = _triangulate(n, _blocked_chords(points, allow_diagonals=allow_diagonals))
        if found is not None:
            break
    else:
        logger.warning("No edge-disjoint L triangulation for cycle %s; using a fan", local)
        found = tuple((0, i, i + 1) for i in range(1, n - 1))
    if order[1] != 1:
        found = tuple((order[a], order[c], order[b]) for a, b, c in found)
    return tuple(sorted(found))


def local_coordinates(coords: ArrayLike) -> NDArray[np.int64]:
    """Shift doubled coordinates of cycle points, shape ``(..., N, 3)``, into ``0..2``."""
    c = np.asarray(coords, dtype=np.int64)
    low = c.min(axis=-2, keepdims=True)
    return c - (low - low % 2)


def decompose_L(  # noqa: N802
    cycle: SurfaceCycle, keys: LatticeKeys | None = None
) -> list[Triangle]:
    """Triangulate a cycle without adding points.

    Parameters
    ----------
    cycle : SurfaceCycle
        Cycle of length N.
    keys : LatticeKeys, optional
        Id codec of the lattice, needed to place chords by
        :func:`l_triangulation`. Without it the cycle is fanned from its
        lowest support-point id.

    Returns
    -------
    list[Triangle]
        ``N - 2`` triangles with the cycle's orientation.
    """
    s = cycle.canonical().support
    if keys is None:
        return [Triangle((s[0], s[i], s[i + 1])) for i in range(1, len(s) - 1)]
    local = local_coordinates(keys.decode(np.asarray(s)))
    pattern = l_triangulation(tuple(map(tuple, local.tolist())))
    return [Triangle((s[a], s[b], s[c])) for a, b, c in pattern]


def l_triangle_keys(keys: LatticeKeys, ids: ArrayLike) -> NDArray[np.int64]:
    """``L`` triangles of equal-length canonical cycles given as rows of ids.

    Parameters
    ----------
    keys : LatticeKeys
        Id codec of the lattice.
    ids : ArrayLike
        Support-point ids of shape ``(k, N)``, each row a canonical cycle.

    Returns
    -------
    NDArray[np.int64]
        Triangle ids of shape ``(k * (N - 2), 3)``, grouped by cycle shape.
    """
    ids = np.asarray(ids, dtype=np.int64)
    n = ids.shape[1]
    local = local_coordinates(keys.decode(ids)).reshape(len(ids), 3 * n)
    shapes, which, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
    grouped = np.split(ids[np.argsort(which.ravel(), kind="stable")], np.cumsum(counts)[:-1])
    out = []
    for shape, rows in zip(shapes, grouped, strict=True):
        pattern = np.asarray(l_triangulation(tuple(map(tuple, shape.reshape(n, 3).tolist()))))
        out.append(rows[:, pattern].reshape(-1, 3))
    return np.concatenate(out)


def decompose_H(  # noqa: N802
    cycle: SurfaceCycle,
    positions: Mapping[int, ArrayLike],
    keys: LatticeKeys,
) -> tuple[list[Triangle], CentroidPoint | None]:
    """Split a cycle around the centroid of its displaced support points.

    Parameters
    ----------
    cycle : SurfaceCycle
        Cycle of length N.
    positions : Mapping[int, ArrayLike]
        Displaced position of every support point of the cycle.
    keys : LatticeKeys
        Id space used to name the centroid.

    Returns
    -------
    triangles : list[Triangle]
        One triangle for a 3-cycle, otherwise N triangles.
    centroid : CentroidPoint | None
        The added point, or None for a 3-cycle.
    """
    s = cycle.canonical().support
    if len(s) == 3:
        return [Triangle(s)], None
    ordered = np.array([positions[i] for i in sorted(s)], dtype=np.float64)
    center = cycle_centroids(ordered[None])[0]
    cid = int(centroid_keys(keys, s[0], s[1]))
    triangles = [Triangle((s[i], s[(i + 1) % len(s)], cid)) for i in range(len(s))]
    return triangles, CentroidPoint(id=cid, position=center)


def area_vectors(a: ArrayLike, b: ArrayLike, c: ArrayLike) -> NDArray[np.float64]:
    """Triangle area vectors ``(b - a) x (c - a) / 2``."""
    a = np.asarray(a, dtype=np.float64)
    return 0.5 * np.cross(np.asarray(b) - a, np.asarray(c) - a)


def cycle_total_normal(
    cycle: SurfaceCycle,
    triangles: Sequence[Triangle],
    positions: Mapping[int, ArrayLike],
) -> CycleNormal:
    """Sum the area vectors of a cycle's triangles.

    Parameters
    ----------
    cycle : SurfaceCycle
        The cycle.
    triangles : Sequence[Triangle]
        Its L or H decomposition.
    positions : Mapping[int, ArrayLike]
        Position of every corner id, centroids included.

    Returns
    -------
    CycleNormal
        Correctly rounded component sums, so reversing the cycle negates
        the result exactly; the anchor is the mean support point.
    """
    if len(triangles) == 1:
        a, b, c = (positions[i] for i in triangles[0].corners)
        d_sigma = area_vectors(a, b, c)
    else:
        parts = [area_vectors(*(positions[i] for i in t.corners)) for t in triangles]
        d_sigma = np.array([math.fsum(p[axis] for p in parts) for axis in range(3)])
    ordered = np.array([positions[i] for i in sorted(cycle.support)], dtype=np.float64)
    return CycleNormal(d_sigma=d_sigma, anchor=cycle_centroids(ordered[None])[0])


def census_of(lengths: Iterable[int]) -> dict[int, int]:
    return dict(sorted(Counter(lengths).items()))


def build_mesh(
    cycles: Sequence[SurfaceCycle],
    grid: ScalarGrid,
    iso: IsoConfig,
    resolution: Resolution,
    *,
    displace: bool = True,
    engine: str = "vesta-core",
    mode: ConnectivityMode = ConnectivityMode.DISCONNECT,
) -> Mesh:
    """Decompose surface cycles into a mesh with one point per id.

    Parameters
    ----------
    cycles : Sequence[SurfaceCycle]
        Traced cycles.
    grid : ScalarGrid
        The lattice the cycles were traced on.
    iso : IsoConfig
        Isovalue.
    resolution : Resolution
        ``L`` or ``H`` decomposition.
    displace : bool, optional
        Slide support points to the isovalue before decomposition.
    engine, mode : optional
        Recorded in the mesh provenance.

    Returns
    -------
    Mesh
        Points sorted by id, so negative centroid ids come first; triangles
        grouped by cycle length.
    """
    resolution = Resolution(resolution)
    provenance = Provenance(engine, ConnectivityMode(mode), resolution, displace)
    if not cycles:
        return Mesh.empty(provenance=provenance, spacing=grid.spacing)
    keys = LatticeKeys.for_grid(grid)
    census = census_of(len(c) for c in cycles)
    by_length: dict[int, list[tuple[int, ...]]] = {}
    for cycle in cycles:
        by_length.setdefault(len(cycle), []).append(cycle.canonical().support)

    support_ids = np.unique(np.concatenate([np.asarray(v).ravel() for v in by_length.values()]))
    support_xyz = support_positions(grid, iso, keys, support_ids, displace=displace)
    centroid_ids, centroid_xyz = [], []
    triangle_keys = []
    for n, rows in sorted(by_length.items()):
        ids = np.asarray(rows, dtype=np.int64)
        if n == 3:
            triangle_keys.append(ids)
            continue
        if resolution is Resolution.L:
            triangle_keys.append(l_triangle_keys(keys, ids))
            continue
        xyz = support_xyz[np.searchsorted(support_ids, np.sort(ids, axis=1))]
        cids = centroid_keys(keys, ids[:, 0], ids[:, 1])
        centroid_ids.append(cids)
        centroid_xyz.append(cycle_centroids(xyz))
        for i in range(n):
            triangle_keys.append(np.stack([ids[:, i], ids[:, (i + 1) % n], cids], axis=1))

    all_keys = np.concatenate([support_ids, *centroid_ids])
    all_points = np.concatenate([support_xyz, *centroid_xyz]) if centroid_xyz else support_xyz
    order = np.argsort(all_keys, kind="stable")
    all_keys = all_keys[order]
    all_points = all_points[order]
    tri = np.concatenate(triangle_keys)
    triangles = np.searchsorted(all_keys, tri)
    mesh = Mesh(
        keys=all_keys,
        points=all_points,
        triangles=triangles.astype(np.int64),
        census=census,
        provenance=provenance,
        spacing=grid.spacing,
    )
    logger.debug(
        "Built %s mesh: %d points, %d triangles", resolution, mesh.n_points, mesh.n_triangles
    )
    return mesh


def require_resolution(value: str) -> Resolution:
    try:
        return Resolution(value)
    except ValueError:
        msg = f"unknown resolution {value!r}; expected L or H"
        raise PreconditionError(msg) from None
