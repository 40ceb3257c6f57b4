"""Validation and measurement of extracted meshes.

Closedness is decided on global point ids, never on positions, so a mesh
cannot pass or fail because of where its points were displaced to.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import ChainMap, Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from voxshell.diconex import Contour2D
from voxshell.exceptions import (
    CycleCensusError,
    InvariantError,
    MeshNotClosedError,
    PreconditionError,
)
from voxshell.tessellate import Resolution, cycle_total_normal, decompose_H, decompose_L
from voxshell.vesta_core import VALID_CYCLE_LENGTHS, SurfaceCycle

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from numpy.typing import ArrayLike

    from voxshell.tessellate import Mesh
    from voxshell.volume import LatticeKeys

    Point = Sequence[float]

logger = logging.getLogger(__name__)

# Undisplaced points are multiples of 1 / (2N) voxels for cycle lengths N <= 12.
EXACT_SCALE = 55440


@dataclass(frozen=True)
class ClosedReport:
    """Directed edges that break closure, as point-id pairs."""

    closed: bool
    unmatched: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class ComponentStats:
    """Size, Euler characteristic and volume of one connected component."""

    label: int
    vertices: int
    edges: int
    faces: int
    volume: float

    @property
    def euler(self) -> int:
        return self.vertices - self.edges + self.faces


@dataclass(frozen=True)
class NormalBalance:
    """Summed cycle area vectors of one component and their total length."""

    total: np.ndarray = field(compare=False)
    scale: float

    @property
    def relative(self) -> float:
        return float(np.linalg.norm(self.total)) / self.scale if self.scale else 0.0


@dataclass(frozen=True)
class ValidationReport:
    """Everything :func:`validate` measures about a mesh."""

    closed: bool
    unmatched: tuple[tuple[int, int], ...]
    components: tuple[ComponentStats, ...]
    degenerate: int
    census: dict[int, int]
    signed_volume: float | None
    intersections: tuple[tuple[int, int], ...] | None = None

    def to_text(self) -> str:
        """Render ``key: value`` lines."""
        lines = [
            f"closed: {str(self.closed).lower()}",
            f"unmatched_edges: {len(self.unmatched)}",
            f"components: {len(self.components)}",
        ]
        for c in self.components:
            lines.append(
                f"component_{c.label}: V={c.vertices} E={c.edges} F={c.faces} "
                f"chi={c.euler} volume={c.volume:.6g}"
            )
        lines.append(f"degenerate_triangles: {self.degenerate}")
        census = ", ".join(f"{n}:{k}" for n, k in sorted(self.census.items()))
        lines.append(f"census: {census}")
        if self.signed_volume is not None:
            lines.append(f"signed_volume: {self.signed_volume:.12g}")
        if self.intersections is not None:
            lines.append(f"self_intersections: {len(self.intersections)}")
        return "\n".join(lines) + "\n"

    @property
    def ok(self) -> bool:
        return self.closed and not self.intersections


def _directed_edges(triangle_keys: np.ndarray) -> np.ndarray:
    t = triangle_keys
    return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])


def check_closed(mesh: Mesh) -> ClosedReport:
    """Check that every directed edge has exactly one antiparallel partner.

    Parameters
    ----------
    mesh : Mesh
        Any mesh; edges are identified by point ids.

    Returns
    -------
    ClosedReport
        ``closed`` when each directed edge occurs once and its reverse
        occurs once; otherwise the offending edges, sorted.
    """
    if mesh.n_triangles == 0:
        return ClosedReport(closed=True)
    edges = _directed_edges(mesh.triangle_keys)
    ids, dense = np.unique(edges, return_inverse=True)
    dense = dense.reshape(-1, 2)
    n = len(ids)
    code = dense[:, 0] * n + dense[:, 1]
    reverse = dense[:, 1] * n + dense[:, 0]
    values, counts = np.unique(code, return_counts=True)
    pos = np.searchsorted(values, reverse)
    pos = np.minimum(pos, len(values) - 1)
    reverse_count = np.where(values[pos] == reverse, counts[pos], 0)
    own_count = counts[np.searchsorted(values, code)]
    bad = (own_count != 1) | (reverse_count != 1)
    if not np.any(bad):
        return ClosedReport(closed=True)
    unmatched = sorted({(int(a), int(b)) for a, b in ids[dense[bad]].tolist()})
    return ClosedReport(closed=False, unmatched=tuple(unmatched))


def _triple_products(mesh: Mesh) -> np.ndarray:
    p = mesh.points[mesh.triangles]
    return np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))


def signed_volume(mesh: Mesh) -> float:
    """Enclosed volume in voxel units, positive for outward orientation.

    Raises
    ------
    MeshNotClosedError
        If the mesh has unmatched edges.
    """
    report = check_closed(mesh)
    if not report.closed:
        msg = f"signed volume needs a closed mesh; {len(report.unmatched)} edges are unmatched"
        logger.error(msg)
        raise MeshNotClosedError(msg)
    return math.fsum(_triple_products(mesh).tolist()) / 6.0 / math.prod(mesh.spacing)


def component_stats(mesh: Mesh) -> list[ComponentStats]:
    """Per-component V, E, F and volume, in label order."""
    if mesh.n_triangles == 0:
        return []
    labels = mesh.component_labels
    keys = mesh.triangle_keys
    products = _triple_products(mesh)
    voxel = math.prod(mesh.spacing)
    stats = []
    for label in np.unique(labels).tolist():
        tri = keys[labels == label]
        undirected = np.sort(_directed_edges(tri), axis=1)
        stats.append(
            ComponentStats(
                label=int(label),
                vertices=len(np.unique(tri)),
                edges=len(np.unique(undirected, axis=0)),
                faces=len(tri),
                volume=math.fsum(products[labels == label].tolist()) / 6.0 / voxel,
            )
        )
    return stats


def count_degenerate(mesh: Mesh, *, tolerance: float = 1e-12) -> int:
    """Triangles with a repeated point id or (near) zero area."""
    if mesh.n_triangles == 0:
        return 0
    keys = mesh.triangle_keys
    repeated = (
        (keys[:, 0] == keys[:, 1]) | (keys[:, 1] == keys[:, 2]) | (keys[:, 0] == keys[:, 2])
    )
    p = mesh.points[mesh.triangles] / np.asarray(mesh.spacing)
    area = np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    return int(np.count_nonzero(repeated | (area <= tolerance)))


def cycle_census(cycles: Iterable[SurfaceCycle | Sequence[int] | int]) -> dict[int, int]:
    """Histogram of cycle lengths.

    Parameters
    ----------
    cycles : Iterable
        Cycles, id sequences or bare lengths.

    Returns
    -------
    dict[int, int]
        Count per length, sorted by length.

    Raises
    ------
    CycleCensusError
        For a length outside {3, ..., 9, 12}.
    """
    counts: Counter[int] = Counter()
    for cycle in cycles:
        n = cycle if isinstance(cycle, int) else len(cycle)
        if n not in VALID_CYCLE_LENGTHS:
            msg = f"surface cycle of length {n} cannot exist"
            raise CycleCensusError(msg)
        counts[n] += 1
    return dict(sorted(counts.items()))


def _orient3d(a: Point, b: Point, c: Point, d: Point) -> int | float:
    bx, by, bz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    cx, cy, cz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    dx, dy, dz = d[0] - a[0], d[1] - a[1], d[2] - a[2]
    return bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _orient2d(a: Point, b: Point, c: Point) -> int:
    return _sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _segments_meet_2d(p: Point, q: Point, r: Point, s: Point) -> bool:
    o1, o2 = _orient2d(p, q, r), _orient2d(p, q, s)
    o3, o4 = _orient2d(r, s, p), _orient2d(r, s, q)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True

    def within(a: Point, b: Point, c: Point) -> bool:
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    return (
        (o1 == 0 and within(p, q, r))
        or (o2 == 0 and within(p, q, s))
        or (o3 == 0 and within(r, s, p))
        or (o4 == 0 and within(r, s, q))
    )


def _inside_2d(tri: Sequence[Point], p: Point) -> bool:
    signs = {_orient2d(tri[i], tri[(i + 1) % 3], p) for i in range(3)}
    return not (1 in signs and -1 in signs)


def _coplanar_meet(t1: Sequence[Point], t2: Sequence[Point], normal: Point) -> bool:
    drop = max(range(3), key=lambda k: abs(normal[k]))
    keep = [k for k in range(3) if k != drop]
    a = [(p[keep[0]], p[keep[1]]) for p in t1]
    b = [(p[keep[0]], p[keep[1]]) for p in t2]
    for i, j in itertools.product(range(3), repeat=2):
        if _segments_meet_2d(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3]):
            return True
    return _inside_2d(b, a[0]) or _inside_2d(a, b[0])


def _segment_hits_triangle(p: Point, q: Point, tri: Sequence[Point]) -> bool:
    a, b, c = tri
    o1 = _sign(_orient3d(a, b, c, p))
    o2 = _sign(_orient3d(a, b, c, q))
    if o1 * o2 > 0 or (o1 == 0 and o2 == 0):
        return False
    s = {_sign(_orient3d(p, q, a, b)), _sign(_orient3d(p, q, b, c)), _sign(_orient3d(p, q, c, a))}
    return not (1 in s and -1 in s)


def triangles_intersect(t1: Sequence[Point], t2: Sequence[Point]) -> bool:
    """Closed triangle-triangle intersection by orientation signs.

    Exact for integer coordinates; best effort for floats. Degenerate
    triangles never intersect.
    """
    n1 = _normal(t1)
    n2 = _normal(t2)
    if not any(n1) or not any(n2):
        return False
    s = [_sign(_orient3d(*t2, p)) for p in t1]
    if all(x > 0 for x in s) or all(x < 0 for x in s):
        return False
    if all(x == 0 for x in s):
        return _coplanar_meet(t1, t2, n2)
    r = [_sign(_orient3d(*t1, p)) for p in t2]
    if all(x > 0 for x in r) or all(x < 0 for x in r):
        return False
    return any(_segment_hits_triangle(t1[i], t1[(i + 1) % 3], t2) for i in range(3)) or any(
        _segment_hits_triangle(t2[i], t2[(i + 1) % 3], t1) for i in range(3)
    )


def _normal(t: Sequence[Point]) -> tuple[float, float, float]:
    u = [t[1][k] - t[0][k] for k in range(3)]
    v = [t[2][k] - t[0][k] for k in range(3)]
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _candidate_pairs(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Pairs of triangles whose bounding boxes share a grid cell."""
    first = np.floor(lo).astype(np.int64)
    last = np.floor(hi).astype(np.int64)
    span = int((last - first).max()) + 1 if len(lo) else 0
    cells, owners = [], []
    for d in itertools.product(range(span), repeat=3):
        cell = first + np.asarray(d)
        ok = np.all(cell <= last, axis=1)
        cells.append(cell[ok])
        owners.append(np.flatnonzero(ok))
    if not cells:
        return np.empty((0, 2), dtype=np.int64)
    cell = np.concatenate(cells)
    owner = np.concatenate(owners)
    _, bucket = np.unique(cell, axis=0, return_inverse=True)
    bucket = bucket.reshape(-1)
    order = np.lexsort((owner, bucket))
    bucket = bucket[order]
    owner = owner[order]
    starts = np.flatnonzero(np.r_[True, bucket[1:] != bucket[:-1]])
    stops = np.r_[starts[1:], len(bucket)]
    pairs = []
    for start, stop in zip(starts.tolist(), stops.tolist(), strict=True):
        if stop - start < 2:
            continue
        i, j = np.triu_indices(stop - start, k=1)
        members = owner[start:stop]
        pairs.append(np.stack([members[i], members[j]], axis=1))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(np.concatenate(pairs), axis=0)


def _plane_separated(p: np.ndarray, pairs: np.ndarray, tolerance: float) -> np.ndarray:
    """Pairs where one triangle lies strictly on one side of the other's plane."""

    def side(owner: np.ndarray, other: np.ndarray) -> np.ndarray:
        a, b, c = p[owner, 0], p[owner, 1], p[owner, 2]
        n = np.cross(b - a, c - a)
        d = np.einsum("ikj,ij->ik", p[other] - a[:, None, :], n)
        scale = tolerance * (1.0 + np.linalg.norm(n, axis=1))[:, None]
        return np.all(d > scale, axis=1) | np.all(d < -scale, axis=1)

    return side(pairs[:, 0], pairs[:, 1]) | side(pairs[:, 1], pairs[:, 0])


def self_intersect_bruteforce(mesh: Mesh) -> list[tuple[int, int]]:
    """All pairs of intersecting triangles that share no point id.

    Parameters
    ----------
    mesh : Mesh
        A desk-scale mesh.

    Returns
    -------
    list[tuple[int, int]]
        Triangle index pairs ``(i, j)`` with ``i < j``. Undisplaced meshes
        are tested in exact integer arithmetic; other meshes get a
        floating-point report.
    """
    if mesh.n_triangles < 2:
        return []
    p = mesh.points[mesh.triangles] / np.asarray(mesh.spacing)
    pairs = _candidate_pairs(p.min(axis=1), p.max(axis=1))
    if len(pairs) == 0:
        return []
    keys = mesh.triangle_keys
    shared = np.any(keys[pairs[:, 0]][:, :, None] == keys[pairs[:, 1]][:, None, :], axis=(1, 2))
    pairs = pairs[~shared]
    lo, hi = p.min(axis=1), p.max(axis=1)
    overlap = np.all(
        (lo[pairs[:, 0]] <= hi[pairs[:, 1]]) & (lo[pairs[:, 1]] <= hi[pairs[:, 0]]), axis=1
    )
    pairs = pairs[overlap]
    pairs = pairs[~_plane_separated(p, pairs, 1e-9)]

    scaled = p * EXACT_SCALE
    exact = np.rint(scaled)
    if np.all(np.abs(scaled - exact) < 1e-6):
        coords = [[tuple(int(x) for x in v) for v in t] for t in exact.astype(np.int64).tolist()]
    else:
        logger.info("Points are displaced; self-intersection test uses floating point")
        coords = [[tuple(v) for v in t] for t in p.tolist()]
    hits = [
        (int(i), int(j))
        for i, j in pairs.tolist()
        if triangles_intersect(coords[i], coords[j])
    ]
    logger.debug("Self-intersection test: %d candidate pairs, %d hits", len(pairs), len(hits))
    return sorted(hits)


def slice_mesh(mesh: Mesh, axis: int, layer: int) -> list[Contour2D]:
    """Intersect a mesh with the plane through the voxel centers of a layer.

    Parameters
    ----------
    mesh : Mesh
        Undisplaced mesh.
    axis : int
        Normal axis of the plane.
    layer : int
        Voxel layer along ``axis``.

    Returns
    -------
    list[Contour2D]
        Oriented loops in the plane spanned by axes ``(axis + 1, axis + 2)``
        mod 3, shapes counterclockwise. Points exactly on the plane carry
        their doubled in-plane coordinates as keys; interpolated points
        carry ``None``.

    Raises
    ------
    PreconditionError
        If ``axis`` is not 0, 1 or 2.
    InvariantError
        If the segments do not chain into simple loops.
    """
    if axis not in (0, 1, 2):
        msg = f"axis must be 0, 1 or 2, got {axis}"
        raise PreconditionError(msg)
    if mesh.n_triangles == 0:
        return []
    u, v = (axis + 1) % 3, (axis + 2) % 3
    grid_points = mesh.points / np.asarray(mesh.spacing)
    height = grid_points[:, axis]
    below = height < layer
    on_plane = height == layer
    tri_below = below[mesh.triangles]
    mixed = np.flatnonzero(tri_below.any(axis=1) & ~tri_below.all(axis=1))

    def crossing(a: int, b: int) -> tuple[tuple, tuple[float, float], tuple[int, int] | None]:
        for idx in (a, b):
            if on_plane[idx]:
                key = mesh.keys[idx]
                doubled = np.rint(2 * grid_points[idx]).astype(np.int64)
                return ("v", int(key)), (grid_points[idx, u], grid_points[idx, v]), (
                    int(doubled[u]),
                    int(doubled[v]),
                )
        t = (layer - height[a]) / (height[b] - height[a])
        point = grid_points[a] + t * (grid_points[b] - grid_points[a])
        ka, kb = sorted((int(mesh.keys[a]), int(mesh.keys[b])))
        return ("e", ka, kb), (point[u], point[v]), None

    following: dict[tuple, tuple] = {}
    info: dict[tuple, tuple] = {}
    for t in mixed.tolist():
        corners = mesh.triangles[t].tolist()
        start = end = None
        for i in range(3):
            a, b = corners[i], corners[(i + 1) % 3]
            if not below[a] and below[b]:
                start = crossing(a, b)
            elif below[a] and not below[b]:
                end = crossing(a, b)
        if start is None or end is None:
            msg = f"triangle {t} crosses the plane without two crossing edges"
            raise InvariantError(msg)
        if start[0] == end[0]:
            continue
        if start[0] in following:
            msg = f"slice point {start[0]} starts two segments"
            raise InvariantError(msg)
        following[start[0]] = end[0]
        info[start[0]] = start[1:]
        info[end[0]] = end[1:]

    contours = []
    seen: set[tuple] = set()
    for first in sorted(following):
        if first in seen:
            continue
        loop = []
        node = first
        while node not in seen:
            seen.add(node)
            loop.append(node)
            if node not in following:
                msg = f"slice loop is open at {node}"
                raise InvariantError(msg)
            node = following[node]
        if node != first:
            msg = f"slice point {node} reached twice"
            raise InvariantError(msg)
        points = np.array([info[n][0] for n in loop], dtype=np.float64)
        keys = tuple(info[n][1] for n in loop)
        contours.append(Contour2D(keys=keys, points=points))
    return contours


def total_normal_sums(
    cycles: Sequence[SurfaceCycle],
    positions: Mapping[int, ArrayLike],
    keys: LatticeKeys,
    resolution: Resolution = Resolution.L,
) -> list[NormalBalance]:
    """Sum cycle area vectors over each connected set of cycles.

    Parameters
    ----------
    cycles : Sequence[SurfaceCycle]
        Cycles of a closed surface.
    positions : Mapping[int, ArrayLike]
        Position of every support point.
    keys : LatticeKeys
        Id space, used to name H-resolution centroids.
    resolution : Resolution, optional
        Decomposition the area vectors are taken from.

    Returns
    -------
    list[NormalBalance]
        One entry per component; the totals vanish for closed surfaces.
    """
    if not cycles:
        return []
    ids = np.unique(np.concatenate([np.asarray(c.support) for c in cycles]))
    rows, cols = [], []
    for n, cycle in enumerate(cycles):
        dense = np.searchsorted(ids, cycle.support)
        rows.extend([n] * len(dense))
        cols.extend(dense.tolist())
    incidence = coo_matrix(
        (np.ones(len(rows)), (rows, np.asarray(cols) + len(cycles))),
        shape=(len(cycles) + len(ids),) * 2,
    )
    _, labels = connected_components(incidence, directed=False)

    vectors: dict[int, list[np.ndarray]] = {}
    for n, cycle in enumerate(cycles):
        if Resolution(resolution) is Resolution.H:
            triangles, centroid = decompose_H(cycle, positions, keys)
            extra = {} if centroid is None else {centroid.id: centroid.position}
            where: Mapping[int, ArrayLike] = ChainMap(extra, positions)
        else:
            triangles, where = decompose_L(cycle, keys), positions
        normal = cycle_total_normal(cycle, triangles, where)
        vectors.setdefault(int(labels[n]), []).append(normal.d_sigma)
    balances = []
    for label in sorted(vectors):
        parts = vectors[label]
        total = np.array([math.fsum(p[k] for p in parts) for k in range(3)])
        scale = math.fsum(float(np.linalg.norm(p)) for p in parts)
        balances.append(NormalBalance(total=total, scale=scale))
    return balances


def validate(mesh: Mesh, *, intersections: bool = False) -> ValidationReport:
    """Assemble a full report for a mesh.

    Parameters
    ----------
    mesh : Mesh
        The mesh to check.
    intersections : bool, optional
        Also run the brute-force self-intersection test.

    Returns
    -------
    ValidationReport
        The signed volume is only reported for closed meshes.
    """
    closed = check_closed(mesh)
    volume = signed_volume(mesh) if closed.closed and mesh.n_triangles else None
    if not closed.closed:
        logger.warning("Mesh is open: %d unmatched directed edges", len(closed.unmatched))
    return ValidationReport(
        closed=closed.closed,
        unmatched=closed.unmatched,
        components=tuple(component_stats(mesh)),
        degenerate=count_degenerate(mesh),
        census=dict(mesh.census),
        signed_volume=volume,
        intersections=tuple(self_intersect_bruteforce(mesh)) if intersections else None,
    )
