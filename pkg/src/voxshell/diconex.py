"""Dilated contours of 2D pixel grids.

Every active pixel edge that faces an inactive pixel becomes an initial
contour vector with its pixel on the left. Linking the vectors head to tail
gives closed contours: shapes run counterclockwise and holes clockwise.
Where two active pixels touch only at a corner, two vectors enter and two
leave the corner and the connectivity mode picks the successor.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from voxshell.exceptions import InvariantError, PreconditionError
from voxshell.volume import ConnectivityMode, interpolation_parameters, mean4

if TYPE_CHECKING:
    from collections.abc import Sequence

    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)

Corner = tuple[int, int]

# (normal, tangent) per exposed side; the tangent keeps the owner on the left.
_SIDES = (
    ((1, 0), (0, 1)),
    ((0, 1), (-1, 0)),
    ((-1, 0), (0, -1)),
    ((0, -1), (1, 0)),
)


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """Immutable 2D lattice of pixel values indexed ``values[x, y]``."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, copy=True)
        if values.dtype == np.bool_:
            values = values.astype(np.uint8)
        if values.ndim != 2 or 0 in values.shape:
            msg = f"values must be a non-empty 2D array, got shape {values.shape}"
            raise PreconditionError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_slice(cls, grid: ScalarGrid, axis: int, layer: int) -> PixelGrid:
        """Take the principal-plane layer of a 3D grid.

        Parameters
        ----------
        grid : ScalarGrid
            Source volume.
        axis : int
            Axis normal to the plane.
        layer : int
            Voxel layer along ``axis``.

        Returns
        -------
        PixelGrid
            Pixels over the two following axes ``(axis + 1, axis + 2) mod 3``,
            so the plane keeps the orientation of the volume.
        """
        if axis not in (0, 1, 2) or not 0 <= layer < grid.dims[axis]:
            msg = f"no layer {layer} along axis {axis} in a {grid.dims} grid"
            raise PreconditionError(msg)
        plane = np.take(grid.values, layer, axis=axis)
        if axis == 1:
            plane = plane.T
        return cls(plane)

    @property
    def dims(self) -> tuple[int, int]:
        nx, ny = self.values.shape
        return (nx, ny)

    def contains(self, p: tuple[int, int]) -> bool:
        return 0 <= p[0] < self.dims[0] and 0 <= p[1] < self.dims[1]

    def padded_active(self, iso: IsoConfig) -> np.ndarray:
        return np.pad(self.values >= iso.isovalue, 1, mode="constant", constant_values=False)


@dataclass(frozen=True)
class InitialContourVector:
    """Oriented pixel edge between an active owner and an inactive pixel.

    ``start`` and ``end`` are lattice corners in doubled coordinates.
    """

    start: Corner
    end: Corner
    owner: tuple[int, int]

    @property
    def midpoint(self) -> Corner:
        """Doubled coordinates of the edge midpoint (the support point)."""
        return ((self.start[0] + self.end[0]) // 2, (self.start[1] + self.end[1]) // 2)

    @property
    def normal(self) -> tuple[int, int]:
        """Unit step from the owner to the inactive pixel."""
        mx, my = self.midpoint
        return (mx - 2 * self.owner[0], my - 2 * self.owner[1])

    @property
    def inactive(self) -> tuple[int, int]:
        nx, ny = self.normal
        return (self.owner[0] + nx, self.owner[1] + ny)


@dataclass(frozen=True, eq=False)
class Contour2D:
    """Closed polygon through support points.

    Attributes
    ----------
    keys : tuple
        Doubled lattice coordinates of each support point, or ``None`` for
        points that do not sit on the lattice.
    points : numpy.ndarray
        Positions in pixel units, shape ``(n, 2)``.
    icvs : tuple[InitialContourVector, ...]
        The vectors the contour was traced from, if any.
    """

    keys: tuple[Corner | None, ...]
    points: np.ndarray
    icvs: tuple[InitialContourVector, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for counterclockwise contours."""
        x = self.points[:, 0]
        y = self.points[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def orientation(self) -> int:
        """+1 for a shape, -1 for a hole."""
        return 1 if self.signed_area > 0 else -1


def collect_icvs(grid: PixelGrid, iso: IsoConfig) -> list[InitialContourVector]:
    """Collect one vector per (active pixel, inactive 4-neighbor) pair.

    Parameters
    ----------
    grid : PixelGrid
        The image.
    iso : IsoConfig
        Isovalue.

    Returns
    -------
    list[InitialContourVector]
        Sorted by midpoint, lowest ``y`` then ``x`` first.
    """
    padded = grid.padded_active(iso)
    active = padded[1:-1, 1:-1]
    nx, ny = grid.dims
    icvs = []
    for (dx, dy), (tx, ty) in _SIDES:
        neighbor = padded[1 + dx : 1 + dx + nx, 1 + dy : 1 + dy + ny]
        for px, py in np.argwhere(active & ~neighbor).tolist():
            mx, my = 2 * px + dx, 2 * py + dy
            icvs.append(
                InitialContourVector(
                    start=(mx - tx, my - ty), end=(mx + tx, my + ty), owner=(px, py)
                )
            )
    icvs.sort(key=lambda icv: (icv.midpoint[1], icv.midpoint[0]))
    return icvs


def _corner_connects(corner: Corner, grid: PixelGrid, threshold: float) -> bool:
    cx, cy = corner
    x0, y0 = (cx - 1) // 2, (cy - 1) // 2
    quad = np.array(
        [
            grid.values[x0, y0],
            grid.values[x0 + 1, y0],
            grid.values[x0 + 1, y0 + 1],
            grid.values[x0, y0 + 1],
        ],
        dtype=np.float64,
    )
    return bool(mean4(quad) >= threshold)


def link_contours(
    icvs: Sequence[InitialContourVector],
    mode: ConnectivityMode,
    grid: PixelGrid,
    iso: IsoConfig,
) -> list[Contour2D]:
    """Link initial contour vectors head to tail into closed contours.

    Parameters
    ----------
    icvs : Sequence[InitialContourVector]
        Output of :func:`collect_icvs`.
    mode : ConnectivityMode
        Successor rule at corners shared by two diagonal active pixels:
        turn around the same pixel (disconnect), cross to the other pixel
        (connect), or connect when the four-pixel average reaches the
        threshold (mixed).
    grid : PixelGrid
        The image, needed by mixed mode.
    iso : IsoConfig
        Isovalue and mixed-mode threshold.

    Returns
    -------
    list[Contour2D]
        Contours in order of their lowest vector; support points at the
        undisplaced edge midpoints.

    Raises
    ------
    InvariantError
        If a vector has no successor or is reached twice.
    """
    mode = ConnectivityMode(mode)
    by_start: defaultdict[Corner, list[int]] = defaultdict(list)
    for idx, icv in enumerate(icvs):
        by_start[icv.start].append(idx)

    def successor(idx: int) -> int:
        icv = icvs[idx]
        outs = by_start.get(icv.end, [])
        if len(outs) == 1:
            return outs[0]
        if len(outs) != 2:
            msg = f"corner {icv.end} has {len(outs)} outgoing contour vectors"
            raise InvariantError(msg)
        if mode is ConnectivityMode.MIXED:
            connect = _corner_connects(icv.end, grid, iso.poa_threshold)
        else:
            connect = mode is ConnectivityMode.CONNECT
        same = [o for o in outs if icvs[o].owner == icv.owner]
        other = [o for o in outs if icvs[o].owner != icv.owner]
        if len(same) != 1 or len(other) != 1:
            msg = f"corner {icv.end} is not a point of ambiguity"
            raise InvariantError(msg)
        return other[0] if connect else same[0]

    visited = [False] * len(icvs)
    contours = []
    for first in range(len(icvs)):
        if visited[first]:
            continue
        chain = []
        idx = first
        while not visited[idx]:
            visited[idx] = True
            chain.append(idx)
            idx = successor(idx)
        if idx != first:
            msg = f"contour vector {icvs[idx]} reached twice"
            raise InvariantError(msg)
        members = tuple(icvs[i] for i in chain)
        keys = tuple(icv.midpoint for icv in members)
        contours.append(
            Contour2D(keys=keys, points=np.asarray(keys, dtype=np.float64) / 2.0, icvs=members)
        )
    logger.debug("Linked %d vectors into %d contours (%s)", len(icvs), len(contours), mode)
    return contours


def displace_contour(contour: Contour2D, grid: PixelGrid, iso: IsoConfig) -> Contour2D:
    """Slide each support point along its range vector to the isovalue.

    Parameters
    ----------
    contour : Contour2D
        A contour from :func:`link_contours`.
    grid : PixelGrid
        The image.
    iso : IsoConfig
        Isovalue.

    Returns
    -------
    Contour2D
        Same keys, displaced points. Edges on the image border keep their
        midpoints.
    """
    if not contour.icvs:
        return contour
    owners = np.array([icv.owner for icv in contour.icvs])
    normals = np.array([icv.normal for icv in contour.icvs])
    far = owners + normals
    inside = (far >= 0).all(axis=1) & (far < np.asarray(grid.dims)).all(axis=1)
    t = np.full(len(owners), 0.5)
    if np.any(inside):
        fa = grid.values[owners[inside, 0], owners[inside, 1]]
        fi = grid.values[far[inside, 0], far[inside, 1]]
        t[inside] = interpolation_parameters(fa, fi, iso.isovalue)
    points = owners + t[:, None] * normals
    return Contour2D(keys=contour.keys, points=points, icvs=contour.icvs)


def extract_contours(
    grid: PixelGrid,
    iso: IsoConfig,
    mode: ConnectivityMode = ConnectivityMode.DISCONNECT,
    *,
    displace: bool = True,
) -> list[Contour2D]:
    """Collect, link and optionally displace the contours of an image."""
    contours = link_contours(collect_icvs(grid, iso), mode, grid, iso)
    if displace:
        contours = [displace_contour(c, grid, iso) for c in contours]
    return contours
