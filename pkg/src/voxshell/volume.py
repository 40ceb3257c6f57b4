"""Scalar lattices, voxel activity, range vectors and interpolation.

Every engine addresses the lattice in *doubled* integer coordinates. The
center of voxel ``(i, j, k)`` sits at ``(2i, 2j, 2k)``, a boundary-face
center between two 6-neighbors has exactly one odd coordinate, and the
midpoint of a voxel edge has exactly two. Doubled coordinates make every
construction point of the surface an exact integer, so paths meet without
floating-point comparison.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from voxshell.exceptions import PreconditionError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

EdgeKey = tuple[int, int, int]


class ValueKind(enum.StrEnum):
    """Storage type of the scalar values."""

    U8 = "u8"
    U16 = "u16"
    F32 = "f32"

    @property
    def dtype(self) -> np.dtype:
        """Little-endian numpy dtype of this kind."""
        return np.dtype({"u8": "<u1", "u16": "<u2", "f32": "<f4"}[self.value])


class ConnectivityMode(enum.StrEnum):
    """Policy for points of ambiguity."""

    DISCONNECT = "disconnect"
    CONNECT = "connect"
    MIXED = "mixed"


class VoxelIndex(NamedTuple):
    """Integer voxel address; may lie one step outside the domain."""

    i: int
    j: int
    k: int


@dataclass(frozen=True)
class IsoConfig:
    """Isovalue and the point-of-ambiguity threshold for mixed mode.

    Attributes
    ----------
    isovalue : float
        A voxel is active when its value is greater than or equal to this.
    mixed_threshold : float | None
        Edge-average threshold for mixed mode. Defaults to ``isovalue``.
    """

    isovalue: float
    mixed_threshold: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.isovalue):
            msg = f"isovalue must be finite, got {self.isovalue}"
            raise PreconditionError(msg)
        if self.mixed_threshold is not None and not math.isfinite(self.mixed_threshold):
            msg = f"mixed_threshold must be finite, got {self.mixed_threshold}"
            raise PreconditionError(msg)

    @property
    def poa_threshold(self) -> float:
        """Threshold that an edge average must reach to connect."""
        if self.mixed_threshold is None:
            return self.isovalue
        return self.mixed_threshold


def _kind_for(values: np.ndarray) -> ValueKind:
    if np.issubdtype(values.dtype, np.floating):
        return ValueKind.F32
    if values.size and (values.min() < 0 or values.max() > np.iinfo(np.uint16).max):
        return ValueKind.F32
    if values.size and values.max() > np.iinfo(np.uint8).max:
        return ValueKind.U16
    return ValueKind.U8


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    """Immutable 3D lattice of voxel values.

    Attributes
    ----------
    values : numpy.ndarray
        Values indexed ``values[i, j, k]``, shape ``(nx, ny, nz)``.
    spacing : tuple[float, float, float]
        World size of one voxel step along x, y and z.
    value_kind : ValueKind | None
        Storage kind. Inferred from ``values`` when omitted.

    Notes
    -----
    Voxels outside the domain are virtual and always inactive.
    """

    values: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    value_kind: ValueKind | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.dtype == np.bool_:
            values = values.astype(np.uint8)
        if values.ndim != 3 or 0 in values.shape:
            msg = f"values must be a non-empty 3D array, got shape {values.shape}"
            raise PreconditionError(msg)
        kind = ValueKind(self.value_kind) if self.value_kind is not None else _kind_for(values)
        values = np.array(values, dtype=kind.dtype.newbyteorder("="), copy=True)
        values.setflags(write=False)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(math.isfinite(s) and s > 0 for s in spacing):
            msg = f"spacing must be three positive numbers, got {self.spacing}"
            raise PreconditionError(msg)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "value_kind", kind)

    @classmethod
    def from_flat(
        cls,
        flat: ArrayLike,
        dims: tuple[int, int, int],
        value_kind: ValueKind = ValueKind.U8,
        spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
    ) -> ScalarGrid:
        """Build a grid from values stored x-fastest, then y, then z.

        Parameters
        ----------
        flat : ArrayLike
            ``nx * ny * nz`` values.
        dims : tuple[int, int, int]
            ``(nx, ny, nz)``.
        value_kind : ValueKind, optional
            Storage kind of the values.
        spacing : tuple[float, float, float], optional
            Voxel size along each axis.

        Returns
        -------
        ScalarGrid
            The reshaped grid.

        Raises
        ------
        PreconditionError
            If the number of values does not match ``dims``.
        """
        nx, ny, nz = dims
        data = np.asarray(flat, dtype=ValueKind(value_kind).dtype)
        if min(dims) < 1 or data.size != nx * ny * nz:
            msg = f"{data.size} values do not fill a {nx}x{ny}x{nz} grid"
            raise PreconditionError(msg)
        values = data.reshape(nz, ny, nx).transpose(2, 1, 0)
        return cls(values, spacing=spacing, value_kind=value_kind)

    @property
    def dims(self) -> tuple[int, int, int]:
        """Grid size ``(nx, ny, nz)``."""
        nx, ny, nz = self.values.shape
        return (nx, ny, nz)

    def flat_values(self) -> np.ndarray:
        """Values in x-fastest order."""
        return self.values.transpose(2, 1, 0).ravel()

    def contains(self, v: VoxelIndex | tuple[int, int, int]) -> bool:
        """Return whether ``v`` addresses a voxel inside the domain."""
        return all(0 <= c < n for c, n in zip(v, self.dims, strict=True))

    def value(self, v: VoxelIndex | tuple[int, int, int]) -> float:
        """Return the value of an in-domain voxel.

        Raises
        ------
        PreconditionError
            If ``v`` lies outside the domain.
        """
        if not self.contains(v):
            msg = f"voxel {tuple(v)} lies outside a {self.dims} grid"
            raise PreconditionError(msg)
        return float(self.values[tuple(v)])

    def active_mask(self, iso: IsoConfig) -> np.ndarray:
        """Boolean mask of active voxels, shape ``(nx, ny, nz)``."""
        return self.values >= iso.isovalue

    def padded_active(self, iso: IsoConfig) -> np.ndarray:
        """Active mask with a one-voxel inactive halo on every side."""
        return np.pad(self.active_mask(iso), 1, mode="constant", constant_values=False)

    def padded_values(self) -> np.ndarray:
        """Values as float64 with a one-voxel halo of zeros."""
        return np.pad(self.values.astype(np.float64), 1, mode="constant")


@dataclass(frozen=True)
class RangeVector:
    """Segment from an active voxel center to an inactive 6-neighbor center."""

    active: VoxelIndex
    inactive: VoxelIndex

    def __post_init__(self) -> None:
        delta = [b - a for a, b in zip(self.active, self.inactive, strict=True)]
        if sorted(abs(d) for d in delta) != [0, 0, 1]:
            msg = f"{self.active} and {self.inactive} are not 6-neighbors"
            raise PreconditionError(msg)

    @classmethod
    def between(
        cls,
        grid: ScalarGrid,
        iso: IsoConfig,
        active: VoxelIndex,
        inactive: VoxelIndex,
    ) -> RangeVector:
        """Build a range vector, checking the activity of both ends.

        Raises
        ------
        PreconditionError
            If ``active`` is inactive or ``inactive`` is active.
        """
        if not is_active(grid, iso, active) or is_active(grid, iso, inactive):
            msg = f"no boundary face between {tuple(active)} and {tuple(inactive)}"
            raise PreconditionError(msg)
        return cls(VoxelIndex(*active), VoxelIndex(*inactive))

    @property
    def axis(self) -> int:
        """Axis of the range vector (0, 1 or 2)."""
        return next(a for a in range(3) if self.active[a] != self.inactive[a])

    @property
    def sign(self) -> int:
        """+1 or -1 along :attr:`axis`."""
        a = self.axis
        return self.inactive[a] - self.active[a]

    @property
    def support_key(self) -> EdgeKey:
        """Doubled coordinates of the boundary-face center."""
        return (
            self.active.i + self.inactive.i,
            self.active.j + self.inactive.j,
            self.active.k + self.inactive.k,
        )


@dataclass(frozen=True)
class LatticeKeys:
    """Integer ids for doubled lattice coordinates of one grid.

    Coordinates from -2 up to ``2n + 1`` along each axis are representable,
    which covers the one-voxel halo scanned around the domain. Ids increase
    with ``(z, y, x)`` in lexicographic order. Negative ids are reserved for
    cycle centroids.
    """

    dims: tuple[int, int, int]

    @classmethod
    def for_grid(cls, grid: ScalarGrid) -> LatticeKeys:
        return cls(grid.dims)

    @property
    def strides(self) -> tuple[int, int]:
        nx, ny, _ = self.dims
        return (2 * nx + 4, 2 * ny + 4)

    def encode(self, coords: ArrayLike) -> NDArray[np.int64]:
        """Encode doubled coordinates of shape ``(..., 3)`` to ids."""
        c = np.asarray(coords, dtype=np.int64)
        sx, sy = self.strides
        return ((c[..., 2] + 2) * sy + (c[..., 1] + 2)) * sx + (c[..., 0] + 2)

    def decode(self, ids: ArrayLike) -> NDArray[np.int64]:
        """Decode ids to doubled coordinates of shape ``(..., 3)``."""
        sx, sy = self.strides
        ids = np.asarray(ids, dtype=np.int64)
        x = ids % sx
        rest = ids // sx
        return np.stack([x - 2, rest % sy - 2, rest // sy - 2], axis=-1)

    def encode_one(self, coords: tuple[int, int, int]) -> int:
        return int(self.encode(np.asarray(coords)))


def is_active(grid: ScalarGrid, iso: IsoConfig, v: VoxelIndex | tuple[int, int, int]) -> bool:
    """Return whether voxel ``v`` is active.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    iso : IsoConfig
        Isovalue; a voxel is active when ``value >= isovalue``.
    v : VoxelIndex
        Voxel address, possibly outside the domain.

    Returns
    -------
    bool
        False for every out-of-domain voxel.

    Examples
    --------
    >>> grid = ScalarGrid(np.full((1, 1, 1), 180, dtype=np.uint8))
    >>> is_active(grid, IsoConfig(180), VoxelIndex(0, 0, 0))
    True
    >>> is_active(grid, IsoConfig(180), VoxelIndex(-1, 0, 0))
    False
    """
    if not grid.contains(v):
        return False
    return bool(grid.values[tuple(v)] >= iso.isovalue)


def edge_voxel_array(coords: ArrayLike) -> NDArray[np.int64]:
    """Return the four voxels around each voxel edge.

    Parameters
    ----------
    coords : ArrayLike
        Doubled coordinates of edge midpoints, shape ``(n, 3)`` or ``(3,)``.

    Returns
    -------
    numpy.ndarray
        Voxel indices of shape ``(n, 4, 3)``, in cyclic order about the
        edge axis: ``(u-, v-)``, ``(u+, v-)``, ``(u+, v+)``, ``(u-, v+)``
        with ``u, v`` the two axes following the edge axis.

    Raises
    ------
    PreconditionError
        If a coordinate triple is not a voxel-edge midpoint.
    """
    c = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    odd = c & 1
    if not np.all(odd.sum(axis=1) == 2):
        msg = "edge midpoints need exactly two odd doubled coordinates"
        raise PreconditionError(msg)
    axis = np.argmin(odd, axis=1)
    u = (axis + 1) % 3
    v = (axis + 2) % 3
    low = (c - odd) // 2
    out = np.repeat(low[:, None, :], 4, axis=1)
    rows = np.arange(len(c))
    out[rows, 1, u] += 1
    out[rows, 2, u] += 1
    out[rows, 2, v] += 1
    out[rows, 3, v] += 1
    return out


def edge_voxels(edge: EdgeKey) -> tuple[VoxelIndex, VoxelIndex, VoxelIndex, VoxelIndex]:
    """Return the four voxels sharing a voxel edge, in cyclic order."""
    a, b, c, d = (VoxelIndex(*map(int, row)) for row in edge_voxel_array(edge)[0])
    return (a, b, c, d)


def mean4(values: np.ndarray) -> np.ndarray:
    """Average over the last axis of length four, summed in a fixed order."""
    return (((values[..., 0] + values[..., 1]) + values[..., 2]) + values[..., 3]) / 4.0


def edge_averages(grid: ScalarGrid, coords: ArrayLike) -> NDArray[np.float64]:
    """Vectorised :func:`edge_average` over edge midpoints ``(n, 3)``.

    Raises
    ------
    PreconditionError
        If any participating voxel lies outside the domain.
    """
    vox = edge_voxel_array(coords)
    dims = np.asarray(grid.dims)
    if np.any(vox < 0) or np.any(vox >= dims):
        msg = "edge average needs all four voxels inside the domain"
        raise PreconditionError(msg)
    vals = grid.values[vox[..., 0], vox[..., 1], vox[..., 2]].astype(np.float64)
    return mean4(vals)


def edge_average(grid: ScalarGrid, edge: EdgeKey) -> float:
    """Mean value of the four voxels sharing a voxel edge.

    Parameters
    ----------
    grid : ScalarGrid
        The lattice.
    edge : EdgeKey
        Doubled coordinates of the edge midpoint.

    Returns
    -------
    float
        Arithmetic mean of the four values.
    """
    return float(edge_averages(grid, [edge])[0])


def interpolation_parameter(f_active: float, f_inactive: float, iso: float) -> float:
    """Displacement of a support point from the active center.

    Parameters
    ----------
    f_active : float
        Value at the active voxel, at least ``iso``.
    f_inactive : float
        Value at the inactive voxel.
    iso : float
        The isovalue.

    Returns
    -------
    float
        ``t`` in ``[0, 1]``; 0 is the active center and 0.5 the face center.

    Raises
    ------
    PreconditionError
        If ``f_active`` is below ``iso``.

    Examples
    --------
    >>> round(interpolation_parameter(133, 0, 100), 5)
    0.24812
    >>> interpolation_parameter(200, 200, 150)
    0.5
    """
    if f_active < iso:
        msg = f"active value {f_active} is below the isovalue {iso}"
        raise PreconditionError(msg)
    t = interpolation_parameters(np.asarray([f_active]), np.asarray([f_inactive]), iso)
    return float(t[0])


def interpolation_parameters(
    f_active: ArrayLike, f_inactive: ArrayLike, iso: float
) -> NDArray[np.float64]:
    """Vectorised :func:`interpolation_parameter`."""
    fa = np.asarray(f_active, dtype=np.float64)
    fi = np.asarray(f_inactive, dtype=np.float64)
    denom = fa - fi
    flat = denom == 0
    t = np.clip((fa - iso) / np.where(flat, 1.0, denom), 0.0, 1.0)
    return np.where(flat, 0.5, t)


def support_geometry(
    grid: ScalarGrid, iso: IsoConfig, keys: LatticeKeys, ids: ArrayLike
) -> tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.float64]]:
    """Range vectors and displacement parameters of boundary-face centers.

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

    Returns
    -------
    active, inactive : numpy.ndarray
        Voxel indices of shape ``(n, 3)``.
    t : numpy.ndarray
        Displacement parameters; 0.5 when the inactive end is outside.

    Raises
    ------
    PreconditionError
        If an id is not the center of a boundary face.
    """
    c = keys.decode(np.asarray(ids, dtype=np.int64).reshape(-1))
    odd = c & 1
    if not np.all(odd.sum(axis=1) == 1):
        msg = "support points need exactly one odd doubled coordinate"
        raise PreconditionError(msg)
    low = (c - odd) // 2
    high = (c + odd) // 2
    padded = grid.padded_active(iso)
    low_on = padded[low[:, 0] + 1, low[:, 1] + 1, low[:, 2] + 1]
    high_on = padded[high[:, 0] + 1, high[:, 1] + 1, high[:, 2] + 1]
    if np.any(low_on == high_on):
        msg = "support point does not separate an active and an inactive voxel"
        raise PreconditionError(msg)
    active = np.where(low_on[:, None], low, high)
    inactive = np.where(low_on[:, None], high, low)
    inside = np.all((inactive >= 0) & (inactive < np.asarray(grid.dims)), axis=1)
    t = np.full(len(c), 0.5)
    if np.any(inside):
        fa = grid.values[active[inside, 0], active[inside, 1], active[inside, 2]]
        ia = inactive[inside]
        fi = grid.values[ia[:, 0], ia[:, 1], ia[:, 2]]
        t[inside] = interpolation_parameters(fa, fi, iso.isovalue)
    return active, inactive, t
