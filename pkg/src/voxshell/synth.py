"""Deterministic synthetic volumes for demos, tests and benchmarks."""

from __future__ import annotations

import enum
import logging

import numpy as np

from voxshell.exceptions import PreconditionError
from voxshell.volume import ScalarGrid, ValueKind

logger = logging.getLogger(__name__)

FIGURE27_DIMS = (9, 9, 14)


class SynthKind(enum.StrEnum):
    """Kinds of synthetic volume."""

    SPHERE = "sphere"
    RANDOM = "random"
    FIGURE27 = "figure27"


def _check_dims(dims: tuple[int, ...]) -> tuple[int, int, int]:
    if len(dims) != 3 or min(dims) < 1:
        msg = f"dims must be three positive integers, got {dims}"
        raise PreconditionError(msg)
    return (int(dims[0]), int(dims[1]), int(dims[2]))


def sphere(dims: tuple[int, int, int]) -> ScalarGrid:
    """Radial ramp: 255 at the center falling to 0 at half the smallest side."""
    dims = _check_dims(dims)
    axes = [np.arange(n, dtype=np.float64) - (n - 1) / 2 for n in dims]
    x, y, z = np.meshgrid(*axes, indexing="ij")
    radius = np.sqrt(x * x + y * y + z * z)
    ramp = np.clip(1.0 - radius / (min(dims) / 2), 0.0, 1.0)
    return ScalarGrid(np.rint(255 * ramp).astype(np.uint8), value_kind=ValueKind.U8)


def random_volume(dims: tuple[int, int, int], p: float | None = None, seed: int = 0) -> ScalarGrid:
    """Independent voxel values from a seeded generator.

    Parameters
    ----------
    dims : tuple[int, int, int]
        Grid size.
    p : float | None, optional
        Probability of a 1 in a binary volume. With ``None`` the values are
        uniform over ``0..255``.
    seed : int, optional
        Generator seed.

    Returns
    -------
    ScalarGrid
        A u8 grid; identical parameters give identical grids.
    """
    dims = _check_dims(dims)
    rng = np.random.default_rng(seed)
    if p is None:
        values = rng.integers(0, 256, size=dims, dtype=np.uint8)
    else:
        if not 0.0 <= p <= 1.0:
            msg = f"p must lie in [0, 1], got {p}"
            raise PreconditionError(msg)
        values = (rng.random(dims) < p).astype(np.uint8)
    return ScalarGrid(values, value_kind=ValueKind.U8)


def figure27(dims: tuple[int, int, int] = FIGURE27_DIMS) -> ScalarGrid:
    """Two overlapping Gaussian lobes stacked along z, meant for isovalue 180."""
    dims = _check_dims(dims)
    nx, ny, nz = dims
    x, y, z = np.meshgrid(
        np.arange(nx, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nz, dtype=np.float64),
        indexing="ij",
    )
    sigma = max(1.0, min(nx, ny) / 4)
    lobes = []
    for cz in (nz * 0.3, nz * 0.7):
        d2 = (x - (nx - 1) / 2) ** 2 + (y - (ny - 1) / 2) ** 2 + (z - cz) ** 2
        lobes.append(np.exp(-d2 / (2 * sigma * sigma)))
    field = np.maximum(lobes[0], lobes[1])
    return ScalarGrid(np.rint(255 * field).astype(np.uint8), value_kind=ValueKind.U8)


def generate_synthetic(
    kind: SynthKind | str,
    dims: tuple[int, int, int] | None = None,
    *,
    p: float | None = None,
    seed: int = 0,
) -> ScalarGrid:
    """Build a synthetic volume.

    Parameters
    ----------
    kind : SynthKind | str
        ``sphere``, ``random`` or ``figure27``.
    dims : tuple[int, int, int] | None, optional
        Grid size. Defaults to ``(32, 32, 32)``, or ``(9, 9, 14)`` for
        ``figure27``.
    p : float | None, optional
        Occupancy probability for binary ``random`` volumes.
    seed : int, optional
        Seed for ``random``.

    Returns
    -------
    ScalarGrid
        The generated volume.

    Raises
    ------
    PreconditionError
        For unknown kinds or invalid parameters.
    """
    try:
        kind = SynthKind(kind)
    except ValueError:
        msg = f"unknown synthetic kind {kind!r}"
        raise PreconditionError(msg) from None
    if kind is SynthKind.FIGURE27:
        grid = figure27(dims or FIGURE27_DIMS)
    elif kind is SynthKind.SPHERE:
        grid = sphere(dims or (32, 32, 32))
    else:
        grid = random_volume(dims or (32, 32, 32), p=p, seed=seed)
    logger.debug("Generated %s volume %s", kind, grid.dims)
    return grid
