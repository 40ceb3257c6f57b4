"""Mesh postprocessing: point deduplication and degenerate-triangle removal."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from voxshell.tessellate import Mesh

logger = logging.getLogger(__name__)


def dedup_points(mesh: Mesh) -> Mesh:
    """Merge points that share a global id.

    Parameters
    ----------
    mesh : Mesh
        Mesh whose ``keys`` may repeat, as the marching and Marching Cubes
        engines emit one point per triangle corner or per cell.

    Returns
    -------
    Mesh
        Mesh with one point per id, sorted by id, and triangle indices
        remapped. Triangle count and census are unchanged.

    Examples
    --------
    >>> from voxshell.tessellate import Mesh
    >>> m = Mesh(np.array([5, 3, 5]), np.zeros((3, 3)), np.array([[0, 1, 2]]))
    >>> dedup_points(m).keys.tolist()
    [3, 5]
    """
    keys, first, inverse = np.unique(mesh.keys, return_index=True, return_inverse=True)
    if len(keys) == mesh.n_points and np.array_equal(keys, mesh.keys):
        return mesh
    triangles = inverse.reshape(-1)[mesh.triangles].astype(np.int64)
    logger.debug("Merged %d points into %d", mesh.n_points, len(keys))
    return replace(mesh, keys=keys, points=mesh.points[first], triangles=triangles)


def drop_degenerate(mesh: Mesh, *, tolerance: float = 1e-12) -> Mesh:
    """Remove triangles with repeated corners or near-zero area.

    Parameters
    ----------
    mesh : Mesh
        Any mesh.
    tolerance : float, optional
        Triangles whose doubled area is at most this are dropped.

    Returns
    -------
    Mesh
        The mesh without degenerate triangles. Points are kept.
    """
    if mesh.n_triangles == 0:
        return mesh
    corner_keys = mesh.triangle_keys
    repeated = (
        (corner_keys[:, 0] == corner_keys[:, 1])
        | (corner_keys[:, 1] == corner_keys[:, 2])
        | (corner_keys[:, 0] == corner_keys[:, 2])
    )
    p = mesh.points[mesh.triangles]
    doubled_area = np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    keep = ~repeated & (doubled_area > tolerance)
    dropped = int((~keep).sum())
    if dropped == 0:
        return mesh
    logger.info("Dropped %d degenerate triangles", dropped)
    return replace(mesh, triangles=mesh.triangles[keep])
