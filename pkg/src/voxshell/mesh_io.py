"""Write meshes as OBJ or binary PLY, and read PLY back."""

from __future__ import annotations

import enum
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from plyfile import PlyData, PlyElement

from voxshell.exceptions import PreconditionError, VolumeLoadError
from voxshell.tessellate import Mesh

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

# PLY has no 64-bit integer type; doubles hold every point id exactly.
VERTEX_DTYPE = [("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("key", "<f8")]
FACE_DTYPE = [("vertex_indices", "<i4", (3,))]


class MeshFormat(enum.StrEnum):
    """Supported mesh file formats."""

    OBJ = "obj"
    PLY = "ply"


def _world(mesh: Mesh) -> NDArray[np.float64]:
    return np.asarray(mesh.points, dtype=np.float64).reshape(-1, 3)


def write_obj(mesh: Mesh, file_path: str | Path) -> Path:
    """Write an ASCII OBJ with 1-based ``f`` lines.

    Triangles keep their counterclockwise-from-outside order.
    """
    path = Path(file_path)
    with path.open("w", encoding="utf-8") as f:
        f.write(f"# {mesh.n_points} vertices, {mesh.n_triangles} faces\n")
        f.writelines(f"v {x:.9g} {y:.9g} {z:.9g}\n" for x, y, z in _world(mesh))
        f.writelines(f"f {a + 1} {b + 1} {c + 1}\n" for a, b, c in mesh.triangles.tolist())
    return path


def write_ply(mesh: Mesh, file_path: str | Path) -> Path:
    """Write a binary little-endian PLY with float32 vertices and int32 faces.

    Each vertex also carries its point id in a ``key`` property.
    """
    path = Path(file_path)
    vertices = np.empty(mesh.n_points, dtype=VERTEX_DTYPE)
    points = _world(mesh).astype(np.float32)
    vertices["x"], vertices["y"], vertices["z"] = points[:, 0], points[:, 1], points[:, 2]
    vertices["key"] = mesh.keys.astype(np.float64)
    faces = np.empty(mesh.n_triangles, dtype=FACE_DTYPE)
    faces["vertex_indices"] = mesh.triangles.astype(np.int32)
    data = PlyData(
        [PlyElement.describe(vertices, "vertex"), PlyElement.describe(faces, "face")],
        text=False,
        byte_order="<",
    )
    data.write(str(path))
    return path


def export_mesh(mesh: Mesh, file_path: str | Path, fmt: MeshFormat | str | None = None) -> Path:
    """Write ``mesh`` to ``file_path``.

    Parameters
    ----------
    mesh : Mesh
        Mesh to write.
    file_path : str | Path
        Destination.
    fmt : MeshFormat | str | None, optional
        ``obj`` or ``ply``. Taken from the file suffix when omitted.

    Returns
    -------
    Path
        The written file.

    Raises
    ------
    PreconditionError
        If the format is unknown.
    OSError
        If the path is not writable.
    """
    path = Path(file_path)
    raw = fmt if fmt is not None else path.suffix.lstrip(".").lower()
    try:
        kind = MeshFormat(raw)
    except ValueError:
        msg = f"unknown mesh format {raw!r}, expected obj or ply"
        raise PreconditionError(msg) from None
    writer = write_obj if kind is MeshFormat.OBJ else write_ply
    writer(mesh, path)
    logger.info(
        "Wrote %d points and %d triangles to %s", mesh.n_points, mesh.n_triangles, path
    )
    return path


def read_ply(file_path: str | Path) -> Mesh:
    """Read a triangle PLY written by :func:`write_ply`.

    Returns
    -------
    Mesh
        Mesh keyed by the ``key`` vertex property when present. Files
        without it are keyed by distinct position, so coincident points
        share a key. Census and provenance are lost.

    Raises
    ------
    VolumeLoadError
        If the file cannot be read or has no vertex or face element.
    """
    path = Path(file_path)
    try:
        data = PlyData.read(str(path))
        vertex = data["vertex"]
        face = data["face"]
    except (OSError, KeyError) as exc:
        msg = f"cannot read PLY {path}: {exc}"
        raise VolumeLoadError(msg) from exc
    points = np.column_stack([vertex["x"], vertex["y"], vertex["z"]]).astype(np.float32)
    if face.count:
        triangles = np.vstack(list(face["vertex_indices"])).astype(np.int64)
    else:
        triangles = np.empty((0, 3), dtype=np.int64)
    points = points.reshape(-1, 3)
    keys = np.empty(0, dtype=np.int64)
    if "key" in {p.name for p in vertex.properties}:
        keys = np.asarray(vertex["key"]).astype(np.int64)
    elif len(points):
        _, keys = np.unique(points, axis=0, return_inverse=True)
    return Mesh(
        keys=keys.reshape(-1).astype(np.int64),
        points=points,
        triangles=triangles.reshape(-1, 3),
    )
