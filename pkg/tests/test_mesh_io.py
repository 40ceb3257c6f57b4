"""Tests for OBJ and PLY output."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest
from plyfile import PlyData, PlyElement

from voxshell.engines import extract
from voxshell.exceptions import PreconditionError, VolumeLoadError
from voxshell.mesh_io import export_mesh, read_ply, write_obj, write_ply
from voxshell.meshcheck import check_closed
from voxshell.tessellate import Mesh
from voxshell.volume import IsoConfig, ScalarGrid

if TYPE_CHECKING:
    from pathlib import Path


class TestWriteObj:
    """Tests for write_obj."""

    def test_single_voxel(self, tmp_path: Path, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test vertex and 1-based face lines.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = extract(single_voxel, iso)
        path = write_obj(mesh, tmp_path / "octahedron.obj")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# 6 vertices, 8 faces"
        vertices = [line for line in lines if line.startswith("v ")]
        faces = [line for line in lines if line.startswith("f ")]
        assert len(vertices) == 6
        assert len(faces) == 8
        indices = {int(n) for line in faces for n in line.split()[1:]}
        assert indices == set(range(1, 7))
        coords = np.array([[float(x) for x in line.split()[1:]] for line in vertices])
        np.testing.assert_allclose(np.abs(coords).sum(axis=1), 0.5)


class TestPly:
    """Tests for write_ply and read_ply."""

    def test_read_back(self, tmp_path: Path, domino: ScalarGrid, iso: IsoConfig) -> None:
        """Test that a written PLY reads back with the same geometry.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        domino : ScalarGrid
            Two face-adjacent voxels.
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = extract(domino, iso)
        loaded = read_ply(write_ply(mesh, tmp_path / "domino.ply"))
        assert loaded.n_points == mesh.n_points
        np.testing.assert_array_equal(loaded.triangles, mesh.triangles)
        np.testing.assert_allclose(loaded.points, mesh.points)
        assert check_closed(loaded).closed

    def test_coincident_points_share_keys(
        self, tmp_path: Path, single_voxel: ScalarGrid, iso: IsoConfig
    ) -> None:
        """Test that repeated marching points become one key on reading.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = extract(single_voxel, iso, "vesta-marching")
        loaded = read_ply(write_ply(mesh, tmp_path / "cells.ply"))
        assert loaded.n_points == 24
        assert len(np.unique(loaded.keys)) == 6
        assert check_closed(loaded).closed

    def test_collapsed_points_keep_keys(
        self, tmp_path: Path, single_voxel: ScalarGrid, iso: IsoConfig
    ) -> None:
        """Test that distinct points at one position keep their own keys.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = extract(single_voxel, iso)
        points = mesh.points.copy()
        points[1] = points[0]
        collapsed = Mesh(keys=mesh.keys, points=points, triangles=mesh.triangles)
        loaded = read_ply(write_ply(collapsed, tmp_path / "collapsed.ply"))
        np.testing.assert_array_equal(loaded.keys, mesh.keys)
        assert check_closed(loaded).closed

    def test_foreign_file_keyed_by_position(self, tmp_path: Path) -> None:
        """Test that a PLY without ids keys its points by position.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        """
        vertices = np.array(
            [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)],
            dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4")],
        )
        faces = np.array([([0, 1, 2],)], dtype=[("vertex_indices", "<i4", (3,))])
        path = tmp_path / "foreign.ply"
        PlyData(
            [PlyElement.describe(vertices, "vertex"), PlyElement.describe(faces, "face")]
        ).write(str(path))
        loaded = read_ply(path)
        assert loaded.keys[1] == loaded.keys[3]
        assert len(np.unique(loaded.keys)) == 3

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test that an unreadable file is reported as a load error.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        """
        with pytest.raises(VolumeLoadError):
            read_ply(tmp_path / "absent.ply")


class TestExportMesh:
    """Tests for export_mesh."""

    def test_format_from_suffix(
        self, tmp_path: Path, single_voxel: ScalarGrid, iso: IsoConfig
    ) -> None:
        """Test that the suffix picks the writer.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = extract(single_voxel, iso)
        ply = export_mesh(mesh, tmp_path / "mesh.PLY")
        assert ply.read_bytes().startswith(b"ply\nformat binary_little_endian 1.0")
        obj = export_mesh(mesh, tmp_path / "mesh.txt", "obj")
        assert obj.read_text(encoding="utf-8").startswith("# 6 vertices")

    def test_unknown_format(self, tmp_path: Path, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test that formats other than OBJ and PLY are rejected.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        with pytest.raises(PreconditionError):
            export_mesh(extract(single_voxel, iso), tmp_path / "mesh.stl")
