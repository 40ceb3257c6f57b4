"""Tests for the Marching Cubes reference tables and engine."""

from __future__ import annotations

import numpy as np
import pytest

from voxshell.exceptions import PreconditionError
from voxshell.marching import POA_MASK, link_cell
from voxshell.mc_reference import (
    McVariant,
    ambiguous_face_configurations,
    cell_boundary,
    classic_bases,
    classic_differs,
    cube_rotations,
    mc_extract,
    mc_tables,
    require_mc_settings,
)
from voxshell.meshcheck import check_closed
from voxshell.tessellate import Resolution
from voxshell.volume import ConnectivityMode, IsoConfig, ScalarGrid


def _cycle_edges(code: int) -> set[tuple[int, int]]:
    return {(c[i], c[(i + 1) % len(c)]) for c in link_cell(code, 0) for i in range(len(c))}


class TestTables:
    """Tests for table generation."""

    def test_rotations(self) -> None:
        """Test that there are 24 distinct proper rotations."""
        rotations = cube_rotations()
        assert len(rotations) == 24
        assert len({voxels for voxels, _ in rotations}) == 24
        assert all(sorted(voxels) == list(range(8)) for voxels, _ in rotations)

    def test_fifteen_bases(self) -> None:
        """Test that occupancies reduce to 15 base cases."""
        bases = classic_bases()
        assert len(bases) == 256
        assert len({base for base, _, _ in bases.values()}) == 15
        assert bases[0] == (0, 0, False)
        assert bases[255][0] == 0
        assert bases[255][2]

    def test_extended_matches_cycle_perimeters(self) -> None:
        """Test that extended fans have the disconnect cycles as cell boundary."""
        tables = mc_tables(McVariant.EXTENDED)
        for code in range(256):
            assert tables.polygons[code] == link_cell(code, 0)
            assert cell_boundary(tables.triangles[code]) == _cycle_edges(code)

    def test_edge_masks(self) -> None:
        """Test that edge masks mark the crossing centers."""
        tables = mc_tables(McVariant.EXTENDED)
        assert tables.edge_masks[0] == 0
        assert tables.edge_masks[1] == (1 << 0) | (1 << 2) | (1 << 5)

    def test_classic_differs_only_on_ambiguous_faces(self) -> None:
        """Test where the two variants disagree."""
        ambiguous = set(ambiguous_face_configurations())
        assert all(POA_MASK[code] for code in ambiguous)
        for code in range(256):
            if code not in ambiguous:
                assert not classic_differs(code)
        assert not classic_differs(9)
        assert classic_differs(255 ^ 9)

    def test_classic_leaves_open_cell_boundaries(self) -> None:
        """Test that some classic cells break the surface-cycle perimeters."""
        classic = mc_tables(McVariant.CLASSIC15)
        assert cell_boundary(classic.triangles[255 ^ 9]) != _cycle_edges(255 ^ 9)


class TestMcExtract:
    """Tests for mc_extract."""

    def test_single_voxel(self, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test the octahedron with three points per triangle.

        Parameters
        ----------
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        for variant in McVariant:
            mesh = mc_extract(single_voxel, iso, variant)
            assert mesh.n_triangles == 8
            assert mesh.n_points == 24
            assert mesh.census == {3: 8}
            assert check_closed(mesh).closed
            assert mesh.provenance is not None
            assert mesh.provenance.engine == variant.engine_name

    def test_hole(self, hole_demo: ScalarGrid, iso: IsoConfig) -> None:
        """Test that only the classic table leaves a hole.

        Parameters
        ----------
        hole_demo : ScalarGrid
            Volume with an ambiguous face between complementary cells.
        iso : IsoConfig
            Isovalue 1.
        """
        classic = check_closed(mc_extract(hole_demo, iso, McVariant.CLASSIC15))
        extended = check_closed(mc_extract(hole_demo, iso, McVariant.EXTENDED))
        assert not classic.closed
        assert classic.unmatched
        assert extended.closed

    def test_empty(self, iso: IsoConfig) -> None:
        """Test that a volume without active voxels gives an empty mesh.

        Parameters
        ----------
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = mc_extract(ScalarGrid(np.zeros((2, 2, 2), dtype=np.uint8)), iso)
        assert mesh.n_triangles == 0

    @pytest.mark.parametrize(
        ("mode", "resolution"),
        [
            (ConnectivityMode.CONNECT, Resolution.L),
            (ConnectivityMode.MIXED, Resolution.L),
            (ConnectivityMode.DISCONNECT, Resolution.H),
        ],
    )
    def test_unsupported_settings(self, mode: ConnectivityMode, resolution: Resolution) -> None:
        """Test that Marching Cubes only runs in L disconnect.

        Parameters
        ----------
        mode : ConnectivityMode
            Requested mode.
        resolution : Resolution
            Requested resolution.
        """
        with pytest.raises(PreconditionError):
            require_mc_settings(mode, resolution)
