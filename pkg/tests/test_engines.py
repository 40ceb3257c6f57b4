"""Tests that the engines agree with each other."""

from __future__ import annotations

import numpy as np
import pytest

from voxshell.engines import Engine, extract
from voxshell.exceptions import PreconditionError
from voxshell.meshcheck import check_closed
from voxshell.preprocessor import dedup_points
from voxshell.tessellate import Mesh, Resolution
from voxshell.volume import ConnectivityMode, IsoConfig, ScalarGrid


def _triangle_set(mesh: Mesh) -> set[tuple[int, ...]]:
    rows = set()
    for a, b, c in mesh.triangle_keys.tolist():
        turn = [a, b, c].index(min(a, b, c))
        rows.add(tuple([a, b, c][turn:] + [a, b, c][:turn]))
    return rows


class TestEngine:
    """Tests for the Engine enum."""

    def test_vesta_engines(self) -> None:
        """Test which engines trace surface cycles."""
        assert [e for e in Engine if e.is_vesta] == [Engine.VESTA_CORE, Engine.VESTA_MARCHING]
        assert Engine("mc-classic") is Engine.MC_CLASSIC


class TestExtract:
    """Tests for extract across engines."""

    @pytest.mark.parametrize("mode", [ConnectivityMode.DISCONNECT, ConnectivityMode.CONNECT])
    @pytest.mark.parametrize("resolution", list(Resolution))
    def test_marching_equals_core(
        self,
        random_binary: ScalarGrid,
        iso: IsoConfig,
        mode: ConnectivityMode,
        resolution: Resolution,
    ) -> None:
        """Test that the deduplicated marching mesh is the core mesh.

        Parameters
        ----------
        random_binary : ScalarGrid
            Seeded binary volume.
        iso : IsoConfig
            Isovalue 1.
        mode : ConnectivityMode
            Decision at points of ambiguity.
        resolution : Resolution
            L or H.
        """
        core = extract(random_binary, iso, Engine.VESTA_CORE, mode, resolution, displace=False)
        marching = dedup_points(
            extract(random_binary, iso, Engine.VESTA_MARCHING, mode, resolution, displace=False)
        )
        np.testing.assert_array_equal(marching.keys, core.keys)
        np.testing.assert_allclose(marching.points, core.points)
        assert _triangle_set(marching) == _triangle_set(core)
        assert marching.census == core.census

    def test_extended_mc_shares_support_points(
        self, random_binary: ScalarGrid, iso: IsoConfig
    ) -> None:
        """Test that extended Marching Cubes closes over the same points.

        Parameters
        ----------
        random_binary : ScalarGrid
            Seeded binary volume.
        iso : IsoConfig
            Isovalue 1.
        """
        core = extract(random_binary, iso)
        cubes = dedup_points(extract(random_binary, iso, "mc-extended"))
        np.testing.assert_array_equal(cubes.keys, core.keys)
        np.testing.assert_allclose(cubes.points, core.points)
        assert cubes.census == core.census
        assert check_closed(cubes).closed

    @pytest.mark.parametrize("engine", list(Engine))
    def test_all_engines_on_single_voxel(
        self, engine: Engine, single_voxel: ScalarGrid, iso: IsoConfig
    ) -> None:
        """Test that every engine surrounds a lone voxel with eight triangles.

        Parameters
        ----------
        engine : Engine
            Engine under test.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        mesh = extract(single_voxel, iso, engine)
        assert mesh.n_triangles == 8
        assert dedup_points(mesh).n_points == 6
        assert mesh.provenance is not None
        assert mesh.provenance.engine == engine.value

    @pytest.mark.parametrize(
        ("mode", "resolution"), [("connect", "L"), ("mixed", "L"), ("disconnect", "H")]
    )
    def test_mc_rejects_other_settings(
        self, mode: str, resolution: str, single_voxel: ScalarGrid, iso: IsoConfig
    ) -> None:
        """Test that Marching Cubes only runs in L disconnect.

        Parameters
        ----------
        mode : str
            Requested mode.
        resolution : str
            Requested resolution.
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        with pytest.raises(PreconditionError):
            extract(single_voxel, iso, "mc-classic", mode, resolution)

    def test_unknown_resolution(self, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test that resolutions other than L and H are rejected.

        Parameters
        ----------
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        with pytest.raises(PreconditionError):
            extract(single_voxel, iso, resolution="M")
