"""Tests for the benchmark harness and census table."""

from __future__ import annotations

import re

import pytest

from voxshell.bench import BenchRecord, bench_table, run_bench, supported
from voxshell.engines import Engine
from voxshell.exceptions import PreconditionError
from voxshell.tessellate import Resolution
from voxshell.volume import ConnectivityMode, IsoConfig, ScalarGrid

TIME_CELL = re.compile(r"^\d+\.\d+\(\d+\)$")


class TestRunBench:
    """Tests for run_bench."""

    def test_all_combinations(self, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test that Marching Cubes runs once per variant and VESTA everywhere.

        Parameters
        ----------
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        records = run_bench(single_voxel, iso)
        assert len(records) == 14
        assert all(r.census == {3: 8} for r in records)
        assert all(r.cycle_sum == 8 for r in records)
        assert all(r.dims == (1, 1, 1) for r in records)
        cubes = [r for r in records if r.engine.startswith("mc-")]
        assert {(r.mode, r.resolution) for r in cubes} == {("disconnect", "L")}

    def test_unsupported_only(self, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test that skipped combinations leave no record.

        Parameters
        ----------
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        assert run_bench(single_voxel, iso, ["mc-classic"], ["connect"]) == []

    def test_repeats(self, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test repeated timing and the repeat check.

        Parameters
        ----------
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        (record,) = run_bench(single_voxel, iso, ["vesta-core"], ["disconnect"], ["L"], repeats=3)
        assert record.repeats == 3
        assert record.time_mean > 0
        assert record.time_std >= 0
        with pytest.raises(PreconditionError):
            run_bench(single_voxel, iso, repeats=0)

    def test_supported(self) -> None:
        """Test the supported combinations."""
        assert supported(Engine.VESTA_MARCHING, ConnectivityMode.MIXED, Resolution.H)
        assert supported(Engine.MC_EXTENDED, ConnectivityMode.DISCONNECT, Resolution.L)
        assert not supported(Engine.MC_EXTENDED, ConnectivityMode.DISCONNECT, Resolution.H)


class TestBenchTable:
    """Tests for bench_table."""

    def test_layout(self, single_voxel: ScalarGrid, iso: IsoConfig) -> None:
        """Test the columns, rows and cells of the census table.

        Parameters
        ----------
        single_voxel : ScalarGrid
            One active voxel.
        iso : IsoConfig
            Isovalue 1.
        """
        table = bench_table(run_bench(single_voxel, iso))
        assert table.shape == (15, 8)
        assert list(table.index[:9]) == [
            "3-Cycles",
            "4-Cycles",
            "5-Cycles",
            "6-Cycles",
            "7-Cycles",
            "8-Cycles",
            "9-Cycles",
            "12-Cycles",
            "Cycle Sum",
        ]
        assert table.loc["3-Cycles", ("vesta-core", "disconnect")] == "8"
        assert table.loc["8-Cycles", ("vesta-core", "disconnect")] == "N/A"
        assert table.loc["8-Cycles", ("vesta-core", "mixed")] == "0"
        assert table.loc["Cycle Sum", ("mc-classic", "disconnect")] == "8"
        assert table.loc["L: Points", ("vesta-core", "disconnect")] == "6"
        assert table.loc["L: Points", ("vesta-marching", "disconnect")] == "24"
        assert table.loc["H: Points", ("mc-classic", "disconnect")] == "N/A"
        assert TIME_CELL.match(table.loc["L: Time [s]", ("vesta-core", "connect")])

    def test_empty(self) -> None:
        """Test that no records give an empty table."""
        assert bench_table([]).empty

    def test_large_counts(self) -> None:
        """Test thousands separators in the cells."""
        record = BenchRecord(
            engine="vesta-core",
            mode="disconnect",
            resolution="L",
            census={3: 254662, 4: 550229, 5: 178512, 6: 38063},
            points=1021460,
            triangles=2042908,
            time_mean=20.4412,
            time_std=0.0712,
        )
        column = bench_table([record])[("vesta-core", "disconnect")]
        assert column["4-Cycles"] == "550,229"
        assert column["7-Cycles"] == "0"
        assert column["Cycle Sum"] == "1,021,466"
        assert column["L: Triangles"] == "2,042,908"
        assert column["L: Time [s]"] == "20.44(7)"
