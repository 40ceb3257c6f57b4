"""Benchmark harness and census tables.

Each record times extraction from the in-memory grid through construction of
the point and triangle arrays. File output is never timed.
"""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import pandas as pd

from voxshell.engines import Engine, extract
from voxshell.exceptions import PreconditionError
from voxshell.tessellate import Resolution
from voxshell.utils import format_count, format_uncertainty
from voxshell.vesta_core import PURE_CYCLE_LENGTHS, VALID_CYCLE_LENGTHS
from voxshell.volume import ConnectivityMode

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from voxshell.volume import IsoConfig, ScalarGrid

logger = logging.getLogger(__name__)

ALL_ENGINES = tuple(Engine)
ALL_MODES = tuple(ConnectivityMode)
ALL_RESOLUTIONS = tuple(Resolution)


@dataclass(frozen=True)
class BenchRecord:
    """Timing and counts of one engine, mode and resolution.

    Attributes
    ----------
    engine, mode, resolution : str
        What was run.
    census : dict[int, int]
        Cycles per length.
    points, triangles : int
        Sizes of the emitted arrays, before any deduplication.
    time_mean, time_std : float
        Wall time in seconds over ``repeats`` runs.
    repeats, threads : int
        Run count and marching worker threads.
    dims : tuple[int, int, int]
        Grid size.
    """

    engine: str
    mode: str
    resolution: str
    census: dict[int, int] = field(hash=False)
    points: int
    triangles: int
    time_mean: float
    time_std: float
    repeats: int = 1
    threads: int = 1
    dims: tuple[int, int, int] = (0, 0, 0)

    @property
    def cycle_sum(self) -> int:
        return sum(self.census.values())


def supported(engine: Engine, mode: ConnectivityMode, resolution: Resolution) -> bool:
    """Return whether ``engine`` runs in ``mode`` at ``resolution``."""
    if engine.is_vesta:
        return True
    return mode is ConnectivityMode.DISCONNECT and resolution is Resolution.L


def run_bench(
    grid: ScalarGrid,
    iso: IsoConfig,
    engines: Iterable[Engine | str] = ALL_ENGINES,
    modes: Iterable[ConnectivityMode | str] = ALL_MODES,
    resolutions: Iterable[Resolution | str] = ALL_RESOLUTIONS,
    *,
    repeats: int = 1,
    threads: int = 1,
) -> list[BenchRecord]:
    """Time every supported engine, mode and resolution combination.

    Parameters
    ----------
    grid : ScalarGrid
        Input volume, already in memory.
    iso : IsoConfig
        Isovalue.
    engines, modes, resolutions : Iterable, optional
        Combinations to run. Marching Cubes runs only in ``L`` disconnect;
        other requested combinations are skipped.
    repeats : int, optional
        Timed runs per combination.
    threads : int, optional
        Worker threads for the marching engine.

    Returns
    -------
    list[BenchRecord]
        One record per combination that ran.

    Raises
    ------
    PreconditionError
        If ``repeats`` is less than one.
    """
    if repeats < 1:
        msg = f"repeats must be at least 1, got {repeats}"
        raise PreconditionError(msg)
    engine_list = [Engine(e) for e in engines]
    mode_list = [ConnectivityMode(m) for m in modes]
    resolution_list = [Resolution(r) for r in resolutions]

    records = []
    for engine in engine_list:
        for mode in mode_list:
            for resolution in resolution_list:
                if not supported(engine, mode, resolution):
                    logger.debug("Skipping %s %s %s", engine, mode, resolution)
                    continue
                times = []
                for _ in range(repeats):
                    start = time.perf_counter()
                    mesh = extract(grid, iso, engine, mode, resolution, threads=threads)
                    times.append(time.perf_counter() - start)
                record = BenchRecord(
                    engine=engine.value,
                    mode=mode.value,
                    resolution=resolution.value,
                    census=dict(mesh.census),
                    points=mesh.n_points,
                    triangles=mesh.n_triangles,
                    time_mean=statistics.fmean(times),
                    time_std=statistics.stdev(times) if repeats > 1 else 0.0,
                    repeats=repeats,
                    threads=threads,
                    dims=grid.dims,
                )
                logger.info(
                    "%s %s %s: %d triangles in %.4f s",
                    engine,
                    mode,
                    resolution,
                    record.triangles,
                    record.time_mean,
                )
                records.append(record)
    return records


def _census_cells(census: dict[int, int], mode: str) -> list[str]:
    pure = mode != ConnectivityMode.MIXED
    return [
        "N/A" if pure and n not in PURE_CYCLE_LENGTHS else format_count(census.get(n, 0))
        for n in sorted(VALID_CYCLE_LENGTHS)
    ]


def bench_table(records: Sequence[BenchRecord]) -> pd.DataFrame:
    """Arrange records as a benchmark table.

    Columns are ``(engine, mode)`` pairs in first-seen order. Rows are the
    cycle counts per length, the cycle sum and, per resolution, points,
    triangles and time. Cycle lengths that a pure mode cannot produce and
    resolutions an engine does not support read ``N/A``.

    Parameters
    ----------
    records : Sequence[BenchRecord]
        Output of :func:`run_bench`.

    Returns
    -------
    pandas.DataFrame
        String cells, counts with thousands separators, times as
        ``mean(σ)``.
    """
    columns: dict[tuple[str, str], dict[str, BenchRecord]] = {}
    for record in records:
        columns.setdefault((record.engine, record.mode), {})[record.resolution] = record
    resolutions = [r.value for r in Resolution if any(r.value in c for c in columns.values())]

    index = [f"{n}-Cycles" for n in sorted(VALID_CYCLE_LENGTHS)] + ["Cycle Sum"]
    for resolution in resolutions:
        index += [f"{resolution}: Points", f"{resolution}: Triangles", f"{resolution}: Time [s]"]

    data = {}
    for (engine, mode), by_resolution in columns.items():
        first = next(iter(by_resolution.values()))
        cells = [*_census_cells(first.census, mode), format_count(first.cycle_sum)]
        for resolution in resolutions:
            record = by_resolution.get(resolution)
            if record is None:
                cells += ["N/A", "N/A", "N/A"]
            else:
                cells += [
                    format_count(record.points),
                    format_count(record.triangles),
                    format_uncertainty(record.time_mean, record.time_std),
                ]
        data[(engine, mode)] = cells

    table = pd.DataFrame(data, index=index)
    if not data:
        return table
    table.columns = pd.MultiIndex.from_tuples(list(data), names=["engine", "mode"])
    return table
