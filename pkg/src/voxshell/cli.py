"""Command-line interface for voxshell."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import typer

from voxshell.bench import ALL_ENGINES, ALL_MODES, ALL_RESOLUTIONS, bench_table, run_bench
from voxshell.config import get_settings
from voxshell.data_loader import load_volume, save_volume
from voxshell.data_logger import log_bench_record
from voxshell.diconex import PixelGrid, extract_contours
from voxshell.engines import Engine, extract
from voxshell.exceptions import ConfigError, PreconditionError, VolumeLoadError
from voxshell.mesh_io import MeshFormat, export_mesh, read_ply
from voxshell.meshcheck import slice_mesh, validate
from voxshell.preprocessor import dedup_points, drop_degenerate
from voxshell.synth import SynthKind, generate_synthetic
from voxshell.tessellate import Resolution
from voxshell.volume import ConnectivityMode, IsoConfig

logger = logging.getLogger(__name__)

app = typer.Typer(no_args_is_help=True)

EXIT_VALIDATION = 1
EXIT_INPUT = 2

InputOption = Annotated[
    Path, typer.Option("--input", "-i", help="Raw payload, header file or PGM slice directory.")
]
HeaderOption = Annotated[Path | None, typer.Option(help="Header for a raw payload.")]
IsoOption = Annotated[float, typer.Option(help="Isovalue; voxels >= iso are active.")]
ThresholdOption = Annotated[
    float | None, typer.Option(help="Edge-average threshold for mixed mode.")
]
EngineOption = Annotated[Engine, typer.Option(help="Surface engine.")]
ModeOption = Annotated[ConnectivityMode, typer.Option(help="Point-of-ambiguity policy.")]
ResolutionOption = Annotated[Resolution, typer.Option(help="L fans or H centroid fans.")]


@contextmanager
def _input_errors() -> Iterator[None]:
    try:
        yield
    except (PreconditionError, VolumeLoadError, ConfigError, FileNotFoundError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(EXIT_INPUT) from exc


def _iso(iso: float, threshold: float | None) -> IsoConfig:
    return IsoConfig(isovalue=iso, mixed_threshold=threshold)


def _census_lines(census: dict[int, int]) -> list[str]:
    lines = [f"{n}: {count}" for n, count in sorted(census.items())]
    lines.append(f"sum: {sum(census.values())}")
    return lines


@app.callback()
def root(verbose: bool = False) -> None:
    """Closed, oriented isosurfaces from voxel volumes."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@app.command("extract")
def extract_command(
    input_path: InputOption,
    output: Annotated[Path, typer.Option("--output", "-o", help="OBJ or PLY file to write.")],
    header: HeaderOption = None,
    iso: IsoOption = 128.0,
    mixed_threshold: ThresholdOption = None,
    engine: EngineOption = Engine.VESTA_CORE,
    mode: ModeOption = ConnectivityMode.DISCONNECT,
    resolution: ResolutionOption = Resolution.L,
    fmt: Annotated[MeshFormat | None, typer.Option("--format")] = None,
    displace: bool = True,
    dedup: bool = False,
    drop_degenerate_triangles: Annotated[bool, typer.Option("--drop-degenerate")] = False,
    threads: int | None = None,
) -> None:
    """Extract an isosurface and write it as OBJ or PLY."""
    with _input_errors():
        settings = get_settings()
        grid = load_volume(input_path, header)
        mesh = extract(
            grid,
            _iso(iso, mixed_threshold),
            engine,
            mode,
            resolution,
            displace=displace,
            threads=threads or settings.threads,
            slab_layers=settings.slab_layers,
        )
        if dedup:
            mesh = dedup_points(mesh)
        if drop_degenerate_triangles:
            mesh = drop_degenerate(mesh)
        try:
            export_mesh(mesh, output, fmt)
        except OSError as exc:
            msg = f"cannot write {output}: {exc}"
            raise PreconditionError(msg) from exc
    typer.echo(f"points: {mesh.n_points}")
    typer.echo(f"triangles: {mesh.n_triangles}")
    typer.echo(f"census: {', '.join(f'{n}:{k}' for n, k in sorted(mesh.census.items()))}")


@app.command("validate")
def validate_command(
    input_path: InputOption,
    header: HeaderOption = None,
    iso: IsoOption = 128.0,
    mixed_threshold: ThresholdOption = None,
    engine: EngineOption = Engine.VESTA_CORE,
    mode: ModeOption = ConnectivityMode.DISCONNECT,
    resolution: ResolutionOption = Resolution.L,
    displace: bool = True,
    intersections: bool = False,
) -> None:
    """Validate an extracted surface, or a PLY file given as input.

    Exits with status 1 when the surface is open or self-intersecting.
    """
    with _input_errors():
        if input_path.suffix.lower() == ".ply":
            mesh = read_ply(input_path)
        else:
            grid = load_volume(input_path, header)
            mesh = extract(
                grid, _iso(iso, mixed_threshold), engine, mode, resolution, displace=displace
            )
        report = validate(mesh, intersections=intersections)
    typer.echo(report.to_text(), nl=False)
    if not report.ok:
        raise typer.Exit(EXIT_VALIDATION)


@app.command("census")
def census_command(
    input_path: InputOption,
    header: HeaderOption = None,
    iso: IsoOption = 128.0,
    mixed_threshold: ThresholdOption = None,
    engine: EngineOption = Engine.VESTA_CORE,
    mode: ModeOption = ConnectivityMode.DISCONNECT,
) -> None:
    """Print the number of surface cycles per length."""
    with _input_errors():
        grid = load_volume(input_path, header)
        mesh = extract(grid, _iso(iso, mixed_threshold), engine, mode, displace=False)
    for line in _census_lines(mesh.census):
        typer.echo(line)


@app.command("slice")
def slice_command(
    input_path: InputOption,
    header: HeaderOption = None,
    iso: IsoOption = 128.0,
    mixed_threshold: ThresholdOption = None,
    mode: ModeOption = ConnectivityMode.DISCONNECT,
    axis: Annotated[int, typer.Option(min=0, max=2)] = 2,
    layer: int = 0,
    from_mesh: Annotated[
        bool, typer.Option(help="Slice the undisplaced surface instead of the image.")
    ] = False,
) -> None:
    """Print the contours of one voxel layer."""
    with _input_errors():
        grid = load_volume(input_path, header)
        config = _iso(iso, mixed_threshold)
        if from_mesh:
            mesh = extract(grid, config, Engine.VESTA_CORE, mode, displace=False)
            contours = slice_mesh(mesh, axis, layer)
        else:
            contours = extract_contours(
                PixelGrid.from_slice(grid, axis, layer), config, mode, displace=False
            )
    typer.echo(f"contours: {len(contours)}")
    for n, contour in enumerate(contours):
        kind = "shape" if contour.orientation > 0 else "hole"
        typer.echo(f"contour_{n}: {len(contour)} points {kind}")
        for u, v in contour.points.tolist():
            typer.echo(f"  {u:g} {v:g}")


@app.command("bench")
def bench_command(
    input_path: InputOption,
    header: HeaderOption = None,
    iso: IsoOption = 128.0,
    mixed_threshold: ThresholdOption = None,
    engines: Annotated[list[Engine] | None, typer.Option("--engines", "--engine")] = None,
    modes: Annotated[list[ConnectivityMode] | None, typer.Option("--modes", "--mode")] = None,
    resolutions: Annotated[
        list[Resolution] | None, typer.Option("--resolutions", "--resolution")
    ] = None,
    repeats: int | None = None,
    threads: int = 1,
    log: Annotated[bool, typer.Option(help="Store records in the bench database.")] = False,
) -> None:
    """Time the engines and print the census table."""
    with _input_errors():
        settings = get_settings()
        grid = load_volume(input_path, header)
        records = run_bench(
            grid,
            _iso(iso, mixed_threshold),
            engines or ALL_ENGINES,
            modes or ALL_MODES,
            resolutions or ALL_RESOLUTIONS,
            repeats=repeats or settings.bench_repeats,
            threads=threads,
        )
    if log:
        for record in records:
            log_bench_record(record, settings.bench_db)
    typer.echo(bench_table(records).to_string())


@app.command("synth")
def synth_command(
    kind: SynthKind,
    output: Annotated[Path, typer.Option("--output", "-o", help="Base path for .hdr/.raw.")],
    dims: Annotated[tuple[int, int, int] | None, typer.Option(help="nx ny nz")] = None,
    p: Annotated[float | None, typer.Option(help="Occupancy of a binary random volume.")] = None,
    seed: int = 0,
) -> None:
    """Write a synthetic volume as a header and raw payload."""
    with _input_errors():
        grid = generate_synthetic(kind, dims, p=p, seed=seed)
        header_path, payload_path = save_volume(grid, output)
    typer.echo(f"dims: {' '.join(str(n) for n in grid.dims)}")
    typer.echo(f"header: {header_path}")
    typer.echo(f"payload: {payload_path}")


def main() -> None:
    """voxshell CLI."""
    try:
        settings = get_settings()
    except ConfigError as exc:
        typer.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_INPUT) from exc
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    app()


if __name__ == "__main__":
    main()
