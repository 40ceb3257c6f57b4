"""Runtime settings read from the environment and an optional ``.env`` file."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from voxshell.exceptions import ConfigError

logger = logging.getLogger(__name__)

load_dotenv()

current_path = Path.cwd()
data_path = current_path / "data"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    """Settings that control extraction, benchmarking and logging.

    Attributes
    ----------
    data_dir : Path
        Directory for generated volumes and the bench database.
    bench_db : Path
        SQLite file that receives bench records.
    threads : int
        Worker threads for the marching scan.
    log_level : str
        Root logging level used by the command-line interface.
    bench_repeats : int
        Default number of timed repetitions per bench column.
    slab_layers : int
        Number of z-layers per marching slab.
    """

    data_dir: Path
    bench_db: Path
    threads: int = 1
    log_level: str = "WARNING"
    bench_repeats: int = 1
    slab_layers: int = 16


def _positive_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        msg = f"{name} must be an integer, got {raw!r}"
        raise ConfigError(msg) from None
    if value < 1:
        msg = f"{name} must be at least 1, got {value}"
        raise ConfigError(msg)
    return value


def get_settings() -> Settings:
    """Build settings from ``VOXSHELL_*`` environment variables.

    Returns
    -------
    Settings
        The resolved settings.

    Raises
    ------
    ConfigError
        If a variable holds a value of the wrong kind.
    """
    data_dir = Path(os.environ.get("VOXSHELL_DATA_DIR") or data_path)
    bench_db = Path(os.environ.get("VOXSHELL_BENCH_DB") or data_dir / "bench_runs.db")
    log_level = (os.environ.get("VOXSHELL_LOG_LEVEL") or "WARNING").upper()
    if log_level not in LOG_LEVELS:
        msg = f"VOXSHELL_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {log_level!r}"
        raise ConfigError(msg)
    settings = Settings(
        data_dir=data_dir,
        bench_db=bench_db,
        threads=_positive_int("VOXSHELL_THREADS", 1),
        log_level=log_level,
        bench_repeats=_positive_int("VOXSHELL_BENCH_REPEATS", 1),
        slab_layers=_positive_int("VOXSHELL_SLAB_LAYERS", 16),
    )
    logger.debug("Resolved settings: %s", settings)
    return settings
