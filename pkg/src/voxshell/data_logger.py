"""Log bench records to a SQLite database."""

from __future__ import annotations

import json
import logging
import uuid
from contextlib import closing
from datetime import UTC, datetime
from pathlib import Path

import sqlite_utils

from voxshell.bench import BenchRecord
from voxshell.config import get_settings

logger = logging.getLogger(__name__)

TABLE = "bench_runs"

COLUMNS = {
    "id": str,
    "timestamp": str,
    "engine": str,
    "mode": str,
    "resolution": str,
    "dims": str,
    "census": str,
    "points": int,
    "triangles": int,
    "time_mean": float,
    "time_std": float,
    "repeats": int,
    "threads": int,
}


def _db_path(db_file: str | Path | None) -> Path:
    path = Path(db_file) if db_file is not None else get_settings().bench_db
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def init_db(db_file: str | Path | None = None) -> Path:
    """Initialize the SQLite database with the bench runs table.

    Parameters
    ----------
    db_file : str | Path | None, optional
        Database file. Defaults to ``Settings.bench_db``.

    Returns
    -------
    Path
        The database file.

    Notes
    -----
    Creates a table named 'bench_runs' if it doesn't exist with one row per
    engine, mode and resolution of a run.
    """
    path = _db_path(db_file)
    with closing(sqlite_utils.Database(path)) as db:
        db.table(TABLE).create(COLUMNS, pk="id", if_not_exists=True)
    return path


def log_bench_record(record: BenchRecord, db_file: str | Path | None = None) -> str:
    """Log one bench record.

    Parameters
    ----------
    record : BenchRecord
        The record to store.
    db_file : str | Path | None, optional
        Database file. Defaults to ``Settings.bench_db``.

    Returns
    -------
    str
        The row id.

    Notes
    -----
    Generates a unique UUID for each record and records the current
    timestamp in UTC.
    """
    path = init_db(db_file)
    record_id = str(uuid.uuid4())
    row = {
        "id": record_id,
        "timestamp": datetime.now(UTC).isoformat(),
        "engine": record.engine,
        "mode": record.mode,
        "resolution": record.resolution,
        "dims": json.dumps(list(record.dims)),
        "census": json.dumps({str(k): v for k, v in sorted(record.census.items())}),
        "points": record.points,
        "triangles": record.triangles,
        "time_mean": record.time_mean,
        "time_std": record.time_std,
        "repeats": record.repeats,
        "threads": record.threads,
    }
    with closing(sqlite_utils.Database(path)) as db:
        db.table(TABLE).insert(row, pk="id")
    logger.debug("Logged bench record %s to %s", record_id, path)
    return record_id


def load_bench_records(db_file: str | Path | None = None) -> list[BenchRecord]:
    """Read every stored record in insertion order."""
    path = _db_path(db_file)
    with closing(sqlite_utils.Database(path)) as db:
        if TABLE not in db.table_names():
            return []
        rows = list(db.table(TABLE).rows_where(order_by="rowid"))
    records = []
    for row in rows:
        dims = json.loads(row["dims"])
        records.append(
            BenchRecord(
                engine=row["engine"],
                mode=row["mode"],
                resolution=row["resolution"],
                census={int(k): v for k, v in json.loads(row["census"]).items()},
                points=row["points"],
                triangles=row["triangles"],
                time_mean=row["time_mean"],
                time_std=row["time_std"],
                repeats=row["repeats"],
                threads=row["threads"],
                dims=(dims[0], dims[1], dims[2]),
            )
        )
    return records
