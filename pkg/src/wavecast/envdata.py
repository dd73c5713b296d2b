"""Environmental-predictor tables.

Predictors (shear, moisture, and whatever else the user exports) arrive
as a plain CSV with mandatory ``storm_id`` and ``timestamp`` columns;
every other column is a numeric predictor. Timestamps are ISO-8601 UTC
and must sit on the 6-hour synoptic grid. Empty cells are missing
values, never zero.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime

from .errors import ParseError
from .timefmt import on_six_hour_grid, parse_utc

MANDATORY_COLUMNS = ("storm_id", "timestamp")


@dataclass(frozen=True)
class EnvRecord:
    """Predictor values for one storm at one synoptic time."""

    storm_id: str
    timestamp: datetime
    predictors: dict[str, float | None]


def parse_env_table(text: str) -> list[EnvRecord]:
    """Parse a predictor CSV into one :class:`EnvRecord` per row.

    Predictor order is preserved from the header. Raises
    :class:`ParseError` for a missing mandatory column, a duplicate
    (storm_id, timestamp) pair, an off-grid timestamp, or a non-numeric
    predictor cell.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty table: header row required", line=1) from None
    header = [h.strip() for h in header]
    for column in MANDATORY_COLUMNS:
        if column not in header:
            raise ParseError(f"mandatory column {column!r} missing", line=1)
    predictor_columns = [
        (h, idx) for idx, h in enumerate(header) if h not in MANDATORY_COLUMNS
    ]
    id_idx = header.index("storm_id")
    ts_idx = header.index("timestamp")

    records: list[EnvRecord] = []
    seen: set[tuple[str, datetime]] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(row)}", line=lineno
            )
        storm_id = row[id_idx].strip()
        timestamp = parse_utc(row[ts_idx], line=lineno)
        if not on_six_hour_grid(timestamp):
            raise ParseError(
                f"timestamp {row[ts_idx].strip()!r} off the 6-hour grid", line=lineno
            )
        key = (storm_id, timestamp)
        if key in seen:
            raise ParseError(
                f"duplicate record for {storm_id} at {row[ts_idx].strip()}", line=lineno
            )
        seen.add(key)

        predictors: dict[str, float | None] = {}
        for name, col_idx in predictor_columns:
            cell = row[col_idx].strip()
            if not cell:
                predictors[name] = None
                continue
            try:
                predictors[name] = float(cell)
            except ValueError:
                raise ParseError(
                    f"non-numeric value {cell!r} in column {name!r}", line=lineno
                ) from None
        records.append(EnvRecord(storm_id, timestamp, predictors))
    return records
