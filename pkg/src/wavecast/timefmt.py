"""UTC timestamp helpers used by the parsers and file formats.

All timestamps in this package are timezone-aware UTC ``datetime``
objects. Text formats use ISO-8601; filenames use the compact basic
form (``20201102T060000Z``) to stay filesystem-safe.
"""

from __future__ import annotations

from datetime import datetime, timezone

from .errors import ParseError

SIX_HOURS_S = 6 * 3600


def parse_utc(text: str, line: int | None = None) -> datetime:
    """Parse an ISO-8601 timestamp, tolerating a trailing ``Z``."""
    raw = text.strip()
    cleaned = raw[:-1] + "+00:00" if raw.endswith(("Z", "z")) else raw
    try:
        dt = datetime.fromisoformat(cleaned)
    except ValueError:
        raise ParseError(f"unparseable timestamp {raw!r}", line=line) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_utc(dt: datetime) -> str:
    """ISO-8601 with a ``Z`` suffix, second resolution."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def compact_utc(dt: datetime) -> str:
    """ISO-8601 basic format for filenames, e.g. ``20201102T060000Z``."""
    return dt.astimezone(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def parse_compact_utc(text: str) -> datetime:
    dt = datetime.strptime(text, "%Y%m%dT%H%M%SZ")
    return dt.replace(tzinfo=timezone.utc)


def unix_seconds(dt: datetime) -> int:
    return int(dt.astimezone(timezone.utc).timestamp())


def from_unix_seconds(seconds: int) -> datetime:
    return datetime.fromtimestamp(seconds, tz=timezone.utc)


def on_six_hour_grid(dt: datetime) -> bool:
    """True when the instant falls on the 00/06/12/18Z synoptic grid."""
    return unix_seconds(dt) % SIX_HOURS_S == 0
