"""Best-track ingestion and rapid-intensification labeling.

The text format handled here is the comma-delimited best-track layout
used by the National Hurricane Center archive:

* header line:  ``AL092020,             ETA,     39,``
  (storm id, storm name, number of data rows that follow)
* data line:    ``20201102, 0600,, TS, 14.6N, 78.0W, 50, 996, ...``
  with fields date ``YYYYMMDD``, time ``HHMM``, an optional
  single-letter record identifier, a two-letter status code, latitude
  like ``26.3N``, longitude like ``88.6W``, max sustained wind (kt),
  min central pressure (mb). Any trailing columns (wind radii etc.)
  are ignored.

Sentinel values ``-99`` and ``-999`` in the numeric fields mean
"missing" and are mapped to ``None``, never to a number.

Rapid intensification (RI) is an intensity increase of at least 30 kt
within 24 hours; :func:`compute_ri_labels` applies that definition at
every record time that has a record exactly one lead window later.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import requests

from .errors import DomainError, FetchError, ParseError

STORM_ID_RE = re.compile(r"^[A-Z]{2}[0-9]{6}$")

# Values that mark a missing wind or pressure in the source data.
MISSING_SENTINELS = {-99, -999}


@dataclass(frozen=True)
class BestTrackRecord:
    """One synoptic best-track fix."""

    timestamp: datetime
    record_id: str | None
    status: str
    lat_deg: float
    lon_deg: float
    max_wind_kt: int | None
    min_pressure_mb: int | None

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise DomainError(f"latitude {self.lat_deg} outside [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise DomainError(f"longitude {self.lon_deg} outside [-180, 180]")
        if self.max_wind_kt is not None and self.max_wind_kt < 0:
            raise DomainError(f"negative max wind {self.max_wind_kt} kt")


@dataclass(frozen=True)
class StormTrack:
    """Time-ordered best-track series for one storm."""

    storm_id: str
    name: str
    records: tuple[BestTrackRecord, ...]

    def __post_init__(self):
        if not STORM_ID_RE.match(self.storm_id):
            raise DomainError(f"storm id {self.storm_id!r} does not match AANNYYYY")
        object.__setattr__(self, "records", tuple(self.records))
        times = [r.timestamp for r in self.records]
        for earlier, later in zip(times, times[1:]):
            if later <= earlier:
                raise DomainError(
                    f"{self.storm_id}: record timestamps not strictly increasing "
                    f"at {later.isoformat()}"
                )


@dataclass(frozen=True)
class RiLabel:
    """Binary rapid-intensification label at one synoptic time."""

    storm_id: str
    timestamp: datetime
    label: int
    delta_kt: int


def _parse_coordinate(token: str, positive: str, negative: str, line: int) -> float:
    token = token.strip()
    if not token or token[-1].upper() not in (positive + negative):
        raise ParseError(f"bad coordinate token {token!r}", line=line)
    hemisphere = token[-1].upper()
    try:
        magnitude = float(token[:-1])
    except ValueError:
        raise ParseError(f"non-numeric coordinate {token!r}", line=line) from None
    return -magnitude if hemisphere == negative else magnitude


def _parse_int_field(token: str, name: str, line: int) -> int | None:
    try:
        value = int(token.strip())
    except ValueError:
        raise ParseError(f"non-numeric {name} {token.strip()!r}", line=line) from None
    return None if value in MISSING_SENTINELS else value


def _parse_data_line(fields: list[str], line: int) -> BestTrackRecord:
    if len(fields) < 8:
        raise ParseError(f"expected at least 8 data fields, got {len(fields)}", line=line)
    date_tok, time_tok = fields[0].strip(), fields[1].strip()
    try:
        timestamp = datetime.strptime(date_tok + time_tok, "%Y%m%d%H%M")
    except ValueError:
        raise ParseError(f"date {date_tok!r} {time_tok!r} not parseable", line=line) from None
    timestamp = timestamp.replace(tzinfo=timezone.utc)

    record_id = fields[2].strip() or None
    if record_id is not None and len(record_id) != 1:
        raise ParseError(f"record identifier {record_id!r} is not a single letter", line=line)
    status = fields[3].strip().upper()
    if len(status) != 2:
        raise ParseError(f"status code {fields[3].strip()!r} is not two letters", line=line)

    lat = _parse_coordinate(fields[4], "N", "S", line)
    lon = _parse_coordinate(fields[5], "E", "W", line)
    wind = _parse_int_field(fields[6], "max wind", line)
    pressure = _parse_int_field(fields[7], "min pressure", line)
    try:
        return BestTrackRecord(timestamp, record_id, status, lat, lon, wind, pressure)
    except DomainError as exc:
        raise ParseError(str(exc), line=line) from None


def parse_hurdat2(text: str) -> list[StormTrack]:
    """Parse a full best-track database into a list of :class:`StormTrack`.

    Each header line advertises how many data rows belong to the storm;
    exactly that many rows are consumed, and a mismatch (early end of
    file or a header arriving early) raises :class:`ParseError` with the
    offending line number.
    """
    tracks: list[StormTrack] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        raw = lines[i].strip()
        i += 1
        if not raw:
            continue
        fields = [f.strip() for f in raw.split(",")]
        # A header carries (id, name, count) plus the trailing comma's
        # empty field; anything with 8+ fields is a stray data line.
        if len(fields) >= 8:
            raise ParseError("data line encountered where a header was expected", line=lineno)
        if len(fields) < 3:
            raise ParseError(f"malformed header {raw!r}", line=lineno)
        storm_id, name = fields[0], fields[1]
        if not STORM_ID_RE.match(storm_id):
            raise ParseError(f"bad storm id {storm_id!r}", line=lineno)
        try:
            count = int(fields[2])
        except ValueError:
            raise ParseError(f"bad row count {fields[2]!r}", line=lineno) from None
        if count < 0:
            raise ParseError(f"negative row count {count}", line=lineno)

        records = []
        for _ in range(count):
            if i >= len(lines):
                raise ParseError(
                    f"{storm_id}: header advertised {count} rows but file ended "
                    f"after {len(records)}",
                    line=lineno,
                )
            data_lineno = i + 1
            data_fields = [f.strip() for f in lines[i].split(",")]
            i += 1
            if len(data_fields) < 8:
                raise ParseError(
                    f"{storm_id}: expected {count} data rows, found a non-data line",
                    line=data_lineno,
                )
            records.append(_parse_data_line(data_fields, data_lineno))
        try:
            tracks.append(StormTrack(storm_id, name, tuple(records)))
        except DomainError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return tracks


def format_hurdat2(tracks: list[StormTrack]) -> str:
    """Serialize tracks back to the best-track text layout."""
    out = []
    for track in tracks:
        out.append(f"{track.storm_id},{track.name:>19},{len(track.records):>7},")
        for r in track.records:
            lat = f"{abs(r.lat_deg):.1f}{'N' if r.lat_deg >= 0 else 'S'}"
            lon = f"{abs(r.lon_deg):.1f}{'E' if r.lon_deg >= 0 else 'W'}"
            wind = -99 if r.max_wind_kt is None else r.max_wind_kt
            pressure = -999 if r.min_pressure_mb is None else r.min_pressure_mb
            out.append(
                f"{r.timestamp:%Y%m%d}, {r.timestamp:%H%M},"
                f" {r.record_id or ''},"
                f" {r.status}, {lat:>6}, {lon:>7}, {wind:>3}, {pressure:>4},"
            )
    return "\n".join(out) + ("\n" if out else "")


def fetch_hurdat2(url: str, timeout: float = 30.0) -> str:
    """Download the best-track text file. Raises :class:`FetchError` on
    any network failure or non-success status; never partially parses."""
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.RequestException as exc:
        raise FetchError(f"fetch of {url} failed: {exc}") from exc
    return response.text


def intensity_at(track: StormTrack, t: datetime) -> int | None:
    """Max wind at exactly time ``t``, or ``None`` when no record matches.

    No temporal interpolation: best-track winds are 6-hourly integers
    and interpolating would fabricate precision.
    """
    for record in track.records:
        if record.timestamp == t:
            return record.max_wind_kt
    return None


def compute_ri_labels(
    track: StormTrack, lead_hours: int = 24, threshold_kt: int = 30
) -> list[RiLabel]:
    """Label every record time that has a record exactly ``lead_hours`` later.

    ``label`` is 1 iff wind(t + lead) - wind(t) >= ``threshold_kt``.
    Times lacking the lead record, or with a missing wind at either
    endpoint, produce no label at all (they are excluded, not 0).
    """
    lead = timedelta(hours=lead_hours)
    by_time = {r.timestamp: r.max_wind_kt for r in track.records}
    labels = []
    for record in track.records:
        wind_now = record.max_wind_kt
        wind_later = by_time.get(record.timestamp + lead)
        if wind_now is None or wind_later is None:
            continue
        delta = wind_later - wind_now
        labels.append(
            RiLabel(track.storm_id, record.timestamp, int(delta >= threshold_kt), delta)
        )
    return labels
