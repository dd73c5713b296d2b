"""Storm-centered infrared frame container.

One frame is a square, power-of-two grid of brightness temperatures
(Kelvin, 32-bit) centered on the storm, plus geotemporal metadata. The
on-disk layout is a purpose-built little-endian binary so round trips
are bit exact:

========  =====================================
bytes     field
========  =====================================
4         magic ``IRF1``
4         u32 width (pixels)
4         u32 height (pixels)
8         i64 timestamp (unix seconds, UTC)
4         f32 pixel scale (km per pixel)
4         f32 storm-center latitude (deg N)
4         f32 storm-center longitude (deg E)
2         u16 storm-id byte length
var       storm id (UTF-8)
var       width x height f32 temperatures, row-major
========  =====================================

No padding anywhere; trailing bytes are an error.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import FormatError
from .timefmt import from_unix_seconds, unix_seconds

MAGIC = b"IRF1"
_HEADER = struct.Struct("<4sIIqfffH")

TEMP_MIN_K = 0.0  # exclusive
TEMP_MAX_K = 400.0  # inclusive
MIN_WIDTH = 16  # 2**4
MAX_WIDTH = 4096  # 2**12


def _valid_width(n: int) -> bool:
    return MIN_WIDTH <= n <= MAX_WIDTH and (n & (n - 1)) == 0


@dataclass(eq=False)
class IrFrame:
    """One storm-centered brightness-temperature raster."""

    storm_id: str
    timestamp: datetime
    pixel_scale_km: float
    center_lat_deg: float
    center_lon_deg: float
    temps: np.ndarray = field(repr=False)

    def __post_init__(self):
        # The container stores these as 32-bit floats; snap them here so
        # a frame always equals itself after a write/read round trip.
        self.pixel_scale_km = float(np.float32(self.pixel_scale_km))
        self.center_lat_deg = float(np.float32(self.center_lat_deg))
        self.center_lon_deg = float(np.float32(self.center_lon_deg))
        temps = np.asarray(self.temps, dtype=np.float32)
        if temps.ndim != 2 or temps.shape[0] != temps.shape[1]:
            raise FormatError(f"temperature grid must be square, got {temps.shape}")
        if not _valid_width(temps.shape[0]):
            raise FormatError(
                f"width {temps.shape[0]} is not a power of two in "
                f"[{MIN_WIDTH}, {MAX_WIDTH}]"
            )
        if not np.all(np.isfinite(temps)):
            raise FormatError("non-finite temperature value")
        if temps.min() <= TEMP_MIN_K or temps.max() > TEMP_MAX_K:
            raise FormatError(
                f"temperatures outside ({TEMP_MIN_K}, {TEMP_MAX_K}] K: "
                f"range [{temps.min():.2f}, {temps.max():.2f}]"
            )
        self.temps = temps

    @property
    def width(self) -> int:
        return self.temps.shape[1]

    @property
    def height(self) -> int:
        return self.temps.shape[0]

    def __eq__(self, other):
        if not isinstance(other, IrFrame):
            return NotImplemented
        return (
            self.storm_id == other.storm_id
            and self.timestamp == other.timestamp
            and self.pixel_scale_km == other.pixel_scale_km
            and self.center_lat_deg == other.center_lat_deg
            and self.center_lon_deg == other.center_lon_deg
            and np.array_equal(self.temps, other.temps)
        )


def write_ir_frame(frame: IrFrame) -> bytes:
    """Serialize a frame; ``read_ir_frame(write_ir_frame(f)) == f`` bit-for-bit."""
    storm_bytes = frame.storm_id.encode("utf-8")
    if len(storm_bytes) > 0xFFFF:
        raise FormatError("storm id too long")
    header = _HEADER.pack(
        MAGIC,
        frame.width,
        frame.height,
        unix_seconds(frame.timestamp),
        np.float32(frame.pixel_scale_km),
        np.float32(frame.center_lat_deg),
        np.float32(frame.center_lon_deg),
        len(storm_bytes),
    )
    body = np.ascontiguousarray(frame.temps, dtype="<f4").tobytes()
    return header + storm_bytes + body


def read_ir_frame(data: bytes) -> IrFrame:
    """Deserialize a frame, validating magic, dimensions, and payload size."""
    if len(data) < _HEADER.size:
        raise FormatError(f"truncated header: {len(data)} bytes")
    magic, width, height, ts, pixel_scale, lat, lon, id_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if width != height:
        raise FormatError(f"width {width} != height {height}")
    if not _valid_width(width):
        raise FormatError(f"width {width} is not a power of two in [{MIN_WIDTH}, {MAX_WIDTH}]")
    offset = _HEADER.size
    if len(data) < offset + id_len:
        raise FormatError("truncated storm id")
    storm_id = data[offset : offset + id_len].decode("utf-8")
    offset += id_len
    expected = width * height * 4
    if len(data) - offset < expected:
        missing = expected - (len(data) - offset)
        raise FormatError(
            f"truncated payload: {missing // 4} of {width * height} values missing"
        )
    if len(data) - offset > expected:
        raise FormatError(f"{len(data) - offset - expected} trailing bytes")
    temps = np.frombuffer(data, dtype="<f4", count=width * height, offset=offset)
    temps = temps.reshape(height, width).copy()
    if not np.all(np.isfinite(temps)):
        raise FormatError("non-finite temperature value")
    return IrFrame(
        storm_id=storm_id,
        timestamp=from_unix_seconds(ts),
        pixel_scale_km=float(pixel_scale),
        center_lat_deg=float(lat),
        center_lon_deg=float(lon),
        temps=temps,
    )


def save_irf(frame: IrFrame, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_ir_frame(frame))


def load_irf(path) -> IrFrame:
    with open(path, "rb") as fh:
        return read_ir_frame(fh.read())
