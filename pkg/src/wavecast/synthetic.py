"""Seeded synthetic vortex corpus for desk-scale end-to-end runs.

Each storm gets an integer-knot intensity trajectory at 6-hour cadence
and one rendered infrared frame per fix. The rendering encodes the
physical premise the classifier is supposed to exploit: a warm eye
whose temperature rises with current intensity, and a cold eyewall
annulus whose radial temperature gradient steepens, and whose azimuthal
asymmetry shrinks, with the intensity change over the NEXT 24 hours.
Noise on top is Gaussian with configurable standard deviation.

Label bookkeeping is exact by construction. Non-intensifying storms
never gain more than 6 kt per step, so no 24-hour window reaches the
30 kt threshold; designated intensifiers get an eight-step ramp at
8 to 10 kt per step, so every 24-hour window inside the ramp gains at
least 32 kt. Recomputing labels from the emitted best tracks therefore
reproduces the generator's intent exactly.

Per-storm random substreams are derived from (seed, storm index), so
generation order cannot change the output and storms could be rendered
in parallel without affecting results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import ConfigError, FormatError
from .irframe import IrFrame, load_irf, save_irf
from .timefmt import compact_utc
from .tracks import (
    BestTrackRecord,
    StormTrack,
    compute_ri_labels,
    format_hurdat2,
    parse_hurdat2,
)

TRACKS_FILENAME = "tracks.txt"

# Largest per-step rise for a non-intensifying storm: 4 steps of +6 kt
# give a 24 h delta of 24 kt, safely below the 30 kt threshold.
_CALM_STEP_MAX = 6
# Intensifiers ramp for 8 steps at 8..10 kt per step, so every 24 h
# window inside the ramp gains at least 32 kt and roughly five
# consecutive timestamps per storm carry a positive label.
_RAMP_LEN = 8
_RAMP_STEP_MIN, _RAMP_STEP_MAX = 8, 10
_WIND_FLOOR, _WIND_CEIL = 15, 140
# Intensifiers are held at or below this before the ramp so the ramp
# cannot hit the wind ceiling.
_PRE_RAMP_CAP = _WIND_CEIL - _RAMP_LEN * _RAMP_STEP_MAX


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus."""

    n_storms: int = 20
    frames_per_storm: int = 16
    image_width: int = 64
    noise_sd: float = 2.0
    ri_fraction: float = 0.3
    seed: int = 0
    eye_radius_range: tuple = (0.08, 0.14)
    eyewall_gradient_range: tuple = (1.0, 2.2)
    asymmetry_range: tuple = (0.15, 0.45)

    def __post_init__(self):
        if self.n_storms < 1:
            raise ConfigError(f"n_storms must be >= 1, got {self.n_storms}")
        if self.frames_per_storm < 2:
            raise ConfigError("frames_per_storm must be >= 2")
        w = self.image_width
        if w < 16 or w > 4096 or w & (w - 1):
            raise ConfigError(f"image_width {w} is not a power of two in [16, 4096]")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")
        if not 0.0 < self.ri_fraction < 1.0:
            raise ConfigError(f"ri_fraction must be in (0, 1), got {self.ri_fraction}")
        for name in ("eye_radius_range", "eyewall_gradient_range", "asymmetry_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if self.eye_radius_range[1] > 0.15:
            raise ConfigError("eye radius above 0.15 pushes the eyewall outside the inner quarter radius")

    @property
    def n_ri_storms(self) -> int:
        return int(round(self.ri_fraction * self.n_storms))


@dataclass
class SynthCorpus:
    """Generated frames and tracks plus the intended intensifier set."""

    frames: list
    tracks: list
    ri_storm_ids: frozenset

    def __iter__(self):
        # Allows `frames, tracks = gen_synthetic_corpus(cfg)`.
        return iter((self.frames, self.tracks))


def _storm_identity(index: int) -> tuple[str, datetime]:
    """Deterministic id and series start; numbers roll to the next year
    after 99 since the id format has two digits for the sequence."""
    year = 2021 + index // 99
    number = index % 99 + 1
    start = datetime(year, 6, 1, tzinfo=timezone.utc) + timedelta(
        hours=36 * (index % 99)
    )
    return f"AL{number:02d}{year:04d}", start


def _intensity_trajectory(rng: np.random.Generator, n: int, ri: bool) -> tuple[np.ndarray, int | None]:
    """Integer winds (kt) per 6 h step, plus the ramp start for intensifiers.

    Steps are capped at +6 kt except inside the designated ramp. The
    ramp starts at index s in [4, n-9], so the first labeled ramp time
    has a full frame window behind it and a full lead window ahead, and
    the whole ramp fits in the series.
    """
    w = np.empty(n, dtype=np.int64)
    w[0] = rng.integers(25, 51)
    drift = rng.uniform(-1.0, 2.5)
    ramp_start = None
    ramp_steps = {}
    if ri:
        ramp_start = int(rng.integers(4, n - _RAMP_LEN))
        rate = int(rng.integers(_RAMP_STEP_MIN, _RAMP_STEP_MAX + 1))
        for i in range(_RAMP_LEN):
            ramp_steps[ramp_start + i] = rate
    for i in range(1, n):
        if i - 1 in ramp_steps:
            step = ramp_steps[i - 1]
        else:
            drift = 0.9 * drift + rng.normal(0.0, 0.5)
            step = int(round(drift + rng.normal(0.0, 1.8)))
            step = min(step, _CALM_STEP_MAX)
            step = max(step, -8)
        if ri and ramp_start is not None and i <= ramp_start:
            ceiling = _PRE_RAMP_CAP
        else:
            ceiling = _WIND_CEIL
        w[i] = int(np.clip(w[i - 1] + step, _WIND_FLOOR, ceiling))
    return w, ramp_start


def _render_frame(
    rng: np.random.Generator,
    cfg: SynthConfig,
    wind_kt: int,
    upcoming_delta_kt: int,
    r_eye: float,
    grad_base: float,
    asym_base: float,
    asym_phase: float,
    bg_grad: tuple,
) -> np.ndarray:
    """Analytic vortex plus noise; coordinates span [-1, 1] half-widths."""
    w = cfg.image_width
    ax = (np.arange(w) + 0.5) / w * 2.0 - 1.0
    X, Y = np.meshgrid(ax, ax)
    r = np.hypot(X, Y)
    theta = np.arctan2(Y, X)

    g = float(np.clip(upcoming_delta_kt / 30.0, -0.5, 1.5))
    g_pos = max(g, 0.0)

    temps = 275.0 + bg_grad[0] * X + bg_grad[1] * Y
    # Broad cold cloud shield deepening with current intensity.
    temps -= (18.0 + 0.25 * wind_kt) * np.exp(-((r / 0.75) ** 2))
    # Warm eye appears once the storm is established; it also warms
    # ahead of intensification, the premise the classifier should find.
    eye_amp = max(0.0, 0.45 * (wind_kt - 35)) + 9.0 * g_pos
    temps += eye_amp * np.exp(-((r / r_eye) ** 2))
    # Eyewall ring: deeper, sharper and more symmetric when the storm is
    # about to intensify. The ring sits inside the inner quarter radius.
    r_wall = 1.6 * r_eye
    depth = 10.0 + 14.0 * g_pos
    sigma = 0.55 * r_eye / (1.0 + 0.3 * (grad_base - 1.0) + 0.9 * g_pos)
    asym = asym_base * (1.0 - 0.65 * min(g_pos, 1.0))
    ring = np.exp(-(((r - r_wall) / sigma) ** 2))
    temps -= depth * ring * (1.0 + asym * np.cos(theta - asym_phase))
    if cfg.noise_sd > 0:
        temps = temps + rng.normal(0.0, cfg.noise_sd, size=(w, w))
    return np.clip(temps, 150.0, 340.0)


def gen_synthetic_corpus(cfg: SynthConfig) -> SynthCorpus:
    """Generate frames and best tracks for ``cfg.n_storms`` storms.

    Exactly ``round(ri_fraction * n_storms)`` storms contain at least
    one 24 h window meeting the 30 kt threshold; the rest contain none.
    Bit-reproducible for a fixed config.
    """
    n_ri = cfg.n_ri_storms
    if n_ri > 0 and cfg.frames_per_storm < 13:
        raise ConfigError(
            "frames_per_storm must be >= 13 to fit a labeled ramp "
            "(4 history steps, then the 8-step ramp)"
        )
    corpus_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    ri_indices = set(corpus_rng.permutation(cfg.n_storms)[:n_ri].tolist())

    frames: list[IrFrame] = []
    tracks: list[StormTrack] = []
    ri_ids = set()
    for idx in range(cfg.n_storms):
        storm_id, start = _storm_identity(idx)
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1 + idx)))
        is_ri = idx in ri_indices
        if is_ri:
            ri_ids.add(storm_id)
        winds, _ = _intensity_trajectory(rng, cfg.frames_per_storm, is_ri)

        # Per-storm rendering parameters.
        r_eye = float(rng.uniform(*cfg.eye_radius_range))
        grad_base = float(rng.uniform(*cfg.eyewall_gradient_range))
        asym_base = float(rng.uniform(*cfg.asymmetry_range))
        asym_phase = float(rng.uniform(0.0, 2.0 * np.pi))
        bg_grad = (float(rng.uniform(-6.0, 6.0)), float(rng.uniform(-6.0, 6.0)))

        lat = float(rng.uniform(12.0, 25.0))
        lon = float(rng.uniform(-85.0, -45.0))
        dlat = float(rng.uniform(0.05, 0.35))
        dlon = float(rng.uniform(-0.35, 0.10))

        records = []
        n = cfg.frames_per_storm
        for i in range(n):
            t = start + timedelta(hours=6 * i)
            wind = int(winds[i])
            lead = int(winds[min(i + 4, n - 1)]) - wind
            temps = _render_frame(
                rng, cfg, wind, lead, r_eye, grad_base, asym_base,
                asym_phase + 0.05 * i, bg_grad,
            )
            frames.append(
                IrFrame(
                    storm_id=storm_id,
                    timestamp=t,
                    pixel_scale_km=4.0,
                    center_lat_deg=round(lat, 1),
                    center_lon_deg=round(lon, 1),
                    temps=temps.astype(np.float32),
                )
            )
            status = "HU" if wind >= 64 else ("TS" if wind >= 34 else "TD")
            records.append(
                BestTrackRecord(
                    timestamp=t,
                    record_id=None,
                    status=status,
                    lat_deg=round(lat, 1),
                    lon_deg=round(lon, 1),
                    max_wind_kt=wind,
                    min_pressure_mb=int(round(1015 - 0.9 * wind)),
                )
            )
            lat = float(np.clip(lat + dlat, -89.0, 89.0))
            lon = float(np.clip(lon + dlon, -179.0, 179.0))
        tracks.append(StormTrack(storm_id=storm_id, name=f"SYN{idx:03d}", records=records))
    return SynthCorpus(frames=frames, tracks=tracks, ri_storm_ids=frozenset(ri_ids))


def write_corpus(corpus: SynthCorpus, out_dir) -> None:
    """Lay the corpus out as one .irf per frame plus a best-track file."""
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    for frame in corpus.frames:
        name = f"{frame.storm_id}_{compact_utc(frame.timestamp)}.irf"
        save_irf(frame, os.path.join(out_dir, name))
    with open(os.path.join(out_dir, TRACKS_FILENAME), "w", encoding="utf-8") as fh:
        fh.write(format_hurdat2(corpus.tracks))


def load_corpus(in_dir) -> SynthCorpus:
    """Read back a corpus directory; the intensifier set is recomputed
    from the tracks, which matches the generator's intent exactly."""
    in_dir = os.fspath(in_dir)
    tracks_path = os.path.join(in_dir, TRACKS_FILENAME)
    if not os.path.exists(tracks_path):
        raise FormatError(f"{in_dir}: missing {TRACKS_FILENAME}")
    with open(tracks_path, "r", encoding="utf-8") as fh:
        tracks = parse_hurdat2(fh.read())
    frames = []
    for name in sorted(os.listdir(in_dir)):
        if name.endswith(".irf"):
            frames.append(load_irf(os.path.join(in_dir, name)))
    frames.sort(key=lambda f: (f.storm_id, f.timestamp))
    ri_ids = frozenset(
        t.storm_id
        for t in tracks
        if any(lab.label == 1 for lab in compute_ri_labels(t))
    )
    return SynthCorpus(frames=frames, tracks=tracks, ri_storm_ids=ri_ids)
