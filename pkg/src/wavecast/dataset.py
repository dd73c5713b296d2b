"""Sequence assembly, storm-level splitting, normalization, env fusion.

A sample pairs a 24-hour run of frames ending at time t with the
intensification label for the 24 hours after t, so the classifier sees
only the past. Splits are drawn at the storm level: sequences from one
storm overlap heavily (a 6-hour stride reuses four of five frames), and
letting a storm straddle partitions would leak near-duplicates into the
test set.

The on-disk form is a JSON-lines manifest, one sample per line with
relative paths to its frame files, next to a directory of ``.wsc`` (or
``.irf``) frames written once per unique frame.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np

from .errors import ConfigError, DomainError, FormatError
from .irframe import IrFrame, load_irf, save_irf
from .sparse import SparseCoeffSet, read_wsc, write_wsc
from .timefmt import compact_utc, format_utc, parse_utc
from .tracks import RiLabel


@dataclass
class SequenceSample:
    """One labeled input: frames over [t - window, t], label for t."""

    storm_id: str
    t: datetime
    frames: list
    label: int
    frame_times: list
    env: list | None = None
    env_names: list | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DomainError(f"label must be 0 or 1, got {self.label}")
        if len(self.frames) != len(self.frame_times):
            raise DomainError("frames and frame_times length mismatch")
        if not self.frame_times:
            raise DomainError("sample has no frames")
        for a, b in zip(self.frame_times, self.frame_times[1:]):
            if b <= a:
                raise DomainError("frame_times must be strictly increasing")
        if self.frame_times[-1] != self.t:
            raise DomainError("last frame time must equal the sample endpoint")


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint storm-id partitions; the unit of assignment is a storm."""

    train: frozenset
    validation: frozenset
    test: frozenset
    seed: int

    def __post_init__(self):
        pairs = (
            (self.train, self.validation),
            (self.train, self.test),
            (self.validation, self.test),
        )
        if any(a & b for a, b in pairs):
            raise DomainError("split partitions overlap")

    def partition_of(self, storm_id: str) -> str | None:
        for name in ("train", "validation", "test"):
            if storm_id in getattr(self, name):
                return name
        return None

    def select(self, samples, partition: str) -> list:
        ids = getattr(self, partition)
        return [s for s in samples if s.storm_id in ids]

    def to_json_dict(self) -> dict:
        return {
            "train": sorted(self.train),
            "validation": sorted(self.validation),
            "test": sorted(self.test),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SplitPlan":
        try:
            return cls(
                train=frozenset(d["train"]),
                validation=frozenset(d["validation"]),
                test=frozenset(d["test"]),
                seed=int(d["seed"]),
            )
        except KeyError as exc:
            raise FormatError(f"split plan missing key {exc}") from None


@dataclass
class BuildResult:
    """Samples plus the gap accounting from assembly."""

    samples: list
    n_labels: int
    n_skipped_gaps: int

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]


def build_sequences(
    frames, labels: list[RiLabel], window_hours: int = 24, stride_hours: int = 6
) -> BuildResult:
    """Assemble one sample per label whose full frame window exists.

    A label at time t needs frames at t - window, t - window + stride,
    ..., t, all from the same storm. Any missing grid point drops the
    label silently; the skip count is reported on the result.
    """
    if window_hours <= 0 or stride_hours <= 0:
        raise ConfigError("window_hours and stride_hours must be positive")
    if window_hours % stride_hours != 0:
        raise ConfigError(
            f"window {window_hours} h is not a multiple of stride {stride_hours} h"
        )
    steps = window_hours // stride_hours
    by_storm: dict[str, dict[datetime, object]] = {}
    for f in frames:
        by_storm.setdefault(f.storm_id, {})[f.timestamp] = f
    samples, skipped = [], 0
    for lab in sorted(labels, key=lambda l: (l.storm_id, l.timestamp)):
        storm_frames = by_storm.get(lab.storm_id)
        if storm_frames is None:
            skipped += 1
            continue
        times = [
            lab.timestamp - timedelta(hours=window_hours - i * stride_hours)
            for i in range(steps + 1)
        ]
        if any(t not in storm_frames for t in times):
            skipped += 1
            continue
        samples.append(
            SequenceSample(
                storm_id=lab.storm_id,
                t=lab.timestamp,
                frames=[storm_frames[t] for t in times],
                label=lab.label,
                frame_times=times,
            )
        )
    return BuildResult(samples=samples, n_labels=len(labels), n_skipped_gaps=skipped)


def split_by_storm(
    samples, fractions: tuple = (0.7, 0.15, 0.15), seed: int = 0
) -> SplitPlan:
    """Assign whole storms to train/validation/test, greedily balancing
    sample counts toward the requested fractions.

    Storms are visited in seeded shuffled order; each goes to the
    partition with the largest remaining sample-count deficit, so the
    plan is deterministic given the seed.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ConfigError(f"need 3 nonnegative fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)}")
    counts: dict[str, int] = {}
    for s in samples:
        counts[s.storm_id] = counts.get(s.storm_id, 0) + 1
    storms = sorted(counts)
    if len(storms) < 3:
        raise ConfigError(f"need at least 3 storms to split, got {len(storms)}")
    total = len(samples) if hasattr(samples, "__len__") else sum(counts.values())
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(storms))
    assigned = [0.0, 0.0, 0.0]
    parts: list[set] = [set(), set(), set()]
    for idx in order:
        storm = storms[idx]
        deficits = [f * total - a for f, a in zip(fractions, assigned)]
        dest = int(np.argmax(deficits))
        parts[dest].add(storm)
        assigned[dest] += counts[storm]
    return SplitPlan(
        train=frozenset(parts[0]),
        validation=frozenset(parts[1]),
        test=frozenset(parts[2]),
        seed=seed,
    )


@dataclass(frozen=True)
class NormStats:
    """Per-(scale, orientation) affine standardization, fit on train only.

    groups maps (scale, orientation) to (mean, sd); a group absent here
    is treated as (0, 1). Zero-variance groups are stored with sd 1 so
    application never divides by zero.
    """

    groups: dict = field(default_factory=dict)

    def lookup(self, scale: int, orient: int) -> tuple[float, float]:
        return self.groups.get((scale, orient), (0.0, 1.0))

    def to_json_dict(self) -> dict:
        return {
            f"{j},{k}": [m, sd] for (j, k), (m, sd) in sorted(self.groups.items())
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NormStats":
        groups = {}
        for key, pair in d.items():
            j, k = key.split(",")
            groups[(int(j), int(k))] = (float(pair[0]), float(pair[1]))
        return cls(groups=groups)


def fit_norm(train_samples) -> NormStats:
    """Pool coefficient values per (scale, orientation) over all frames
    of the training samples and fit mean/sd for each group."""
    pooled: dict[tuple[int, int], list] = {}
    n = 0
    for sample in train_samples:
        n += 1
        for frame in sample.frames:
            if not isinstance(frame, SparseCoeffSet):
                raise DomainError("normalization stats are defined on sparse frames")
            present = {
                (int(j), int(k)) for j, k in zip(frame.scale, frame.orient)
            }
            for j, k in present:
                pick = (frame.scale == j) & (frame.orient == k)
                pooled.setdefault((j, k), []).append(frame.value[pick])
    if n == 0:
        raise DomainError("cannot fit normalization on an empty training set")
    groups = {}
    for key, chunks in pooled.items():
        vals = np.concatenate(chunks)
        mean = float(vals.mean())
        sd = float(vals.std())
        if not np.isfinite(sd) or sd == 0.0:
            sd = 1.0
        groups[key] = (mean, sd)
    return NormStats(groups=groups)


def _affine_sample(sample: SequenceSample, stats: NormStats, invert: bool) -> SequenceSample:
    new_frames = []
    for frame in sample.frames:
        if not isinstance(frame, SparseCoeffSet):
            raise DomainError("normalization applies to sparse frames")
        # Groups not present in the stats keep the (0, 1) identity.
        mean = np.zeros(len(frame))
        sd = np.ones(len(frame))
        for (j, k), (m, s) in stats.groups.items():
            pick = (frame.scale == j) & (frame.orient == k)
            mean[pick] = m
            sd[pick] = s
        value = frame.value * sd + mean if invert else (frame.value - mean) / sd
        new_frames.append(frame.replace_values(value))
    return replace(sample, frames=new_frames)


def apply_norm(sample: SequenceSample, stats: NormStats) -> SequenceSample:
    """Standardize each coefficient by its (scale, orientation) group."""
    return _affine_sample(sample, stats, invert=False)


def unapply_norm(sample: SequenceSample, stats: NormStats) -> SequenceSample:
    """Exact affine inverse of :func:`apply_norm`."""
    return _affine_sample(sample, stats, invert=True)


def join_env(samples, env_records, predictor_names) -> list[SequenceSample]:
    """Attach the predictor vector matching (storm_id, t) exactly.

    Samples with no matching record, or with a missing value for any
    requested predictor, keep env None; the env-fused model skips them.
    """
    predictor_names = list(predictor_names)
    index = {(r.storm_id, r.timestamp): r for r in env_records}
    out = []
    for sample in samples:
        rec = index.get((sample.storm_id, sample.t))
        env = None
        if not predictor_names:
            env = []
        elif rec is not None:
            values = []
            for name in predictor_names:
                if name not in rec.predictors:
                    raise ConfigError(f"unknown predictor name {name!r}")
                values.append(rec.predictors[name])
            if all(v is not None for v in values):
                env = [float(v) for v in values]
        out.append(replace(sample, env=env, env_names=predictor_names))
    return out


def _frame_filename(frame) -> str:
    stamp = compact_utc(frame.timestamp)
    suffix = ".wsc" if isinstance(frame, SparseCoeffSet) else ".irf"
    return f"{frame.storm_id}_{stamp}{suffix}"


def write_manifest(samples, manifest_path, frame_dir) -> None:
    """Write frames (once per unique frame) and the JSON-lines manifest.

    Frame paths in the manifest are relative to the manifest's
    directory, so the pair of artifacts can be moved together.
    """
    manifest_path = os.fspath(manifest_path)
    frame_dir = os.fspath(frame_dir)
    os.makedirs(frame_dir, exist_ok=True)
    manifest_dir = os.path.dirname(os.path.abspath(manifest_path)) or "."
    written: set[str] = set()
    lines = []
    for sample in sorted(samples, key=lambda s: (s.storm_id, s.t)):
        rel_paths = []
        for frame in sample.frames:
            name = _frame_filename(frame)
            full = os.path.join(frame_dir, name)
            if name not in written:
                if isinstance(frame, SparseCoeffSet):
                    write_wsc(frame, full)
                else:
                    save_irf(frame, full)
                written.add(name)
            rel_paths.append(
                os.path.relpath(full, start=manifest_dir).replace(os.sep, "/")
            )
        lines.append(
            json.dumps(
                {
                    "storm_id": sample.storm_id,
                    "t": format_utc(sample.t),
                    "frame_paths": rel_paths,
                    "label": sample.label,
                    "env": sample.env,
                    "env_names": sample.env_names,
                }
            )
        )
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def read_manifest(manifest_path) -> list[SequenceSample]:
    manifest_path = os.fspath(manifest_path)
    manifest_dir = os.path.dirname(os.path.abspath(manifest_path)) or "."
    samples = []
    frame_cache: dict[str, object] = {}
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                raise FormatError(f"{manifest_path}:{lineno}: not valid JSON") from None
            try:
                frames = []
                for rel in rec["frame_paths"]:
                    if rel not in frame_cache:
                        full = os.path.join(manifest_dir, rel)
                        if rel.endswith(".wsc"):
                            frame_cache[rel] = read_wsc(full)
                        else:
                            frame_cache[rel] = load_irf(full)
                    frames.append(frame_cache[rel])
                samples.append(
                    SequenceSample(
                        storm_id=rec["storm_id"],
                        t=parse_utc(rec["t"]),
                        frames=frames,
                        label=int(rec["label"]),
                        frame_times=[f.timestamp for f in frames],
                        env=rec.get("env"),
                        env_names=rec.get("env_names"),
                    )
                )
            except KeyError as exc:
                raise FormatError(
                    f"{manifest_path}:{lineno}: missing field {exc}"
                ) from None
            except DomainError as exc:
                raise FormatError(f"{manifest_path}:{lineno}: {exc}") from None
    return samples
