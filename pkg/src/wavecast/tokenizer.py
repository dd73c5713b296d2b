"""Discrete coefficient vocabulary and positional token encoding.

Bins are equal-mass: edges sit at the k/V empirical quantiles of the
training coefficients (linear interpolation), which suits the heavy
tails of wavelet coefficient distributions far better than equal-width
bins. Each bin is represented by the median of the training values it
contains, the absolute-error minimizer within the bin. Bins are
half-open [low, high), values beyond either extreme clamp to the first
or last token, and an entry's position is flattened into a single
integer so (frame, scale, orientation, row, col) survives a round trip
exactly.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import ConfigError, DomainError, FormatError
from .sparse import SparseCoeffSet
from .timefmt import format_utc, parse_utc
from .wavelets import WaveletSpec


@dataclass(frozen=True)
class CoeffVocabulary:
    """Quantile bin edges and per-bin representative values."""

    edges: tuple
    reps: tuple
    fitted_on: int

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        reps = tuple(float(r) for r in self.reps)
        if len(reps) != len(edges) + 1:
            raise DomainError("need exactly one representative per bin")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DomainError("bin edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "reps", reps)

    @property
    def size(self) -> int:
        return len(self.reps)


def fit_vocab(values, vocab_size: int) -> CoeffVocabulary:
    """Edges at the k/V quantiles, reps as per-bin training medians.

    A degenerate distribution (too few distinct values to separate the
    quantiles) cannot support the vocabulary and is an error. Bins that
    end up empty under the half-open rule fall back to their interval
    midpoint (or the adjacent edge at the extremes).
    """
    if vocab_size < 2:
        raise ConfigError(f"vocab_size must be >= 2, got {vocab_size}")
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise DomainError("cannot fit a vocabulary on no values")
    if not np.all(np.isfinite(values)):
        raise DomainError("non-finite coefficient value")
    if values.min() == values.max():
        raise DomainError("degenerate distribution: all values identical")
    qs = np.arange(1, vocab_size) / vocab_size
    edges = np.quantile(values, qs, method="linear")
    # A single edge (V=2) is trivially increasing; larger vocabularies
    # need every consecutive pair of quantiles to separate.
    if np.any(np.diff(edges) <= 0):
        raise DomainError(
            "degenerate distribution: quantile edges are not strictly increasing"
        )
    bins = np.searchsorted(edges, values, side="right")
    reps = []
    for i in range(vocab_size):
        members = values[bins == i]
        if members.size:
            reps.append(float(np.median(members)))
        elif i == 0:
            reps.append(float(edges[0]))
        elif i == vocab_size - 1:
            reps.append(float(edges[-1]))
        else:
            reps.append(float((edges[i - 1] + edges[i]) / 2.0))
    return CoeffVocabulary(edges=tuple(edges), reps=tuple(reps), fitted_on=int(values.size))


def _blocks(width: int, levels: int) -> list:
    """Subband blocks in ascending (scale, orientation) order with their
    flattened offsets; the approximation is (levels, 0)."""
    keys = [(levels, 0)]
    for j in range(1, levels + 1):
        keys += [(j, 1), (j, 2), (j, 3)]
    keys.sort()
    blocks = []
    offset = 0
    for j, k in keys:
        side = width >> j
        blocks.append(((j, k), offset, side))
        offset += side * side
    return blocks


def position_id(width: int, levels: int, frame_index: int,
                scale: int, orient: int, row: int, col: int) -> int:
    """Flatten (frame, scale, orientation, row, col) to one integer."""
    slots = width * width
    for (j, k), offset, side in _blocks(width, levels):
        if (j, k) == (scale, orient):
            return frame_index * slots + offset + row * side + col
    raise DomainError(f"no subband (scale={scale}, orientation={orient}) at {levels} levels")


def position_coords(pid: int, width: int, levels: int) -> tuple:
    """Inverse of :func:`position_id`: (frame, scale, orientation, row, col)."""
    if pid < 0:
        raise DomainError(f"negative position id {pid}")
    slots = width * width
    frame_index, rem = divmod(pid, slots)
    blocks = _blocks(width, levels)
    starts = [offset for _, offset, _ in blocks]
    i = bisect_right(starts, rem) - 1
    (j, k), offset, side = blocks[i]
    row, col = divmod(rem - offset, side)
    return frame_index, j, k, int(row), int(col)


@dataclass(frozen=True)
class TokenSequence:
    """Tokens in canonical order with the geometry needed to invert them."""

    tokens: tuple
    width: int
    spec: WaveletSpec
    vocab_size: int
    frame_index: int = 0
    storm_id: str | None = None
    timestamp: datetime | None = None

    def __post_init__(self):
        tokens = tuple((int(p), int(t)) for p, t in self.tokens)
        for (a, _), (b, _) in zip(tokens, tokens[1:]):
            if b <= a:
                raise DomainError("position ids must be strictly increasing")
        for _, tok in tokens:
            if not 0 <= tok < self.vocab_size:
                raise DomainError(f"token {tok} outside vocabulary of size {self.vocab_size}")
        object.__setattr__(self, "tokens", tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def encode(s: SparseCoeffSet, vocab: CoeffVocabulary, frame_index: int = 0) -> TokenSequence:
    """One token per entry; entries are already canonically ordered, so
    the token order is independent of how the set was assembled."""
    edges = np.asarray(vocab.edges)
    toks = np.searchsorted(edges, s.value, side="right")
    width = s.source_dims[0]
    levels = s.spec.levels
    pairs = []
    for j, k, r, c, tok in zip(s.scale, s.orient, s.row, s.col, toks):
        pairs.append((position_id(width, levels, frame_index, int(j), int(k), int(r), int(c)), int(tok)))
    return TokenSequence(
        tokens=tuple(pairs),
        width=width,
        spec=s.spec,
        vocab_size=vocab.size,
        frame_index=frame_index,
        storm_id=s.storm_id,
        timestamp=s.timestamp,
    )


def decode(t: TokenSequence, vocab: CoeffVocabulary) -> SparseCoeffSet:
    """Map each token back to its bin representative at its position."""
    if vocab.size != t.vocab_size:
        raise DomainError(
            f"vocabulary size {vocab.size} does not match sequence ({t.vocab_size})"
        )
    scales, orients, rows, cols, values = [], [], [], [], []
    for pid, tok in t.tokens:
        frame_index, j, k, row, col = position_coords(pid, t.width, t.spec.levels)
        if frame_index != t.frame_index:
            raise DomainError(
                f"position id {pid} belongs to frame {frame_index}, "
                f"sequence is frame {t.frame_index}"
            )
        scales.append(j)
        orients.append(k)
        rows.append(row)
        cols.append(col)
        values.append(vocab.reps[tok])
    return SparseCoeffSet(
        np.array(scales, dtype=np.int64),
        np.array(orients, dtype=np.int64),
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(values, dtype=np.float64),
        source_dims=(t.width, t.width),
        spec=t.spec,
        storm_id=t.storm_id,
        timestamp=t.timestamp,
    )


def write_vocab(vocab: CoeffVocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "V": vocab.size,
                "edges": list(vocab.edges),
                "reps": list(vocab.reps),
                "fitted_on": vocab.fitted_on,
            },
            fh,
        )
        fh.write("\n")


def read_vocab(path) -> CoeffVocabulary:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError:
            raise FormatError(f"{path}: not valid JSON") from None
    try:
        vocab = CoeffVocabulary(
            edges=tuple(d["edges"]), reps=tuple(d["reps"]), fitted_on=int(d["fitted_on"])
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing key {exc}") from None
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if vocab.size != d.get("V"):
        raise FormatError(f"{path}: V={d.get('V')} disagrees with {vocab.size} bins")
    return vocab


def write_tokens(t: TokenSequence, path) -> None:
    """JSON header describing the position enumeration, then one
    "position_id,token" line per entry."""
    header = {
        "V": t.vocab_size,
        "width": t.width,
        "family_order": t.spec.family_order,
        "levels": t.spec.levels,
        "extension": t.spec.extension,
        "frame_index": t.frame_index,
        "storm_id": t.storm_id,
        "timestamp": format_utc(t.timestamp) if t.timestamp else None,
        "position_order": "frame, then subbands ascending (scale, orientation), row-major",
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for pid, tok in t.tokens:
            fh.write(f"{pid},{tok}\n")


def read_tokens(path) -> TokenSequence:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError:
            raise FormatError(f"{path}: first line is not a JSON header") from None
        required = {"V", "width", "family_order", "levels", "extension", "frame_index"}
        missing = required - set(header)
        if missing:
            raise FormatError(f"{path}: header missing {sorted(missing)}")
        pairs = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected position_id,token")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad token line {line!r}") from None
    timestamp = header.get("timestamp")
    try:
        return TokenSequence(
            tokens=tuple(pairs),
            width=int(header["width"]),
            spec=WaveletSpec(
                family_order=int(header["family_order"]),
                levels=int(header["levels"]),
                extension=header["extension"],
            ),
            vocab_size=int(header["V"]),
            frame_index=int(header["frame_index"]),
            storm_id=header.get("storm_id"),
            timestamp=parse_utc(timestamp) if timestamp else None,
        )
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None
