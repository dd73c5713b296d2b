import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecast import (
    DomainError,
    FormatError,
    RadialMaskSpec,
    ShapeError,
    SparseCoeffSet,
    WaveletSpec,
    apply_radial_mask,
    compression_ratio,
    densify,
    dwt2,
    read_wsc,
    reconstruct,
    sparsify,
    threshold_top_fraction,
    write_wsc,
)
from wavecast.sparse import radial_distance

SPEC = WaveletSpec(2, 3)


def _decomp(seed, width=32, spec=SPEC):
    rng = np.random.default_rng(seed)
    return dwt2(rng.normal(scale=40.0, size=(width, width)) + 260.0, spec)


def brute_force_top(decomp, q):
    """All entries sorted by (-|v|, scale, orient, row, col), first ceil(qN)."""
    entries = []
    for (j, k), band in decomp.subbands():
        for r in range(band.shape[0]):
            for c in range(band.shape[1]):
                entries.append((j, k, r, c, float(band[r, c])))
    entries.sort(key=lambda e: (-abs(e[4]), e[0], e[1], e[2], e[3]))
    return entries[: math.ceil(q * decomp.coefficient_count())]


@pytest.mark.parametrize("q", [0.001, 0.05, 0.1, 0.37, 1.0])
def test_exact_retained_count(q):
    decomp = _decomp(1)
    s = threshold_top_fraction(decomp, q)
    assert len(s) == math.ceil(q * 32 * 32)


@pytest.mark.parametrize("seed", range(5))
def test_selection_matches_brute_force(seed):
    decomp = _decomp(seed)
    expected = {e[:4]: e[4] for e in brute_force_top(decomp, 0.1)}
    s = threshold_top_fraction(decomp, 0.1)
    assert {e[:4]: e[4] for e in s.entries()} == expected


def test_tie_break_is_positional_on_duplicate_magnitudes():
    # Integer-valued coefficients force heavy magnitude ties.
    rng = np.random.default_rng(9)
    grid = rng.integers(-3, 4, size=(16, 16)).astype(float)
    decomp = dwt2(grid, WaveletSpec(1, 2))  # Haar keeps halves of integers
    for q in (0.1, 0.25, 0.5):
        expected = {e[:4] for e in brute_force_top(decomp, q)}
        assert threshold_top_fraction(decomp, q).positions() == expected


def test_kept_magnitudes_dominate_dropped():
    decomp = _decomp(4)
    s = threshold_top_fraction(decomp, 0.2)
    kept = s.positions()
    all_entries = brute_force_top(decomp, 1.0)
    dropped_max = max(abs(e[4]) for e in all_entries if e[:4] not in kept)
    assert min(np.abs(s.value)) >= dropped_max - 1e-12


@given(seed=st.integers(0, 10_000), q=st.floats(0.001, 1.0))
@settings(max_examples=30, deadline=None)
def test_count_invariant_over_random_inputs(seed, q):
    decomp = _decomp(seed, width=16, spec=WaveletSpec(2, 2))
    assert len(threshold_top_fraction(decomp, q)) == math.ceil(q * 256)


def test_q_out_of_range_rejected():
    decomp = _decomp(0)
    for q in (0.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            threshold_top_fraction(decomp, q)
    with pytest.raises(DomainError):
        RadialMaskSpec(r_frac=0.0)


def test_radial_mask_exhaustive_against_direct_distance():
    # Scale-1 subband of a 64-wide image is 32x32; check every position.
    width, side, r_frac = 64, 32, 0.25
    entries = [(1, 3, r, c, 1.0) for r in range(side) for c in range(side)]
    s = SparseCoeffSet.from_entries(entries, (width, width), SPEC)
    masked = apply_radial_mask(s, RadialMaskSpec(r_frac=r_frac))
    center = (side - 1) / 2.0
    expected = {
        (1, 3, r, c)
        for r in range(side)
        for c in range(side)
        if math.hypot(r - center, c - center) / (side / 2.0) <= r_frac
    }
    assert masked.positions() == expected
    assert expected  # the disc is not empty
    assert len(expected) < side * side  # and not everything


def test_mask_spares_unlisted_scales_and_approx():
    width = 64
    corner = [(1, 1, 0, 0, 5.0), (2, 1, 0, 0, 5.0), (3, 0, 0, 0, 5.0), (3, 3, 0, 0, 5.0)]
    s = SparseCoeffSet.from_entries(corner, (width, width), SPEC)
    masked = apply_radial_mask(s, RadialMaskSpec(r_frac=0.25))
    # Only the scale-1 detail corner entry is outside the disc and masked.
    assert masked.positions() == {(2, 1, 0, 0), (3, 0, 0, 0), (3, 3, 0, 0)}
    wider = apply_radial_mask(s, RadialMaskSpec(r_frac=0.25, applies_to_scales={1, 2, 3}))
    assert wider.positions() == {(3, 0, 0, 0)}


def test_radial_distance_normalization():
    # Center of a 32-wide subband is at 15.5; the corner sits at
    # sqrt(2)*15.5/16 of the half-width.
    d = radial_distance(np.array([1]), np.array([0]), np.array([0]), 64)
    assert d[0] == pytest.approx(math.hypot(15.5, 15.5) / 16.0)


def test_sparse_encoding_idempotent_on_nonzero_entries():
    rng = np.random.default_rng(21)
    image = rng.normal(scale=30.0, size=(64, 64)) + 250.0
    mask = RadialMaskSpec()
    s = sparsify(image, SPEC, q=0.1, mask=mask)
    again = apply_radial_mask(threshold_top_fraction(densify(s), 0.1), mask)
    nonzero = lambda t: {e[:4]: e[4] for e in t.entries() if e[4] != 0.0}
    assert nonzero(again) == nonzero(s)
    # Counts can differ: the second threshold pads with tie-break zeros,
    # some of which land inside the kept disc.
    assert s.positions() <= threshold_top_fraction(densify(s), 0.1).positions()


def test_densify_zero_fills_and_reconstruct_inverts():
    decomp = _decomp(13)
    s = threshold_top_fraction(decomp, 1.0)  # keep everything
    dense = densify(s)
    np.testing.assert_allclose(dense.to_array(), decomp.to_array(), atol=1e-12)
    image = reconstruct(s)
    rng = np.random.default_rng(13)
    original = rng.normal(scale=40.0, size=(32, 32)) + 260.0
    np.testing.assert_allclose(image, original, atol=1e-8)


def test_compression_ratio_counts_entries():
    s = sparsify(np.random.default_rng(2).normal(size=(64, 64)), SPEC, q=0.1)
    assert compression_ratio(s) == len(s) / 4096
    assert compression_ratio(s) <= 0.1 + 1e-12


def test_duplicate_and_out_of_band_entries_rejected():
    with pytest.raises(ShapeError):
        SparseCoeffSet.from_entries(
            [(1, 1, 0, 0, 1.0), (1, 1, 0, 0, 2.0)], (32, 32), SPEC
        )
    with pytest.raises(ShapeError):
        SparseCoeffSet.from_entries([(1, 1, 16, 0, 1.0)], (32, 32), SPEC)
    with pytest.raises(ShapeError):
        SparseCoeffSet.from_entries([(1, 0, 0, 0, 1.0)], (32, 32), SPEC)
    with pytest.raises(DomainError):
        SparseCoeffSet.from_entries([(1, 1, 0, 0, np.nan)], (32, 32), SPEC)


def test_entries_come_back_in_canonical_order():
    shuffled = [(2, 1, 1, 0, 4.0), (1, 3, 0, 0, 2.0), (1, 1, 0, 1, 1.0), (1, 1, 0, 0, 3.0)]
    s = SparseCoeffSet.from_entries(shuffled, (32, 32), SPEC)
    assert s.entries() == [
        (1, 1, 0, 0, 3.0),
        (1, 1, 0, 1, 1.0),
        (1, 3, 0, 0, 2.0),
        (2, 1, 1, 0, 4.0),
    ]


def test_wsc_round_trip_preserves_everything(tmp_path):
    rng = np.random.default_rng(30)
    image = rng.normal(scale=25.0, size=(64, 64)) + 255.0
    s = sparsify(image, SPEC, q=0.07)
    s.storm_id = "AL052022"
    s.timestamp = datetime(2022, 9, 1, 6, tzinfo=timezone.utc)
    path = tmp_path / "frame.wsc"
    write_wsc(s, path)
    back = read_wsc(path)
    assert back == s
    assert back.storm_id == s.storm_id
    assert back.timestamp == s.timestamp
    assert back.q == s.q and back.r_frac == s.r_frac
    # Shortest round-trip decimals make the file itself reproducible.
    write_wsc(back, tmp_path / "again.wsc")
    assert (tmp_path / "again.wsc").read_bytes() == path.read_bytes()


def test_wsc_rejects_malformed_files(tmp_path):
    good = tmp_path / "good.wsc"
    write_wsc(sparsify(np.random.default_rng(1).normal(size=(32, 32)), SPEC, 0.1), good)
    lines = good.read_text().splitlines()

    (tmp_path / "nohead.wsc").write_text("not json\n")
    with pytest.raises(FormatError):
        read_wsc(tmp_path / "nohead.wsc")

    (tmp_path / "short.wsc").write_text(lines[0] + "\n1,1,0\n")
    with pytest.raises(FormatError):
        read_wsc(tmp_path / "short.wsc")

    (tmp_path / "dup.wsc").write_text(lines[0] + "\n" + lines[1] + "\n" + lines[1] + "\n")
    with pytest.raises(FormatError):
        read_wsc(tmp_path / "dup.wsc")
