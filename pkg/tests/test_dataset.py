from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from wavecast import (
    ConfigError,
    EnvRecord,
    IrFrame,
    NormStats,
    RiLabel,
    SplitPlan,
    WaveletSpec,
    apply_norm,
    build_sequences,
    fit_norm,
    join_env,
    read_manifest,
    sparsify_frame,
    split_by_storm,
    unapply_norm,
    write_manifest,
)

SPEC = WaveletSpec(2, 2)
T0 = datetime(2021, 8, 1, 0, tzinfo=timezone.utc)


def _hours(n):
    return timedelta(hours=n)


def _frames(storm_id, n, seed=0, width=16):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        temps = (rng.normal(scale=20.0, size=(width, width)) + 255.0).astype(np.float32)
        frame = IrFrame(storm_id, T0 + _hours(6 * i), 4.0, 15.0, -40.0, temps)
        out.append(sparsify_frame(frame, SPEC, q=0.2))
    return out


def _label(storm_id, hours, label=0):
    return RiLabel(storm_id, T0 + _hours(hours), label, 30 if label else 0)


def test_sample_covers_the_window_ending_at_t():
    frames = _frames("AL012021", 8)
    labels = [_label("AL012021", 24, 1)]
    result = build_sequences(frames, labels)
    assert len(result) == 1 and result.n_skipped_gaps == 0
    sample = result[0]
    assert sample.label == 1
    assert sample.t == T0 + _hours(24)
    assert sample.frame_times == [T0 + _hours(h) for h in (0, 6, 12, 18, 24)]
    assert [f.timestamp for f in sample.frames] == sample.frame_times


def test_anchors_without_full_history_are_skipped():
    frames = _frames("AL012021", 8)
    labels = [_label("AL012021", h) for h in (0, 6, 18, 24, 42)]
    result = build_sequences(frames, labels)
    # Only t = 24 h and t = 42 h have five frames behind them.
    assert [s.t for s in result.samples] == [T0 + _hours(24), T0 + _hours(42)]
    assert result.n_skipped_gaps == 3
    assert result.n_labels == 5


def test_gap_inside_the_window_skips_that_anchor():
    frames = _frames("AL012021", 8)
    del frames[2]  # t = 12 h
    result = build_sequences(frames, [_label("AL012021", 24), _label("AL012021", 42)])
    # The 24 h anchor needs the missing 12 h frame; the 42 h one does not.
    assert [s.t for s in result.samples] == [T0 + _hours(42)]
    assert result.n_skipped_gaps == 1


def test_frames_never_cross_storms():
    frames = _frames("AL012021", 5) + _frames("AL022021", 5, seed=1)
    labels = [_label("AL012021", 24), _label("AL992021", 24)]
    result = build_sequences(frames, labels)
    assert len(result) == 1
    assert all(f.storm_id == "AL012021" for f in result[0].frames)
    assert result.n_skipped_gaps == 1  # no frames at all for AL992021


def test_window_stride_validation():
    with pytest.raises(ConfigError):
        build_sequences([], [], window_hours=24, stride_hours=7)
    with pytest.raises(ConfigError):
        build_sequences([], [], window_hours=0)
    with pytest.raises(ConfigError):
        build_sequences([], [], stride_hours=-6)


def _many_storm_samples(n_storms=10, per_storm=4):
    samples = []
    for i in range(n_storms):
        sid = f"AL{i:02d}2021"
        frames = _frames(sid, per_storm + 4, seed=i)
        labels = [_label(sid, 24 + 6 * j) for j in range(per_storm)]
        samples.extend(build_sequences(frames, labels).samples)
    return samples


def test_split_partitions_are_disjoint_and_exhaustive():
    samples = _many_storm_samples()
    plan = split_by_storm(samples, seed=3)
    ids = {s.storm_id for s in samples}
    assert plan.train | plan.validation | plan.test == ids
    assert not (plan.train & plan.validation)
    assert not (plan.train & plan.test)
    assert not (plan.validation & plan.test)
    assert len(plan.select(samples, "train")) > len(plan.select(samples, "test"))


def test_split_is_deterministic_in_the_seed():
    samples = _many_storm_samples()
    assert split_by_storm(samples, seed=5) == split_by_storm(samples, seed=5)
    plans = {split_by_storm(samples, seed=s).to_json_dict()["train"][0] for s in range(8)}
    assert len(plans) > 1  # the seed actually moves storms around


def test_split_tracks_requested_fractions():
    samples = _many_storm_samples(n_storms=30, per_storm=5)
    plan = split_by_storm(samples, fractions=(0.5, 0.25, 0.25), seed=1)
    n = len(samples)
    assert abs(len(plan.select(samples, "train")) / n - 0.5) < 0.1
    assert abs(len(plan.select(samples, "test")) / n - 0.25) < 0.1


def test_split_validation_errors():
    samples = _many_storm_samples(n_storms=2)
    with pytest.raises(ConfigError):
        split_by_storm(samples)
    with pytest.raises(ConfigError):
        split_by_storm(_many_storm_samples(), fractions=(0.5, 0.5, 0.5))


def test_split_plan_round_trips_through_json():
    plan = split_by_storm(_many_storm_samples(), seed=2)
    assert SplitPlan.from_json_dict(plan.to_json_dict()) == plan
    assert plan.partition_of(next(iter(plan.train))) == "train"
    assert plan.partition_of("XX999999") is None


def test_norm_standardizes_groups_and_inverts_exactly():
    samples = _many_storm_samples(n_storms=4)
    stats = fit_norm(samples)
    assert stats.groups  # something was fit
    normed = [apply_norm(s, stats) for s in samples]
    pooled = {}
    for s in normed:
        for f in s.frames:
            for j, k, _, _, v in f.entries():
                pooled.setdefault((j, k), []).append(v)
    for key, vals in pooled.items():
        vals = np.array(vals)
        assert abs(vals.mean()) < 1e-9
        assert abs(vals.std() - 1.0) < 1e-9 or vals.std() == 0.0
    back = [unapply_norm(s, stats) for s in normed]
    for orig, restored in zip(samples, back):
        for f0, f1 in zip(orig.frames, restored.frames):
            np.testing.assert_allclose(f1.value, f0.value, atol=1e-12)


def test_norm_stats_survive_json():
    stats = fit_norm(_many_storm_samples(n_storms=3))
    again = NormStats.from_json_dict(stats.to_json_dict())
    assert again.groups == stats.groups
    assert again.lookup(9, 9) == (0.0, 1.0)


def test_join_env_exact_match_and_missing_value_rules():
    samples = _many_storm_samples(n_storms=3, per_storm=2)
    target = samples[0]
    records = [
        EnvRecord(target.storm_id, target.t, {"shear": 12.0, "rh": 55.0}),
        EnvRecord(samples[1].storm_id, samples[1].t, {"shear": None, "rh": 60.0}),
    ]
    joined = join_env(samples, records, ["shear", "rh"])
    assert joined[0].env == [12.0, 55.0]
    assert joined[1].env is None  # missing predictor value
    assert joined[2].env is None  # no record at all
    assert all(s.env_names == ["shear", "rh"] for s in joined)
    with pytest.raises(ConfigError):
        join_env(samples, records, ["nonesuch"])
    plain = join_env(samples, records, [])
    assert all(s.env == [] for s in plain)


def test_manifest_round_trip(tmp_path):
    samples = _many_storm_samples(n_storms=3, per_storm=3)
    samples = join_env(
        samples,
        [EnvRecord(samples[0].storm_id, samples[0].t, {"shear": 9.5})],
        ["shear"],
    )
    manifest = tmp_path / "data" / "manifest.jsonl"
    manifest.parent.mkdir()
    write_manifest(samples, manifest, tmp_path / "data" / "frames")
    back = read_manifest(manifest)
    assert len(back) == len(samples)
    by_key = {(s.storm_id, s.t): s for s in samples}
    for s in back:
        orig = by_key[(s.storm_id, s.t)]
        assert s.label == orig.label
        assert s.env == orig.env
        assert s.env_names == orig.env_names
        assert s.frame_times == orig.frame_times
        for f0, f1 in zip(orig.frames, s.frames):
            assert f1 == f0


def test_manifest_shares_frame_files_between_samples(tmp_path):
    frames = _frames("AL012021", 8)
    labels = [_label("AL012021", 24), _label("AL012021", 30)]
    samples = build_sequences(frames, labels).samples
    write_manifest(samples, tmp_path / "m.jsonl", tmp_path / "frames")
    # 6 distinct frames cover the two overlapping windows of 5.
    assert len(list((tmp_path / "frames").iterdir())) == 6
    back = read_manifest(tmp_path / "m.jsonl")
    assert back[0].frames[1] is back[1].frames[0]  # cache dedupes loads
