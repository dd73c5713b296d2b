import json
import math
import subprocess
import sys

import numpy as np
import pytest

from wavecast import parse_env_table, parse_hurdat2, read_wsc
from wavecast.cli import main

HURDAT2 = """\
AL092020,             ETA,      3,
20201031, 1800,, TD, 14.9N, 71.1W, 25, 1006,
20201101, 0000,, TD, 14.8N, 72.3W, 30, 1005,
20201101, 0600, L, TS, 14.6N, 73.5W, 35, 1002,
"""

ENV_TABLE = """\
storm_id,timestamp,shear_kt,rh_mid
AL092020,2020-10-31T18:00:00Z,12.5,61.0
AL092020,2020-11-01T00:00:00Z,,58.5
EP052019,2019-07-04T06:00:00Z,8.0,70.0
"""


def run_ok(capsys, *argv):
    assert main(list(argv)) == 0
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def run_fail(capsys, expect_code, *argv):
    assert main(list(argv)) == expect_code
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def _write_grid(path, width=16, seed=0):
    rng = np.random.default_rng(seed)
    grid = rng.uniform(180.0, 300.0, size=(width, width))
    np.save(path, grid)
    return grid


def _pack(capsys, tmp_path, width=16, seed=0, name="frame"):
    grid = _write_grid(tmp_path / f"{name}.npy", width, seed)
    irf = tmp_path / f"{name}.irf"
    run_ok(
        capsys, "frame", "pack", str(tmp_path / f"{name}.npy"), str(irf),
        "--storm-id", "AL012021", "--timestamp", "2021-08-01T00:00:00Z",
    )
    return grid, irf


def test_no_arguments_is_a_usage_error(capsys):
    err = run_fail(capsys, 1)
    assert err["error"] == "UsageError"


def test_unknown_flag_fails_before_any_output(capsys, tmp_path):
    out_dir = tmp_path / "corpus"
    err = run_fail(capsys, 1, "synth", "generate", str(out_dir), "--bogus", "3")
    assert err["error"] == "UsageError"
    assert not out_dir.exists()


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "wavecast" in capsys.readouterr().out


def test_bad_override_value_is_a_config_error(capsys, tmp_path):
    err = run_fail(capsys, 1, "synth", "generate", str(tmp_path / "c"),
                   "--model.epochs", "notanint")
    assert err["error"] == "ConfigError"
    assert "notanint" in err["message"]


def test_unknown_config_section_is_a_config_error(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"wavevlet": {"q": 0.2}}')
    err = run_fail(capsys, 1, "wavelet", "ratio", "whatever.wsc", "--config", str(cfg))
    assert err["error"] == "ConfigError"
    assert "wavevlet" in err["message"]


def test_missing_input_exits_two(capsys, tmp_path):
    err = run_fail(capsys, 2, "frame", "unpack",
                   str(tmp_path / "nope.irf"), str(tmp_path / "out.npy"))
    assert err["error"] == "FileNotFoundError"


def test_corrupt_frame_exits_two(capsys, tmp_path):
    bad = tmp_path / "bad.irf"
    bad.write_bytes(b"NOPE" + b"\x00" * 64)
    err = run_fail(capsys, 2, "frame", "unpack", str(bad), str(tmp_path / "out.npy"))
    assert err["error"] == "FormatError"


def test_pack_rejects_an_off_size_grid(capsys, tmp_path):
    rng = np.random.default_rng(1)
    np.save(tmp_path / "odd.npy", rng.uniform(180, 300, size=(15, 15)))
    err = run_fail(
        capsys, 2, "frame", "pack", str(tmp_path / "odd.npy"), str(tmp_path / "o.irf"),
        "--storm-id", "AL012021", "--timestamp", "2021-08-01T00:00:00Z",
    )
    assert err["error"] == "FormatError"


def test_frame_pack_unpack_round_trip(capsys, tmp_path):
    grid, irf = _pack(capsys, tmp_path)
    out = tmp_path / "back.npy"
    summary = run_ok(capsys, "frame", "unpack", str(irf), str(out))
    assert summary["storm_id"] == "AL012021"
    assert summary["timestamp"] == "2021-08-01T00:00:00Z"
    assert summary["width"] == 16
    back = np.load(out)
    assert back.dtype == np.float32
    np.testing.assert_array_equal(back, grid.astype(np.float32))


def test_decompose_then_reconstruct_inverts(capsys, tmp_path):
    grid, irf = _pack(capsys, tmp_path, width=32)
    wsc = tmp_path / "full.wsc"
    summary = run_ok(capsys, "wavelet", "decompose", str(irf), str(wsc))
    assert summary["entries"] == 32 * 32  # q=1 keeps every coefficient
    assert summary["energy"] > 0
    out = tmp_path / "recon.npy"
    run_ok(capsys, "wavelet", "reconstruct", str(wsc), str(out))
    np.testing.assert_allclose(np.load(out), grid.astype(np.float32), atol=1e-8)


def test_sparsify_shortcut_and_dotted_override_agree(capsys, tmp_path):
    _, irf = _pack(capsys, tmp_path, width=32)
    a, b = tmp_path / "a.wsc", tmp_path / "b.wsc"
    sa = run_ok(capsys, "wavelet", "sparsify", str(irf), str(a), "--q", "0.05")
    sb = run_ok(capsys, "wavelet", "sparsify", str(irf), str(b), "--wavelet.q", "0.05")
    assert sa["q"] == sb["q"] == 0.05
    assert a.read_bytes() == b.read_bytes()
    assert sa["ratio"] <= math.ceil(0.05 * 1024) / 1024
    ratio = run_ok(capsys, "wavelet", "ratio", str(a))
    assert ratio["entries"] == sa["entries"]
    assert ratio["ratio"] == pytest.approx(sa["ratio"])


def test_config_file_applies_and_dotted_flags_win(capsys, tmp_path):
    _, irf = _pack(capsys, tmp_path, width=32)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"wavelet": {"q": 0.2}}))
    s1 = run_ok(capsys, "wavelet", "sparsify", str(irf), str(tmp_path / "c.wsc"),
                "--config", str(cfg))
    assert s1["q"] == 0.2
    s2 = run_ok(capsys, "wavelet", "sparsify", str(irf), str(tmp_path / "d.wsc"),
                "--config", str(cfg), "--wavelet.q", "0.08")
    assert s2["q"] == 0.08
    # Dotted flags are accepted before the subcommand as well.
    s3 = run_ok(capsys, "wavelet", "--wavelet.q", "0.08", "sparsify",
                str(irf), str(tmp_path / "e.wsc"), "--config", str(cfg))
    assert s3["q"] == 0.08
    # And ahead of the group, the conventional spot for a global flag.
    s4 = run_ok(capsys, "--config", str(cfg), "--wavelet.q", "0.08", "wavelet",
                "sparsify", str(irf), str(tmp_path / "f.wsc"))
    assert s4["q"] == 0.08
    assert (tmp_path / "f.wsc").read_bytes() == (tmp_path / "e.wsc").read_bytes()


def test_ingest_hurdat2_normalizes_and_labels(capsys, tmp_path):
    src = tmp_path / "best.txt"
    src.write_text(HURDAT2)
    out = tmp_path / "norm.txt"
    labels = tmp_path / "labels.csv"
    summary = run_ok(capsys, "ingest", "hurdat2", str(src), str(out),
                     "--labels", str(labels))
    assert summary["storms"] == 1
    assert summary["records"] == 3
    assert summary["labels"] == 0  # track too short for any 24 h pair
    (track,) = parse_hurdat2(out.read_text())
    assert track.storm_id == "AL092020"
    assert [r.max_wind_kt for r in track.records] == [25, 30, 35]
    assert labels.read_text().splitlines()[0] == "storm_id,timestamp,label,delta_kt"


def test_ingest_env_emits_a_clean_table(capsys, tmp_path):
    src = tmp_path / "env.csv"
    src.write_text(ENV_TABLE)
    out = tmp_path / "norm.csv"
    summary = run_ok(capsys, "ingest", "env", str(src), str(out))
    assert summary["records"] == 3
    assert summary["predictors"] == ["shear_kt", "rh_mid"]
    records = parse_env_table(out.read_text())
    assert records[1].predictors["shear_kt"] is None
    assert records[2].predictors["rh_mid"] == 70.0


def test_full_pipeline_runs_end_to_end(capsys, tmp_path):
    corpus = tmp_path / "corpus"
    summary = run_ok(capsys, "synth", "generate", str(corpus),
                     "--n-storms", "12", "--width", "32", "--seed", "5")
    assert summary["storms"] == 12
    assert summary["frames"] == 12 * 16

    manifest = tmp_path / "manifest.json"
    built = run_ok(capsys, "dataset", "build", str(corpus), str(manifest))
    assert built["mode"] == "wavelet"
    assert built["samples"] > 0
    assert 0 < built["positives"] < built["samples"]

    split = tmp_path / "split.json"
    parts = run_ok(capsys, "dataset", "split", str(manifest), str(split))
    assert sum(parts["storms"].values()) == 12
    assert sum(parts["samples"].values()) == built["samples"]

    model = tmp_path / "model.bin"
    trained = run_ok(capsys, "model", "train", str(manifest), str(split), str(model),
                     "--model.epochs", "3")
    assert trained["input_mode"] == "wavelet"
    assert trained["epochs"] == 3
    assert 0 < trained["prevalence"] < 1

    roc = tmp_path / "roc.csv"
    report = run_ok(capsys, "model", "eval", str(manifest), str(split), str(model),
                    "--partition", "test", "--roc", str(roc),
                    "--summary", str(tmp_path / "summary.json"))
    assert 0 <= report["auc"] <= 1
    assert report["partition"] == "test"
    assert roc.read_text().splitlines()[0] == "fpr,tpr,threshold"
    assert json.loads((tmp_path / "summary.json").read_text())["auc"] == report["auc"]

    cam_prefix = str(tmp_path / "cam")
    cammed = run_ok(capsys, "model", "cam", str(manifest), str(model),
                    "--index", "0", "--out-prefix", cam_prefix, "--subbands")
    assert (tmp_path / "cam.csv").exists()
    assert (tmp_path / "cam.pgm").read_bytes().startswith(b"P5\n")
    assert len(cammed["subband_csv"]) == 10  # 3 scales x 3 details + approx

    vocab = tmp_path / "vocab.json"
    fitted = run_ok(capsys, "token", "fit", str(manifest), str(vocab),
                    "--split", str(split))
    assert fitted["V"] == 64

    _, irf = _pack(capsys, tmp_path, width=32)
    wsc = tmp_path / "one.wsc"
    run_ok(capsys, "wavelet", "sparsify", str(irf), str(wsc))
    tok = tmp_path / "frame.tok"
    encoded = run_ok(capsys, "token", "encode", str(wsc), str(vocab), str(tok))
    assert encoded["tokens"] == len(read_wsc(wsc))
    back = tmp_path / "back.wsc"
    decoded = run_ok(capsys, "token", "decode", str(tok), str(vocab), str(back))
    assert decoded["entries"] == encoded["tokens"]
    assert read_wsc(back).positions() == read_wsc(wsc).positions()


def test_cam_on_a_raw_model_refuses_subband_slicing(capsys, tmp_path):
    corpus = tmp_path / "corpus"
    run_ok(capsys, "synth", "generate", str(corpus),
           "--n-storms", "6", "--width", "32", "--seed", "1",
           "--ri-fraction", "0.5")
    manifest = tmp_path / "manifest.json"
    run_ok(capsys, "dataset", "build", str(corpus), str(manifest), "--mode", "raw")
    split = tmp_path / "split.json"
    run_ok(capsys, "dataset", "split", str(manifest), str(split))
    model = tmp_path / "model.bin"
    run_ok(capsys, "model", "train", str(manifest), str(split), str(model),
           "--model.epochs", "1", "--model.input_mode", "raw")
    err = run_fail(capsys, 1, "model", "cam", str(manifest), str(model),
                   "--out-prefix", str(tmp_path / "cam"), "--subbands")
    assert err["error"] == "ConfigError"
    ok = run_ok(capsys, "model", "cam", str(manifest), str(model),
                "--out-prefix", str(tmp_path / "cam"))
    assert (tmp_path / "cam.pgm").exists()
    assert "subband_csv" not in ok


def test_module_entrypoint_reports_usage(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "wavecast"], capture_output=True, text=True,
    )
    assert proc.returncode == 1
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"] == "UsageError"
