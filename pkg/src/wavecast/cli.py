"""Command-line surface for the full pipeline.

Every subcommand is a thin wrapper over one module operation: it reads
declared inputs, writes declared outputs, and prints a one-line JSON
summary to standard output. Errors print a machine-readable JSON object
to standard error; exit codes are 0 for success, 1 for usage and
configuration problems, 2 for data and format problems. Configuration
comes from ``--config FILE`` plus per-field dotted overrides such as
``--wavelet.q 0.05``; unknown flags and unknown config keys are
rejected outright.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import config as cfgmod
from .cam import cam_to_subbands, compute_cam, write_cam_csv, write_pgm
from .dataset import SplitPlan, build_sequences, join_env, read_manifest, split_by_storm, write_manifest
from .envdata import parse_env_table
from .errors import ConfigError, DomainError, FormatError, WavecastError
from .evaluation import evaluate, write_roc_csv, write_summary_json
from .irframe import IrFrame, load_irf, save_irf
from .model import load_model, save_model, train
from .sparse import (
    RadialMaskSpec,
    compression_ratio,
    read_wsc,
    reconstruct,
    sparsify_frame,
    threshold_top_fraction,
    write_wsc,
)
from .synthetic import SynthConfig, gen_synthetic_corpus, load_corpus, write_corpus
from .timefmt import format_utc, parse_utc
from .tokenizer import decode, encode, fit_vocab, read_tokens, read_vocab, write_tokens, write_vocab
from .tracks import compute_ri_labels, fetch_hurdat2, format_hurdat2, parse_hurdat2
from .wavelets import dwt2


class _UsageExit(Exception):
    """Raised by the parser instead of argparse's default exit(2)."""


class _Parser(argparse.ArgumentParser):
    # Prefix abbreviation is off: --mode must not match --model.*.
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageExit(message)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_grid(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    if path.endswith(".csv"):
        return np.loadtxt(path, delimiter=",", ndmin=2)
    raise FormatError(f"{path}: expected a .npy or .csv grid")


def _load_split(path: str) -> SplitPlan:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return SplitPlan.from_json_dict(json.load(fh))
    except json.JSONDecodeError:
        raise FormatError(f"{path}: not valid JSON") from None


# ---------------------------------------------------------------- handlers

def _cmd_ingest_hurdat2(args, cfg):
    if args.src.startswith(("http://", "https://")):
        text = fetch_hurdat2(args.src)
    else:
        text = _read_text(args.src)
    tracks = parse_hurdat2(text)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(format_hurdat2(tracks))
    labels = [lab for t in tracks for lab in compute_ri_labels(t)]
    if args.labels:
        with open(args.labels, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["storm_id", "timestamp", "label", "delta_kt"])
            for lab in labels:
                writer.writerow(
                    [lab.storm_id, format_utc(lab.timestamp), lab.label, lab.delta_kt]
                )
    return {
        "storms": len(tracks),
        "records": sum(len(t.records) for t in tracks),
        "labels": len(labels),
        "ri_positive": sum(lab.label for lab in labels),
        "out": args.out,
    }


def _cmd_ingest_env(args, cfg):
    records = parse_env_table(_read_text(args.src))
    names = list(records[0].predictors) if records else []
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["storm_id", "timestamp"] + names)
        for rec in records:
            row = [rec.storm_id, format_utc(rec.timestamp)]
            row += ["" if rec.predictors[n] is None else repr(rec.predictors[n]) for n in names]
            writer.writerow(row)
    return {"records": len(records), "predictors": names, "out": args.out}


def _cmd_frame_pack(args, cfg):
    frame = IrFrame(
        storm_id=args.storm_id,
        timestamp=parse_utc(args.timestamp),
        pixel_scale_km=args.pixel_scale_km,
        center_lat_deg=args.center_lat,
        center_lon_deg=args.center_lon,
        temps=_load_grid(args.src),
    )
    save_irf(frame, args.out)
    return {"width": frame.width, "storm_id": frame.storm_id, "out": args.out}


def _cmd_frame_unpack(args, cfg):
    frame = load_irf(args.src)
    np.save(args.out, frame.temps)
    return {
        "storm_id": frame.storm_id,
        "timestamp": format_utc(frame.timestamp),
        "width": frame.width,
        "pixel_scale_km": frame.pixel_scale_km,
        "out": args.out,
    }


def _cmd_wavelet_decompose(args, cfg):
    frame = load_irf(args.src)
    decomp = dwt2(frame.temps.astype(np.float64), cfg.wavelet.spec())
    s = threshold_top_fraction(decomp, 1.0)
    s.storm_id, s.timestamp = frame.storm_id, frame.timestamp
    write_wsc(s, args.out)
    return {
        "width": decomp.width,
        "levels": decomp.spec.levels,
        "order": decomp.spec.family_order,
        "entries": len(s),
        "energy": decomp.energy(),
        "out": args.out,
    }


def _cmd_wavelet_sparsify(args, cfg):
    if args.q is not None:
        cfg = cfgmod.apply_override(cfg, "wavelet.q", str(args.q))
    if args.r_frac is not None:
        cfg = cfgmod.apply_override(cfg, "wavelet.r_frac", str(args.r_frac))
    frame = load_irf(args.src)
    s = sparsify_frame(frame, cfg.wavelet.spec(), q=cfg.wavelet.q, mask=cfg.wavelet.mask())
    write_wsc(s, args.out)
    return {
        "entries": len(s),
        "ratio": compression_ratio(s),
        "q": cfg.wavelet.q,
        "r_frac": cfg.wavelet.r_frac,
        "out": args.out,
    }


def _cmd_wavelet_reconstruct(args, cfg):
    s = read_wsc(args.src)
    image = reconstruct(s)
    np.save(args.out, image)
    return {"width": image.shape[0], "entries": len(s), "out": args.out}


def _cmd_wavelet_ratio(args, cfg):
    s = read_wsc(args.src)
    return {"ratio": compression_ratio(s), "entries": len(s)}


def _cmd_synth_generate(args, cfg):
    synth_cfg = SynthConfig(
        n_storms=args.n_storms,
        frames_per_storm=args.frames_per_storm,
        image_width=args.width,
        noise_sd=args.noise_sd,
        ri_fraction=args.ri_fraction,
        seed=args.seed,
    )
    corpus = gen_synthetic_corpus(synth_cfg)
    write_corpus(corpus, args.out_dir)
    return {
        "storms": synth_cfg.n_storms,
        "frames": len(corpus.frames),
        "ri_storms": len(corpus.ri_storm_ids),
        "out_dir": args.out_dir,
    }


def _cmd_dataset_build(args, cfg):
    corpus = load_corpus(args.corpus_dir)
    labels = [lab for t in corpus.tracks for lab in compute_ri_labels(t)]
    if args.mode == "wavelet":
        frames = [
            sparsify_frame(f, cfg.wavelet.spec(), q=cfg.wavelet.q, mask=cfg.wavelet.mask())
            for f in corpus.frames
        ]
    else:
        frames = corpus.frames
    result = build_sequences(
        frames, labels,
        window_hours=cfg.dataset.window, stride_hours=cfg.dataset.stride,
    )
    samples = result.samples
    if args.env:
        names = [n for n in args.predictors.split(",") if n] if args.predictors else []
        samples = join_env(samples, parse_env_table(_read_text(args.env)), names)
    frames_dir = args.frames_dir or os.path.join(
        os.path.dirname(os.path.abspath(args.manifest)) or ".", "frames"
    )
    write_manifest(samples, args.manifest, frames_dir)
    return {
        "samples": len(samples),
        "skipped_gaps": result.n_skipped_gaps,
        "positives": sum(s.label for s in samples),
        "mode": args.mode,
        "manifest": args.manifest,
    }


def _cmd_dataset_split(args, cfg):
    samples = read_manifest(args.manifest)
    plan = split_by_storm(samples, fractions=cfg.dataset.fractions, seed=cfg.dataset.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(plan.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")
    return {
        "storms": {p: len(getattr(plan, p)) for p in ("train", "validation", "test")},
        "samples": {p: len(plan.select(samples, p)) for p in ("train", "validation", "test")},
        "out": args.out,
    }


def _cmd_model_train(args, cfg):
    samples = read_manifest(args.manifest)
    plan = _load_split(args.split)
    train_samples = plan.select(samples, "train")
    model = train(train_samples, cfg.model)
    save_model(model, args.out)
    return {
        "train_samples": len(train_samples),
        "prevalence": model.prevalence,
        "input_mode": model.config.input_mode,
        "epochs": model.config.epochs,
        "out": args.out,
    }


def _cmd_model_eval(args, cfg):
    samples = read_manifest(args.manifest)
    plan = _load_split(args.split)
    chosen = plan.select(samples, args.partition)
    model = load_model(args.model)
    report = evaluate(model, chosen)
    if args.roc:
        write_roc_csv(report, args.roc)
    if args.summary:
        write_summary_json(report, args.summary)
    out = report.to_json_dict()
    out["partition"] = args.partition
    return out


def _cmd_model_cam(args, cfg):
    samples = read_manifest(args.manifest)
    if not 0 <= args.index < len(samples):
        raise DomainError(f"sample index {args.index} outside 0..{len(samples) - 1}")
    sample = samples[args.index]
    model = load_model(args.model)
    cam = compute_cam(model, sample, class_index=args.class_index)
    csv_path = args.out_prefix + ".csv"
    pgm_path = args.out_prefix + ".pgm"
    write_cam_csv(cam, csv_path)
    write_pgm(cam.overlay, pgm_path)
    summary = {
        "storm_id": sample.storm_id,
        "t": format_utc(sample.t),
        "class_index": args.class_index,
        "feature_shape": list(cam.weights.shape),
        "cam_csv": csv_path,
        "cam_pgm": pgm_path,
    }
    if args.subbands:
        if model.config.input_mode != "wavelet":
            raise ConfigError("subband slicing needs a wavelet-mode model")
        slices = cam_to_subbands(cam, sample.frames[0].spec)
        paths = {}
        for (j, k), grid in sorted(slices.items()):
            p = f"{args.out_prefix}_s{j}_o{k}.csv"
            with open(p, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                for row in grid:
                    writer.writerow([repr(float(v)) for v in row])
            paths[f"{j},{k}"] = p
        summary["subband_csv"] = paths
    return summary


def _pool_coefficients(samples) -> np.ndarray:
    chunks = []
    for s in samples:
        for f in s.frames:
            if not hasattr(f, "value"):
                raise DomainError("token fitting needs a wavelet-mode manifest")
            chunks.append(f.value)
    if not chunks:
        raise DomainError("no coefficients to fit on")
    return np.concatenate(chunks)


def _cmd_token_fit(args, cfg):
    samples = read_manifest(args.manifest)
    if args.split:
        samples = _load_split(args.split).select(samples, "train")
    vocab = fit_vocab(_pool_coefficients(samples), cfg.tokenizer.V)
    write_vocab(vocab, args.out)
    return {"V": vocab.size, "fitted_on": vocab.fitted_on, "out": args.out}


def _cmd_token_encode(args, cfg):
    s = read_wsc(args.src)
    vocab = read_vocab(args.vocab)
    t = encode(s, vocab)
    write_tokens(t, args.out)
    return {"tokens": len(t), "out": args.out}


def _cmd_token_decode(args, cfg):
    t = read_tokens(args.src)
    vocab = read_vocab(args.vocab)
    s = decode(t, vocab)
    write_wsc(s, args.out)
    return {"entries": len(s), "out": args.out}


# ---------------------------------------------------------------- parser

def _dest(dotted: str) -> str:
    return "ov__" + dotted.replace(".", "__")


def _build_parser() -> _Parser:
    # The shared flags appear on both the group and the leaf parsers, and
    # argparse merges a subparser's fresh namespace over its parent's, so
    # their defaults must be SUPPRESS or an unset leaf default would
    # erase a value given before the subcommand.
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS,
                        help="pipeline config JSON")
    for dotted in cfgmod.dotted_fields():
        common.add_argument(f"--{dotted}", dest=_dest(dotted), metavar="VALUE",
                            default=argparse.SUPPRESS)

    parser = _Parser(prog="wavecast", description=__doc__, parents=[common])
    top = parser.add_subparsers(dest="group", required=True)

    ingest = top.add_parser("ingest", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = ingest.add_parser("hurdat2", parents=[common])
    p.add_argument("src", help="best-track file or URL")
    p.add_argument("out", help="normalized best-track output")
    p.add_argument("--labels", help="also write RI labels CSV here")
    p.set_defaults(handler=_cmd_ingest_hurdat2)
    p = ingest.add_parser("env", parents=[common])
    p.add_argument("src")
    p.add_argument("out")
    p.set_defaults(handler=_cmd_ingest_env)

    frame = top.add_parser("frame", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = frame.add_parser("pack", parents=[common])
    p.add_argument("src", help=".npy or .csv temperature grid")
    p.add_argument("out", help=".irf output")
    p.add_argument("--storm-id", required=True)
    p.add_argument("--timestamp", required=True)
    p.add_argument("--pixel-scale-km", type=float, default=4.0)
    p.add_argument("--center-lat", type=float, default=0.0)
    p.add_argument("--center-lon", type=float, default=0.0)
    p.set_defaults(handler=_cmd_frame_pack)
    p = frame.add_parser("unpack", parents=[common])
    p.add_argument("src")
    p.add_argument("out", help=".npy output")
    p.set_defaults(handler=_cmd_frame_unpack)

    wavelet = top.add_parser("wavelet", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = wavelet.add_parser("decompose", parents=[common])
    p.add_argument("src")
    p.add_argument("out")
    p.set_defaults(handler=_cmd_wavelet_decompose)
    p = wavelet.add_parser("sparsify", parents=[common])
    p.add_argument("src")
    p.add_argument("out")
    p.add_argument("--q", type=float)
    p.add_argument("--r-frac", type=float)
    p.set_defaults(handler=_cmd_wavelet_sparsify)
    p = wavelet.add_parser("reconstruct", parents=[common])
    p.add_argument("src")
    p.add_argument("out", help=".npy output")
    p.set_defaults(handler=_cmd_wavelet_reconstruct)
    p = wavelet.add_parser("ratio", parents=[common])
    p.add_argument("src")
    p.set_defaults(handler=_cmd_wavelet_ratio)

    synth = top.add_parser("synth", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = synth.add_parser("generate", parents=[common])
    p.add_argument("out_dir")
    p.add_argument("--n-storms", type=int, default=20)
    p.add_argument("--frames-per-storm", type=int, default=16)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--noise-sd", type=float, default=2.0)
    p.add_argument("--ri-fraction", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_synth_generate)

    dataset = top.add_parser("dataset", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = dataset.add_parser("build", parents=[common])
    p.add_argument("corpus_dir")
    p.add_argument("manifest")
    p.add_argument("--frames-dir")
    p.add_argument("--mode", choices=("wavelet", "raw"), default="wavelet")
    p.add_argument("--env", help="environmental predictor CSV")
    p.add_argument("--predictors", help="comma-separated predictor names")
    p.set_defaults(handler=_cmd_dataset_build)
    p = dataset.add_parser("split", parents=[common])
    p.add_argument("manifest")
    p.add_argument("out")
    p.set_defaults(handler=_cmd_dataset_split)

    model = top.add_parser("model", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = model.add_parser("train", parents=[common])
    p.add_argument("manifest")
    p.add_argument("split")
    p.add_argument("out")
    p.set_defaults(handler=_cmd_model_train)
    p = model.add_parser("eval", parents=[common])
    p.add_argument("manifest")
    p.add_argument("split")
    p.add_argument("model")
    p.add_argument("--partition", choices=("train", "validation", "test"), default="test")
    p.add_argument("--roc", help="ROC points CSV output")
    p.add_argument("--summary", help="summary JSON output")
    p.set_defaults(handler=_cmd_model_eval)
    p = model.add_parser("cam", parents=[common])
    p.add_argument("manifest")
    p.add_argument("model")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--class-index", type=int, default=1)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--subbands", action="store_true")
    p.set_defaults(handler=_cmd_model_cam)

    token = top.add_parser("token", parents=[common]).add_subparsers(
        dest="action", required=True
    )
    p = token.add_parser("fit", parents=[common])
    p.add_argument("manifest")
    p.add_argument("out")
    p.add_argument("--split", help="restrict fitting to the plan's train storms")
    p.set_defaults(handler=_cmd_token_fit)
    p = token.add_parser("encode", parents=[common])
    p.add_argument("src")
    p.add_argument("vocab")
    p.add_argument("out")
    p.set_defaults(handler=_cmd_token_encode)
    p = token.add_parser("decode", parents=[common])
    p.add_argument("src")
    p.add_argument("vocab")
    p.add_argument("out")
    p.set_defaults(handler=_cmd_token_decode)

    return parser


def _error_json(exc: Exception) -> str:
    name = "UsageError" if isinstance(exc, _UsageExit) else type(exc).__name__
    return json.dumps({"error": name, "message": str(exc)}, sort_keys=True)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = cfgmod.load_config(getattr(args, "config", None))
        for dotted in cfgmod.dotted_fields():
            raw = getattr(args, _dest(dotted), None)
            if raw is not None:
                cfg = cfgmod.apply_override(cfg, dotted, raw)
        summary = args.handler(args, cfg)
    except _UsageExit as exc:
        print(_error_json(exc), file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 1
    except WavecastError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True))
    return 0
