"""Convolutional nowcast classifier over frame sequences.

Frames are stacked as input channels: wavelet mode lays each sparse
frame out as its nested-quadrant subband image, raw mode uses the
standardized temperature grids. A few stride-2 conv blocks feed global
average pooling and a single linear map to two class scores, the
arrangement class-activation maps require. An optional small dense
branch embeds the environmental predictor vector and is concatenated
after the pooling, so the spatial path stays CAM-compatible.

Everything runs on numpy with plain mini-batch gradient descent. That
is a deliberate choice, not a limitation: the model is tiny, and a
handwritten forward/backward with seeded initialization and a seeded
batch order is bit-reproducible across runs, which the pipeline's
determinism contract demands.

The score used downstream is p_t = posterior - training prevalence; a
sequence is "primed" exactly when p_t > 0, i.e. when the model places
more mass on intensification than the base rate.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .dataset import NormStats, apply_norm, fit_norm
from .errors import ConfigError, DomainError, FormatError, ShapeError, TrainingError
from .irframe import IrFrame
from .sparse import SparseCoeffSet, densify

INPUT_MODES = ("wavelet", "raw")
MODEL_MAGIC = b"WNC1"


@dataclass(frozen=True)
class ClassifierConfig:
    """Architecture and training knobs; defaults train in minutes."""

    input_mode: str = "wavelet"
    conv_blocks: tuple = ((16, 3, 2), (32, 3, 2), (64, 3, 2))
    env_hidden: tuple | None = None
    seed: int = 0
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 32

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise ConfigError(f"input_mode must be one of {INPUT_MODES}")
        blocks = tuple(tuple(int(v) for v in blk) for blk in self.conv_blocks)
        if not blocks:
            raise ConfigError("need at least one conv block")
        for blk in blocks:
            if len(blk) != 3:
                raise ConfigError(f"conv block must be (channels, kernel, stride), got {blk}")
            out_ch, k, s = blk
            if out_ch < 1 or s < 1 or k < 1 or k % 2 == 0:
                raise ConfigError(f"bad conv block {blk}: kernel must be odd, sizes positive")
        object.__setattr__(self, "conv_blocks", blocks)
        if self.env_hidden is not None:
            env = (self.env_hidden,) if isinstance(self.env_hidden, int) else self.env_hidden
            hidden = tuple(int(v) for v in env)
            if any(h < 1 for h in hidden):
                raise ConfigError("env_hidden sizes must be positive")
            object.__setattr__(self, "env_hidden", hidden)
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "input_mode": self.input_mode,
            "conv_blocks": [list(b) for b in self.conv_blocks],
            "env_hidden": list(self.env_hidden) if self.env_hidden is not None else None,
            "seed": self.seed,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ClassifierConfig":
        known = {
            "input_mode", "conv_blocks", "env_hidden", "seed",
            "learning_rate", "epochs", "batch_size",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "conv_blocks" in kwargs:
            kwargs["conv_blocks"] = tuple(tuple(b) for b in kwargs["conv_blocks"])
        if kwargs.get("env_hidden") is not None:
            kwargs["env_hidden"] = tuple(kwargs["env_hidden"])
        return cls(**kwargs)


@dataclass
class TrainedModel:
    """Learned parameters plus everything needed to score new samples."""

    config: ClassifierConfig
    params: dict
    prevalence: float
    norm_stats: NormStats | None
    raw_stats: tuple | None
    input_channels: int
    input_width: int
    env_dim: int

    def __post_init__(self):
        if not 0.0 < self.prevalence < 1.0:
            raise DomainError(f"prevalence must be in (0, 1), got {self.prevalence}")


def assemble_input(sample, mode: str, stats: NormStats | None = None,
                   raw_stats: tuple | None = None) -> np.ndarray:
    """Stack a sample's frames into a (channels, height, width) array.

    Wavelet mode densifies each (normalized) sparse frame into the
    nested-quadrant subband image; raw mode standardizes temperatures.
    """
    if mode not in INPUT_MODES:
        raise ConfigError(f"input_mode must be one of {INPUT_MODES}")
    frames = sample.frames
    if not frames:
        raise ShapeError("sample has no frames")
    if mode == "wavelet":
        for f in frames:
            if not isinstance(f, SparseCoeffSet):
                raise ShapeError("wavelet mode needs sparse coefficient frames")
            if f.source_dims != frames[0].source_dims or f.spec != frames[0].spec:
                raise ShapeError("frames disagree on dims or transform spec")
        if stats is not None:
            frames = apply_norm(sample, stats).frames
        channels = [densify(f).to_array() for f in frames]
    else:
        for f in frames:
            if not isinstance(f, IrFrame):
                raise ShapeError("raw mode needs infrared frames")
            if f.temps.shape != frames[0].temps.shape:
                raise ShapeError("frames disagree on dims")
        mean, sd = raw_stats if raw_stats is not None else (0.0, 1.0)
        channels = [(f.temps.astype(np.float64) - mean) / sd for f in frames]
    return np.stack(channels)


def _conv_forward(x, w, b, stride):
    """Strided same-padding convolution; returns output and padded input."""
    n_batch, _, h_in, w_in = x.shape
    k = w.shape[2]
    pad = k // 2
    h_out = (h_in + 2 * pad - k) // stride + 1
    w_out = (w_in + 2 * pad - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.zeros((n_batch, w.shape[0], h_out, w_out))
    for dy in range(k):
        for dx in range(k):
            window = xp[:, :, dy:dy + stride * h_out:stride, dx:dx + stride * w_out:stride]
            out += np.einsum("oc,bcyx->boyx", w[:, :, dy, dx], window, optimize=True)
    return out + b[None, :, None, None], xp


def _conv_backward(dout, xp, w, stride, in_shape):
    """Gradients for _conv_forward. Within one kernel tap the strided
    positions are disjoint, so plain += on the sliced view accumulates
    correctly."""
    _, _, h_in, w_in = in_shape
    k = w.shape[2]
    pad = k // 2
    h_out, w_out = dout.shape[2], dout.shape[3]
    dw = np.zeros_like(w)
    dxp = np.zeros_like(xp)
    for dy in range(k):
        for dx in range(k):
            window = xp[:, :, dy:dy + stride * h_out:stride, dx:dx + stride * w_out:stride]
            dw[:, :, dy, dx] = np.einsum("boyx,bcyx->oc", dout, window, optimize=True)
            dxp[:, :, dy:dy + stride * h_out:stride, dx:dx + stride * w_out:stride] += (
                np.einsum("oc,boyx->bcyx", w[:, :, dy, dx], dout, optimize=True)
            )
    db = dout.sum(axis=(0, 2, 3))
    dx = dxp[:, :, pad:pad + h_in, pad:pad + w_in] if pad else dxp
    return dx, dw, db


def _param_order(config: ClassifierConfig) -> list:
    names = []
    for i in range(len(config.conv_blocks)):
        names += [f"conv{i}.w", f"conv{i}.b"]
    if config.env_hidden is not None:
        for j in range(len(config.env_hidden)):
            names += [f"env{j}.w", f"env{j}.b"]
    names += ["head.w", "head.b"]
    return names


def _init_params(config: ClassifierConfig, in_channels: int, env_dim: int,
                 rng: np.random.Generator) -> dict:
    params = {}
    c_in = in_channels
    for i, (c_out, k, _) in enumerate(config.conv_blocks):
        std = np.sqrt(2.0 / (c_in * k * k))
        params[f"conv{i}.w"] = rng.standard_normal((c_out, c_in, k, k)) * std
        params[f"conv{i}.b"] = np.zeros(c_out)
        c_in = c_out
    head_in = c_in
    if config.env_hidden is not None:
        e_in = env_dim
        for j, width in enumerate(config.env_hidden):
            std = np.sqrt(2.0 / max(e_in, 1))
            params[f"env{j}.w"] = rng.standard_normal((width, e_in)) * std
            params[f"env{j}.b"] = np.zeros(width)
            e_in = width
        head_in += e_in
    params["head.w"] = rng.standard_normal((2, head_in)) * np.sqrt(1.0 / head_in)
    params["head.b"] = np.zeros(2)
    return params


def _forward(params, config, x, env=None, keep_cache=False):
    """Returns (probabilities, final conv features, cache for backward)."""
    cache = {"conv": []} if keep_cache else None
    h = x
    for i, (_, _, stride) in enumerate(config.conv_blocks):
        z, xp = _conv_forward(h, params[f"conv{i}.w"], params[f"conv{i}.b"], stride)
        if keep_cache:
            cache["conv"].append((xp, z, h.shape))
        h = np.maximum(z, 0.0)
    feats = h
    gap = feats.mean(axis=(2, 3))
    z = gap
    if config.env_hidden is not None:
        e = env
        env_cache = []
        for j in range(len(config.env_hidden)):
            lin = e @ params[f"env{j}.w"].T + params[f"env{j}.b"]
            env_cache.append((e, lin))
            e = np.maximum(lin, 0.0)
        z = np.concatenate([gap, e], axis=1)
        if keep_cache:
            cache["env"] = env_cache
    logits = z @ params["head.w"].T + params["head.b"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(shifted)
    probs = expl / expl.sum(axis=1, keepdims=True)
    if keep_cache:
        cache["feats"] = feats
        cache["z"] = z
    return probs, feats, cache


def _backward(params, config, probs, labels, cache):
    """Cross-entropy gradients for every parameter."""
    n = probs.shape[0]
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grads = {}
    z = cache["z"]
    grads["head.w"] = dlogits.T @ z
    grads["head.b"] = dlogits.sum(axis=0)
    dz = dlogits @ params["head.w"]
    feats = cache["feats"]
    c_f = feats.shape[1]
    dgap = dz[:, :c_f]
    if config.env_hidden is not None:
        de = dz[:, c_f:]
        for j in reversed(range(len(config.env_hidden))):
            e_in, lin = cache["env"][j]
            de = de * (lin > 0)
            grads[f"env{j}.w"] = de.T @ e_in
            grads[f"env{j}.b"] = de.sum(axis=0)
            de = de @ params[f"env{j}.w"]
    dfeats = np.broadcast_to(
        dgap[:, :, None, None] / (feats.shape[2] * feats.shape[3]), feats.shape
    )
    da = dfeats
    for i in reversed(range(len(config.conv_blocks))):
        xp, z_conv, in_shape = cache["conv"][i]
        dz_conv = da * (z_conv > 0)
        da, dw, db = _conv_backward(
            dz_conv, xp, params[f"conv{i}.w"], config.conv_blocks[i][2], in_shape
        )
        grads[f"conv{i}.w"] = dw
        grads[f"conv{i}.b"] = db
    return grads


def _usable(samples, config: ClassifierConfig) -> list:
    """Env-fused training skips samples without a joined predictor vector."""
    if config.env_hidden is None:
        return list(samples)
    return [s for s in samples if s.env is not None]


def train(samples, config: ClassifierConfig, stats: NormStats | None = None) -> TrainedModel:
    """Fit the classifier; bit-reproducible for a fixed seed and data.

    Wavelet-mode normalization stats are fitted here on the given
    (training) samples unless supplied; raw-mode pixel stats likewise.
    """
    used = _usable(samples, config)
    if not used:
        raise TrainingError("empty training set")
    labels = np.array([s.label for s in used], dtype=np.int64)
    if len(set(labels.tolist())) < 2:
        raise TrainingError("training set contains a single class")
    raw_stats = None
    if config.input_mode == "wavelet":
        if stats is None:
            stats = fit_norm(used)
    else:
        pixels = np.concatenate([
            f.temps.ravel() for s in used for f in s.frames
        ]).astype(np.float64)
        sd = float(pixels.std())
        raw_stats = (float(pixels.mean()), sd if sd > 0 else 1.0)
        stats = None
    x = np.stack([
        assemble_input(s, config.input_mode, stats=stats, raw_stats=raw_stats)
        for s in used
    ])
    env = None
    env_dim = 0
    if config.env_hidden is not None:
        env_dim = len(used[0].env)
        if any(len(s.env) != env_dim for s in used):
            raise ShapeError("env vectors differ in length")
        env = np.array([s.env for s in used], dtype=np.float64).reshape(len(used), env_dim)

    init_ss, order_ss = np.random.SeedSequence(config.seed).spawn(2)
    params = _init_params(config, x.shape[1], env_dim, np.random.default_rng(init_ss))
    order_rng = np.random.default_rng(order_ss)

    n = len(used)
    for epoch in range(config.epochs):
        perm = order_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb = x[idx]
            eb = env[idx] if env is not None else None
            yb = labels[idx]
            probs, _, cache = _forward(params, config, xb, eb, keep_cache=True)
            loss = -np.log(probs[np.arange(len(idx)), yb] + 1e-300).mean()
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {start // config.batch_size}; "
                    f"try a smaller learning rate"
                )
            grads = _backward(params, config, probs, yb, cache)
            for name, g in grads.items():
                params[name] -= config.learning_rate * g
            # Saturated cross-entropy stays finite while weights blow
            # up, so divergence has to be caught on the weights too.
            for name, value in params.items():
                if not np.all(np.isfinite(value)):
                    raise TrainingError(
                        f"parameter {name} diverged at epoch {epoch}, batch "
                        f"{start // config.batch_size}; try a smaller learning rate"
                    )
    return TrainedModel(
        config=config,
        params=params,
        prevalence=float(labels.mean()),
        norm_stats=stats,
        raw_stats=raw_stats,
        input_channels=int(x.shape[1]),
        input_width=int(x.shape[2]),
        env_dim=env_dim,
    )


def _model_input(model: TrainedModel, sample) -> tuple:
    x = assemble_input(
        sample, model.config.input_mode,
        stats=model.norm_stats, raw_stats=model.raw_stats,
    )
    if x.shape != (model.input_channels, model.input_width, model.input_width):
        raise ShapeError(
            f"sample shape {x.shape} does not match model input "
            f"({model.input_channels}, {model.input_width}, {model.input_width})"
        )
    env_row = None
    if model.config.env_hidden is not None:
        if sample.env is None:
            raise DomainError("env-fused model needs a sample with a joined env vector")
        if len(sample.env) != model.env_dim:
            raise ShapeError(f"env length {len(sample.env)} != model env_dim {model.env_dim}")
        env_row = np.asarray(sample.env, dtype=np.float64)
    return x, env_row


def predict_posterior(model: TrainedModel, sample) -> float:
    """P(intensification | sequence): softmax mass on class 1."""
    x, env_row = _model_input(model, sample)
    env = env_row[None, :] if env_row is not None else None
    probs, _, _ = _forward(model.params, model.config, x[None], env)
    return float(probs[0, 1])


def score_samples(model: TrainedModel, samples, batch_size: int = 64) -> np.ndarray:
    """Posterior for each sample, batched for throughput."""
    samples = list(samples)
    out = np.empty(len(samples))
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        pairs = [_model_input(model, s) for s in chunk]
        x = np.stack([p[0] for p in pairs])
        env = None
        if model.config.env_hidden is not None:
            env = np.stack([p[1] for p in pairs])
        probs, _, _ = _forward(model.params, model.config, x, env)
        out[start:start + len(chunk)] = probs[:, 1]
    return out


def score_pt(posterior: float, prevalence: float) -> float:
    """Excess posterior mass over the training base rate."""
    return posterior - prevalence


def is_primed(p_t: float) -> bool:
    """Strictly positive excess only; zero is not primed."""
    return p_t > 0


def final_conv_features(model: TrainedModel, sample) -> np.ndarray:
    """Post-activation features of the last conv block, (channels, h, w)."""
    x, env_row = _model_input(model, sample)
    env = env_row[None, :] if env_row is not None else None
    _, feats, _ = _forward(model.params, model.config, x[None], env)
    return feats[0]


def save_model(model: TrainedModel, path) -> None:
    """Versioned container: magic, JSON header, then f32 parameter blobs
    in the order listed by the header's shape manifest."""
    order = _param_order(model.config)
    header = {
        "config": model.config.to_json_dict(),
        "prevalence": model.prevalence,
        "norm_stats": model.norm_stats.to_json_dict() if model.norm_stats else None,
        "raw_stats": list(model.raw_stats) if model.raw_stats else None,
        "input_channels": model.input_channels,
        "input_width": model.input_width,
        "env_dim": model.env_dim,
        "params": [[name, list(model.params[name].shape)] for name in order],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in order:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        try:
            header = json.loads(fh.read(hlen).decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise FormatError(f"{path}: corrupt model header") from None
        config = ClassifierConfig.from_json_dict(header["config"])
        params = {}
        for name, shape in header["params"]:
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(4 * count)
            if len(raw) != 4 * count:
                raise FormatError(f"{path}: truncated parameter block {name}")
            params[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
        trailing = fh.read(1)
        if trailing:
            raise FormatError(f"{path}: trailing bytes after parameters")
    stats = header.get("norm_stats")
    raw_stats = header.get("raw_stats")
    return TrainedModel(
        config=config,
        params=params,
        prevalence=float(header["prevalence"]),
        norm_stats=NormStats.from_json_dict(stats) if stats else None,
        raw_stats=tuple(raw_stats) if raw_stats else None,
        input_channels=int(header["input_channels"]),
        input_width=int(header["input_width"]),
        env_dim=int(header["env_dim"]),
    )
