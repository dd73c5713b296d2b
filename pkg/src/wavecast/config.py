"""File-backed pipeline configuration with strict key checking.

A single JSON file carries the knobs for every stage, grouped by
section; any key outside the schema is rejected rather than ignored,
since a silently dropped misspelling of ``q`` or ``r_frac`` would
change results without a trace. Each leaf is also overridable on the
command line by its dotted name (for example ``--wavelet.q 0.05``);
list-valued leaves take JSON literals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .model import ClassifierConfig
from .sparse import RadialMaskSpec
from .wavelets import WaveletSpec


@dataclass(frozen=True)
class WaveletParams:
    order: int = 2
    levels: int = 3
    q: float = 0.10
    r_frac: float = 0.25

    def spec(self) -> WaveletSpec:
        return WaveletSpec(family_order=self.order, levels=self.levels)

    def mask(self) -> RadialMaskSpec:
        return RadialMaskSpec(r_frac=self.r_frac)


@dataclass(frozen=True)
class DatasetParams:
    window: int = 24
    stride: int = 6
    fractions: tuple = (0.7, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if len(fr) != 3:
            raise ConfigError(f"fractions must have 3 entries, got {len(fr)}")
        object.__setattr__(self, "fractions", fr)


@dataclass(frozen=True)
class TokenizerParams:
    V: int = 64


@dataclass(frozen=True)
class PipelineConfig:
    wavelet: WaveletParams = field(default_factory=WaveletParams)
    dataset: DatasetParams = field(default_factory=DatasetParams)
    model: ClassifierConfig = field(default_factory=ClassifierConfig)
    tokenizer: TokenizerParams = field(default_factory=TokenizerParams)


_SECTION_TYPES = {
    "wavelet": WaveletParams,
    "dataset": DatasetParams,
    "tokenizer": TokenizerParams,
}

# dotted name -> converter from a command-line string
_LEAF_PARSERS = {
    "wavelet.order": int,
    "wavelet.levels": int,
    "wavelet.q": float,
    "wavelet.r_frac": float,
    "dataset.window": int,
    "dataset.stride": int,
    "dataset.fractions": json.loads,
    "dataset.seed": int,
    "model.input_mode": str,
    "model.conv_blocks": json.loads,
    "model.env_hidden": json.loads,
    "model.seed": int,
    "model.learning_rate": float,
    "model.epochs": int,
    "model.batch_size": int,
    "tokenizer.V": int,
}


def dotted_fields() -> list:
    """Every overridable leaf, for CLI flag registration."""
    return sorted(_LEAF_PARSERS)


def config_from_dict(data: dict) -> PipelineConfig:
    """Strict parse: unknown sections or keys are errors."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known_sections = set(_SECTION_TYPES) | {"model"}
    unknown = set(data) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be an object")
        valid = set(cls.__dataclass_fields__)
        bad = set(section) - valid
        if bad:
            raise ConfigError(f"unknown keys in section {name!r}: {sorted(bad)}")
        coerced = dict(section)
        if name == "dataset" and "fractions" in coerced:
            coerced["fractions"] = tuple(coerced["fractions"])
        try:
            kwargs[name] = cls(**coerced)
        except TypeError as exc:
            raise ConfigError(f"bad section {name!r}: {exc}") from None
    model_section = data.get("model", {})
    if not isinstance(model_section, dict):
        raise ConfigError("section 'model' must be an object")
    kwargs["model"] = ClassifierConfig.from_json_dict(model_section)
    return PipelineConfig(**kwargs)


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data)


def apply_override(cfg: PipelineConfig, dotted: str, raw: str) -> PipelineConfig:
    """Set one leaf by dotted name from its command-line string."""
    if dotted not in _LEAF_PARSERS:
        raise ConfigError(f"unknown config field {dotted!r}")
    section_name, key = dotted.split(".", 1)
    try:
        value = _LEAF_PARSERS[dotted](raw)
    except (ValueError, json.JSONDecodeError):
        raise ConfigError(f"bad value {raw!r} for {dotted}") from None
    section = getattr(cfg, section_name)
    if section_name == "model":
        d = section.to_json_dict()
        d[key] = value
        new_section = ClassifierConfig.from_json_dict(d)
    else:
        if key == "fractions":
            value = tuple(value)
        new_section = replace(section, **{key: value})
    return replace(cfg, **{section_name: new_section})
