"""Wavelet-domain nowcasting of tropical cyclone rapid intensification.

The package turns infrared imagery into sparse wavelet coefficient sets,
assembles labeled 24-hour sequences, trains a small convolutional
classifier whose score is calibrated against the base rate, and explains
its decisions through class activation maps and a discrete coefficient
token stream.
"""

from .errors import (
    ConfigError,
    DomainError,
    FetchError,
    FormatError,
    ParseError,
    ShapeError,
    TrainingError,
    WavecastError,
)
from .tracks import (
    BestTrackRecord,
    RiLabel,
    StormTrack,
    compute_ri_labels,
    fetch_hurdat2,
    format_hurdat2,
    intensity_at,
    parse_hurdat2,
)
from .envdata import EnvRecord, parse_env_table
from .irframe import IrFrame, load_irf, save_irf
from .wavelets import (
    ORIENT_APPROX,
    ORIENT_DIAGONAL,
    ORIENT_HORIZONTAL,
    ORIENT_VERTICAL,
    WaveletDecomposition,
    WaveletSpec,
    daubechies_filters,
    dwt2,
    idwt2,
    subband_layout,
    subband_placement,
)
from .sparse import (
    RadialMaskSpec,
    SparseCoeffSet,
    apply_radial_mask,
    compression_ratio,
    densify,
    read_wsc,
    reconstruct,
    sparsify,
    sparsify_frame,
    threshold_top_fraction,
    write_wsc,
)
from .dataset import (
    NormStats,
    SequenceSample,
    SplitPlan,
    apply_norm,
    build_sequences,
    fit_norm,
    join_env,
    read_manifest,
    split_by_storm,
    unapply_norm,
    write_manifest,
)
from .synthetic import SynthConfig, SynthCorpus, gen_synthetic_corpus, load_corpus, write_corpus
from .model import (
    ClassifierConfig,
    TrainedModel,
    assemble_input,
    is_primed,
    load_model,
    predict_posterior,
    save_model,
    score_pt,
    score_samples,
    train,
)
from .evaluation import (
    EvalReport,
    auc_trapezoid,
    evaluate,
    primed_confusion,
    roc_points,
    write_roc_csv,
    write_summary_json,
)
from .cam import CamGrid, cam_to_subbands, compute_cam, write_cam_csv, write_pgm
from .tokenizer import (
    CoeffVocabulary,
    TokenSequence,
    decode,
    encode,
    fit_vocab,
    position_coords,
    position_id,
    read_tokens,
    read_vocab,
    write_tokens,
    write_vocab,
)
from .config import PipelineConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "BestTrackRecord",
    "CamGrid",
    "ClassifierConfig",
    "CoeffVocabulary",
    "ConfigError",
    "DomainError",
    "EnvRecord",
    "EvalReport",
    "FetchError",
    "FormatError",
    "IrFrame",
    "NormStats",
    "ORIENT_APPROX",
    "ORIENT_DIAGONAL",
    "ORIENT_HORIZONTAL",
    "ORIENT_VERTICAL",
    "ParseError",
    "PipelineConfig",
    "RadialMaskSpec",
    "RiLabel",
    "SequenceSample",
    "ShapeError",
    "SparseCoeffSet",
    "SplitPlan",
    "StormTrack",
    "SynthConfig",
    "SynthCorpus",
    "TokenSequence",
    "TrainedModel",
    "TrainingError",
    "WaveletDecomposition",
    "WaveletSpec",
    "WavecastError",
    "apply_norm",
    "apply_radial_mask",
    "assemble_input",
    "auc_trapezoid",
    "build_sequences",
    "cam_to_subbands",
    "compression_ratio",
    "compute_cam",
    "compute_ri_labels",
    "daubechies_filters",
    "decode",
    "densify",
    "dwt2",
    "encode",
    "evaluate",
    "fetch_hurdat2",
    "fit_norm",
    "fit_vocab",
    "format_hurdat2",
    "gen_synthetic_corpus",
    "idwt2",
    "intensity_at",
    "is_primed",
    "join_env",
    "load_config",
    "load_corpus",
    "load_irf",
    "load_model",
    "parse_env_table",
    "parse_hurdat2",
    "position_coords",
    "position_id",
    "predict_posterior",
    "primed_confusion",
    "read_manifest",
    "read_tokens",
    "read_vocab",
    "read_wsc",
    "reconstruct",
    "roc_points",
    "save_irf",
    "save_model",
    "score_pt",
    "score_samples",
    "sparsify",
    "sparsify_frame",
    "split_by_storm",
    "subband_layout",
    "subband_placement",
    "threshold_top_fraction",
    "train",
    "unapply_norm",
    "write_cam_csv",
    "write_corpus",
    "write_manifest",
    "write_pgm",
    "write_roc_csv",
    "write_summary_json",
    "write_tokens",
    "write_vocab",
    "write_wsc",
]
