"""touchmap: unsupervised perception of touch and impact sounds.

Pipeline: detect impact events in audio with a high-precision gate
cascade, embed per-clip visual latent codes into a 2-D manifold, and train
a small CNN to map each 200 ms impact spectrogram to its clip's manifold
position — so sounds land near visually similar contexts without labels.
"""

from .audio_io import WavFormatError, read_wav, write_wav
from .config import ConfigError, DspConfig, PathsConfig, PipelineConfig, load_config
from .detect import DetectionEvent, DetectorConfig, detect_events, extract_segment
from .dsp import (
    AudioClip,
    FeatureTracks,
    Spectrogram,
    compute_features,
    energy_contour,
    half_wave_rectify,
    hann_window,
    log_magnitude,
    onset_strength,
    spectral_centroid,
    spectral_flatness,
    stft,
    zero_crossing_rate,
)
from .manifold import (
    EmbeddingMatrix,
    ManifoldConfig,
    ManifoldCoords,
    embed,
    fit_ab,
    fuzzy_graph,
    knn_graph,
    neighborhood_preservation,
    optimize_layout,
    smooth_knn,
)
from .regressor import (
    EvalReport,
    RegressorConfig,
    RegressorModel,
    TrainingPair,
    backward,
    evaluate,
    forward,
    gradient_check,
    init_model,
    load_model,
    loss,
    metric,
    predict,
    save_model,
    train,
)
from .synth import (
    EventClass,
    GroundTruth,
    SynthSpec,
    blob_embeddings,
    make_manifest,
    standard_corpus_spec,
    synth_audio,
    synth_clip,
    synth_embeddings,
    write_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "Spectrogram", "FeatureTracks",
    "hann_window", "half_wave_rectify", "stft", "energy_contour",
    "spectral_flatness", "onset_strength", "spectral_centroid",
    "zero_crossing_rate", "log_magnitude", "compute_features",
    "read_wav", "write_wav", "WavFormatError",
    "DetectorConfig", "DetectionEvent", "detect_events", "extract_segment",
    "EmbeddingMatrix", "ManifoldConfig", "ManifoldCoords",
    "knn_graph", "smooth_knn", "fuzzy_graph", "fit_ab",
    "optimize_layout", "embed", "neighborhood_preservation",
    "RegressorConfig", "RegressorModel", "TrainingPair", "EvalReport",
    "init_model", "forward", "predict", "loss", "metric", "backward",
    "gradient_check", "train", "evaluate", "save_model", "load_model",
    "SynthSpec", "EventClass", "GroundTruth",
    "synth_clip", "synth_audio", "synth_embeddings", "blob_embeddings",
    "make_manifest", "standard_corpus_spec", "write_corpus",
    "PipelineConfig", "DspConfig", "PathsConfig", "ConfigError", "load_config",
    "__version__",
]
