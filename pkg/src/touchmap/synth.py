"""Deterministic synthetic audiovisual-proxy corpora with exact ground truth.

Each corpus is a set of audio clips (noise bed + band-limited impact clicks
+ optional distractor tones) plus one pseudo-image embedding row per clip.
A clip's impact class decides which embedding cluster its row is drawn
from, standing in for the premise that visual context clusters align with
touch-sound types.

All randomness is derived from (seed, clip index, stream), so any clip or
click can be regenerated in isolation and whole corpora are byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio_io import write_wav
from .dsp import AudioClip
from .manifold import EmbeddingMatrix

_TIME_MARGIN_S = 0.3
_MIN_EVENT_GAP_S = 0.3
_MAX_SCHEDULE_TRIES = 1000

# rng stream tags (last spawn_key element)
_STREAM_SCHEDULE = 0
_STREAM_CLICK = 1
_STREAM_EMBED = 2


@dataclass(frozen=True)
class EventClass:
    """One impact type: a Hann-windowed band-passed noise burst."""

    name: str
    click_len_ms: float
    band: tuple[float, float]
    amplitude: float  # RMS of the burst, linear full scale

    def __post_init__(self):
        lo, hi = self.band
        if not 0 <= lo < hi:
            raise ValueError(f"bad band {self.band}")
        if not 0 < self.amplitude <= 1:
            raise ValueError(f"amplitude must be in (0, 1], got {self.amplitude}")
        object.__setattr__(self, "band", (float(lo), float(hi)))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "pink"  # "white" | "pink" | "none"
    level_db: float = -26.0  # RMS dBFS

    def __post_init__(self):
        if self.kind not in ("white", "pink", "none"):
            raise ValueError(f"unknown noise kind {self.kind!r}")


@dataclass(frozen=True)
class ToneSpec:
    """Distractor: a sine switched on abruptly at a random time."""

    freq_hz: float
    level_db: float  # RMS dBFS
    duration_ms: float = 800.0


@dataclass(frozen=True)
class EmbeddingSpec:
    dim: int = 64
    cluster_sep: float = 10.0
    cluster_sigma: float = 0.5

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("embedding dim must be >= 2")
        if self.cluster_sep <= 0 or self.cluster_sigma < 0:
            raise ValueError("cluster_sep must be > 0 and cluster_sigma >= 0")


@dataclass(frozen=True)
class SynthSpec:
    n_clips: int
    clip_len_s: float
    event_classes: tuple[EventClass, ...]
    events_per_clip: int
    noise: NoiseSpec = NoiseSpec()
    distractors: tuple[ToneSpec, ...] = ()
    embedding: EmbeddingSpec = EmbeddingSpec()
    seed: int = 0
    sample_rate: int = 16000

    def __post_init__(self):
        if self.n_clips < 1:
            raise ValueError("n_clips must be >= 1")
        if not self.event_classes:
            raise ValueError("need at least one event class")
        if self.embedding.dim < len(self.event_classes):
            raise ValueError("embedding dim must cover one axis per class")
        object.__setattr__(self, "event_classes", tuple(self.event_classes))
        object.__setattr__(self, "distractors", tuple(self.distractors))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        d["event_classes"] = tuple(
            EventClass(
                name=c["name"],
                click_len_ms=c["click_len_ms"],
                band=tuple(c["band"]),
                amplitude=c["amplitude"],
            )
            for c in d["event_classes"]
        )
        d["noise"] = NoiseSpec(**d["noise"])
        d["distractors"] = tuple(ToneSpec(**t) for t in d.get("distractors", ()))
        d["embedding"] = EmbeddingSpec(**d["embedding"])
        return cls(**d)


@dataclass(frozen=True)
class ClipTruth:
    clip_id: str
    class_name: str
    cluster_label: int
    event_times: tuple[float, ...]
    tone_times: tuple[float, ...] = ()


@dataclass(frozen=True)
class GroundTruth:
    clips: tuple[ClipTruth, ...]
    class_names: tuple[str, ...]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        clips = tuple(
            ClipTruth(
                clip_id=c["clip_id"],
                class_name=c["class_name"],
                cluster_label=c["cluster_label"],
                event_times=tuple(c["event_times"]),
                tone_times=tuple(c.get("tone_times", ())),
            )
            for c in d["clips"]
        )
        return cls(clips=clips, class_names=tuple(d["class_names"]))


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def clip_id_for(index: int) -> str:
    return f"clip_{index:04d}"


def make_click(
    rng: np.random.Generator,
    n_samples: int,
    band: tuple[float, float],
    sample_rate: int,
    rms_amplitude: float,
) -> np.ndarray:
    """Hann-windowed band-passed noise burst normalized to a target RMS."""
    noise = rng.standard_normal(n_samples)
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate)
    spectrum = np.fft.rfft(noise)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    burst = np.fft.irfft(spectrum, n_samples)
    burst *= np.hanning(n_samples)
    rms = np.sqrt(np.mean(burst**2))
    if rms == 0:
        raise ValueError(f"band {band} leaves no energy below Nyquist")
    return burst * (rms_amplitude / rms)


def _noise_bed(rng: np.random.Generator, n: int, spec: NoiseSpec, sample_rate: int) -> np.ndarray:
    if spec.kind == "none":
        return np.zeros(n)
    white = rng.standard_normal(n)
    if spec.kind == "pink":
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        shaping = np.zeros_like(freqs)
        shaping[1:] = 1.0 / np.sqrt(freqs[1:])
        white = np.fft.irfft(np.fft.rfft(white) * shaping, n)
    rms = np.sqrt(np.mean(white**2))
    target = 10.0 ** (spec.level_db / 20.0)
    return white * (target / rms)


def _schedule_events(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    lo = _TIME_MARGIN_S
    hi = spec.clip_len_s - _TIME_MARGIN_S
    if hi <= lo:
        raise ValueError(f"clip_len_s {spec.clip_len_s} too short for any event")
    for _ in range(_MAX_SCHEDULE_TRIES):
        times = np.sort(rng.uniform(lo, hi, size=spec.events_per_clip))
        if spec.events_per_clip < 2 or np.min(np.diff(times)) > _MIN_EVENT_GAP_S:
            return times
    raise ValueError(
        f"could not place {spec.events_per_clip} events with "
        f"> {_MIN_EVENT_GAP_S * 1000:.0f} ms separation in {spec.clip_len_s:.2f} s"
    )


def synth_clip(spec: SynthSpec, index: int) -> tuple[AudioClip, ClipTruth]:
    """Generate one clip and its exact truth from (seed, index) alone."""
    sr = spec.sample_rate
    n = int(round(spec.clip_len_s * sr))
    cid = clip_id_for(index)
    label = index % len(spec.event_classes)
    cls = spec.event_classes[label]

    sched = _rng(spec.seed, index, _STREAM_SCHEDULE)
    times = _schedule_events(sched, spec)

    out = _noise_bed(sched, n, spec.noise, sr)
    click_len = int(round(cls.click_len_ms * sr / 1000.0))
    for e, t in enumerate(times):
        start = int(round(t * sr))
        burst = make_click(
            _rng(spec.seed, index, _STREAM_CLICK, e), click_len, cls.band, sr, cls.amplitude
        )
        out[start : start + click_len] += burst[: n - start]

    tone_times = []
    for tone in spec.distractors:
        dur = int(round(tone.duration_ms * sr / 1000.0))
        latest = max(n - dur - int(_TIME_MARGIN_S * sr), int(_TIME_MARGIN_S * sr) + 1)
        onset = int(sched.integers(int(_TIME_MARGIN_S * sr), latest))
        amp = 10.0 ** (tone.level_db / 20.0) * np.sqrt(2.0)
        k = np.arange(dur)
        out[onset : onset + dur] += amp * np.sin(2 * np.pi * tone.freq_hz * k / sr)
        tone_times.append(onset / sr)

    np.clip(out, -1.0, 1.0, out=out)
    truth = ClipTruth(
        clip_id=cid,
        class_name=cls.name,
        cluster_label=label,
        event_times=tuple(float(t) for t in times),
        tone_times=tuple(tone_times),
    )
    return AudioClip(samples=out, sample_rate=sr), truth


def synth_audio(spec: SynthSpec) -> tuple[list[AudioClip], GroundTruth]:
    """Generate every clip of the corpus with its ground truth."""
    clips, truths = [], []
    for i in range(spec.n_clips):
        clip, truth = synth_clip(spec, i)
        clips.append(clip)
        truths.append(truth)
    names = tuple(c.name for c in spec.event_classes)
    return clips, GroundTruth(clips=tuple(truths), class_names=names)


def cluster_centers(spec: SynthSpec) -> np.ndarray:
    """One center per event class, pairwise exactly cluster_sep apart."""
    emb = spec.embedding
    n_classes = len(spec.event_classes)
    centers = np.zeros((n_classes, emb.dim))
    for i in range(n_classes):
        centers[i, i] = emb.cluster_sep / np.sqrt(2.0)
    return centers


def synth_embeddings(spec: SynthSpec, truth: GroundTruth) -> EmbeddingMatrix:
    """One Gaussian sample per clip, centered on its class's cluster center."""
    centers = cluster_centers(spec)
    sigma = spec.embedding.cluster_sigma
    rows = np.empty((len(truth.clips), spec.embedding.dim))
    ids = []
    for i, clip in enumerate(truth.clips):
        rng = _rng(spec.seed, i, _STREAM_EMBED)
        rows[i] = centers[clip.cluster_label] + sigma * rng.standard_normal(spec.embedding.dim)
        ids.append(clip.clip_id)
    return EmbeddingMatrix(vectors=rows, ids=ids)


def make_manifest(
    truth: GroundTruth, audio_paths: dict[str, str], blind: bool = False
) -> list[dict]:
    """One join record per clip: audio file, embedding row, and (unless
    blind) the ground-truth class, which evaluation alone may read."""
    missing = [c.clip_id for c in truth.clips if c.clip_id not in audio_paths]
    if missing:
        raise ValueError(f"no audio path for clips: {missing[:5]}")
    records = []
    for clip in truth.clips:
        rec = {
            "clip_id": clip.clip_id,
            "audio_path": audio_paths[clip.clip_id],
            "embedding_row": clip.clip_id,
        }
        if not blind:
            rec["class"] = clip.class_name
        records.append(rec)
    return records


def standard_corpus_spec(seed: int = 2024) -> SynthSpec:
    """The desk-scale reference corpus: 100 x 5 s clips, three impact
    classes at 10 dB SNR over pink noise, two tone distractors per clip."""
    noise_rms_db = -26.0
    snr_db = 10.0
    amplitude = 10.0 ** ((noise_rms_db + snr_db) / 20.0)
    return SynthSpec(
        n_clips=100,
        clip_len_s=5.0,
        event_classes=(
            EventClass("wood_tap", click_len_ms=6.0, band=(400.0, 4500.0), amplitude=amplitude),
            EventClass("metal_ping", click_len_ms=10.0, band=(1800.0, 7600.0), amplitude=amplitude),
            EventClass("glass_clink", click_len_ms=4.0, band=(900.0, 6200.0), amplitude=amplitude),
        ),
        events_per_clip=3,
        noise=NoiseSpec(kind="pink", level_db=noise_rms_db),
        distractors=(
            ToneSpec(freq_hz=440.0, level_db=-20.0, duration_ms=900.0),
            ToneSpec(freq_hz=1250.0, level_db=-22.0, duration_ms=700.0),
        ),
        embedding=EmbeddingSpec(dim=64, cluster_sep=10.0, cluster_sigma=0.5),
        seed=seed,
    )


def blob_embeddings(
    n_points: int = 1200,
    dim: int = 64,
    cluster_sep: float = 10.0,
    cluster_sigma: float = 0.5,
    n_classes: int = 3,
    seed: int = 7,
) -> tuple[EmbeddingMatrix, np.ndarray]:
    """Gaussian-blob pseudo-embeddings without any audio.

    Round-robin class labels; same per-point seeding scheme as full
    corpora.  Returns (embeddings, integer labels).
    """
    if n_points < n_classes or dim < n_classes:
        raise ValueError("need n_points >= n_classes and dim >= n_classes")
    centers = np.zeros((n_classes, dim))
    for i in range(n_classes):
        centers[i, i] = cluster_sep / np.sqrt(2.0)
    labels = np.arange(n_points) % n_classes
    rows = np.empty((n_points, dim))
    for i in range(n_points):
        rng = _rng(seed, i, _STREAM_EMBED)
        rows[i] = centers[labels[i]] + cluster_sigma * rng.standard_normal(dim)
    return EmbeddingMatrix(vectors=rows, ids=[clip_id_for(i) for i in range(n_points)]), labels


def write_corpus(spec: SynthSpec, out_dir: str | Path) -> dict[str, Path]:
    """Render a corpus to disk: WAVs, embedding CSV, manifest, truth, spec.

    Returns the paths of everything written.  spec.json alone is enough to
    regenerate the corpus bit-for-bit.
    """
    from . import io_formats

    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)

    truths = []
    audio_paths = {}
    for i in range(spec.n_clips):
        clip, truth = synth_clip(spec, i)
        path = audio_dir / f"{truth.clip_id}.wav"
        write_wav(path, clip)
        audio_paths[truth.clip_id] = str(path.relative_to(out_dir))
        truths.append(truth)
    truth = GroundTruth(
        clips=tuple(truths), class_names=tuple(c.name for c in spec.event_classes)
    )

    embeddings = synth_embeddings(spec, truth)
    paths = {
        "audio_dir": audio_dir,
        "embeddings": out_dir / "embeddings.csv",
        "manifest": out_dir / "manifest.jsonl",
        "truth": out_dir / "truth.json",
        "spec": out_dir / "spec.json",
    }
    io_formats.write_embeddings_csv(paths["embeddings"], embeddings)
    io_formats.write_jsonl(paths["manifest"], make_manifest(truth, audio_paths))
    paths["truth"].write_text(json.dumps(truth.to_dict(), indent=1))
    paths["spec"].write_text(json.dumps(spec.to_dict(), indent=1))
    return paths


def load_truth(path: str | Path) -> GroundTruth:
    return GroundTruth.from_dict(json.loads(Path(path).read_text()))


def load_spec(path: str | Path) -> SynthSpec:
    return SynthSpec.from_dict(json.loads(Path(path).read_text()))
