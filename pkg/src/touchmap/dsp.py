"""Short-time spectral analysis and hand-crafted audio features.

Everything here is a pure, deterministic function: same input, bit-identical
output.  The analysis geometry defaults to the pipeline standard of 16 kHz
audio, 30 ms Hann windows, 10 ms hop and a 512-point FFT, which turns a
200 ms clip into a 257x20 magnitude spectrogram.

Features computed per spectrogram frame:

- energy_contour():     sum of spectral magnitudes
- spectral_flatness():  geometric/arithmetic mean ratio (1 = noise-like)
- onset_strength():     half-wave rectified frame-to-frame spectral increase
- spectral_centroid():  magnitude-weighted mean frequency in Hz
- zero_crossing_rate(): mean-crossing rate in the waveform domain
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_WINDOW = 480  # 30 ms at 16 kHz
DEFAULT_HOP = 160  # 10 ms at 16 kHz
DEFAULT_FFT_SIZE = 512

FLATNESS_FLOOR = 1e-10
LOG_FLOOR = 1e-5


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM audio: amplitude samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude spectrogram |X[k, n]| with its frame geometry.

    mag has shape (n_bins, n_frames) with n_bins == fft_size // 2 + 1.
    Frame n covers samples [n * hop, n * hop + window).
    """

    mag: np.ndarray
    hop: int = DEFAULT_HOP
    window: int = DEFAULT_WINDOW
    fft_size: int = DEFAULT_FFT_SIZE
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        mag = np.asarray(self.mag, dtype=np.float64)
        if mag.ndim != 2:
            raise ValueError(f"mag must be 2-D, got shape {mag.shape}")
        if mag.shape[0] != self.fft_size // 2 + 1:
            raise ValueError(
                f"expected {self.fft_size // 2 + 1} bins for fft_size "
                f"{self.fft_size}, got {mag.shape[0]}"
            )
        if mag.shape[1] < 1:
            raise ValueError("spectrogram needs at least one frame")
        if np.any(mag < 0):
            raise ValueError("magnitudes must be non-negative")
        object.__setattr__(self, "mag", mag)

    @property
    def n_bins(self) -> int:
        return self.mag.shape[0]

    @property
    def n_frames(self) -> int:
        return self.mag.shape[1]

    @property
    def bin_frequencies(self) -> np.ndarray:
        """Center frequency of each bin in Hz."""
        return np.fft.rfftfreq(self.fft_size, 1.0 / self.sample_rate)

    @property
    def frame_times(self) -> np.ndarray:
        """Window-center time of each frame in seconds."""
        starts = np.arange(self.n_frames) * self.hop
        return (starts + self.window / 2.0) / self.sample_rate


@dataclass(frozen=True)
class FeatureTracks:
    """The five per-frame feature tracks, aligned to one spectrogram."""

    energy: np.ndarray
    flatness: np.ndarray
    onset: np.ndarray
    centroid: np.ndarray
    zcr: np.ndarray

    def __post_init__(self):
        lengths = {
            len(self.energy),
            len(self.flatness),
            len(self.onset),
            len(self.centroid),
            len(self.zcr),
        }
        if len(lengths) != 1:
            raise ValueError(f"feature tracks disagree on length: {sorted(lengths)}")

    @property
    def n_frames(self) -> int:
        return len(self.energy)


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window of length n."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def half_wave_rectify(x: np.ndarray) -> np.ndarray:
    """H(x) = (|x| + x) / 2: pass positive values, zero out the rest."""
    x = np.asarray(x, dtype=np.float64)
    return (np.abs(x) + x) / 2.0


def stft(
    clip: AudioClip,
    window: int = DEFAULT_WINDOW,
    hop: int = DEFAULT_HOP,
    fft_size: int = DEFAULT_FFT_SIZE,
    pad_end: bool = True,
) -> Spectrogram:
    """Magnitude spectrogram of Hann-windowed, zero-padded frames.

    Frame n covers samples [n * hop, n * hop + window).  With pad_end, every
    frame starting inside the signal is kept and short tail frames are
    zero-padded to the full window; otherwise frames that would overrun the
    signal are dropped.

    Raises ValueError if window > fft_size, hop < 1, or the clip is shorter
    than one window.
    """
    if window > fft_size:
        raise ValueError(f"window ({window}) must not exceed fft_size ({fft_size})")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    x = clip.samples
    if len(x) < window:
        raise ValueError(
            f"clip has {len(x)} samples, shorter than one window ({window})"
        )

    if pad_end:
        n_frames = int(np.ceil(len(x) / hop))
        padded_len = (n_frames - 1) * hop + window
        x = np.concatenate([x, np.zeros(padded_len - len(x))])
    else:
        n_frames = (len(x) - window) // hop + 1

    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * hann_window(window)
    mag = np.abs(np.fft.rfft(frames, n=fft_size, axis=1)).T
    return Spectrogram(
        mag=mag,
        hop=hop,
        window=window,
        fft_size=fft_size,
        sample_rate=clip.sample_rate,
    )


def energy_contour(spec: Spectrogram) -> np.ndarray:
    """E[n]: per-frame sum of spectral magnitudes (linear, not power)."""
    return np.sum(spec.mag, axis=0)


def spectral_flatness(spec: Spectrogram, floor: float = FLATNESS_FLOOR) -> np.ndarray:
    """SF[n]: geometric over arithmetic mean of the magnitudes of each frame.

    The floor is added to all magnitudes before both means, so the result
    stays in (0, 1] by the AM-GM inequality and log(0) never occurs.  An
    all-zero frame comes out as 1 (maximally flat), which the energy gate of
    any downstream detector renders harmless.
    """
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    m = spec.mag + floor
    geometric = np.exp(np.mean(np.log(m), axis=0))
    arithmetic = np.mean(m, axis=0)
    # AM-GM bounds the ratio by 1 exactly; exp/log round-off can overshoot
    # by a few ulp, so clamp to keep the documented range.
    return np.minimum(geometric / arithmetic, 1.0)


def onset_strength(spec: Spectrogram) -> np.ndarray:
    """O[n]: half-wave rectified frame-to-frame magnitude increase, summed
    over bins.  O[0] is 0 by convention (no predecessor frame)."""
    if spec.n_frames < 2:
        raise ValueError("onset strength needs at least 2 frames")
    diff = np.diff(spec.mag, axis=1)
    onset = np.sum(half_wave_rectify(diff), axis=0)
    return np.concatenate([[0.0], onset])


def spectral_centroid(spec: Spectrogram) -> np.ndarray:
    """Magnitude-weighted mean frequency of each frame in Hz.

    An all-zero frame has no center of mass and returns 0.
    """
    freqs = spec.bin_frequencies
    total = np.sum(spec.mag, axis=0)
    weighted = freqs @ spec.mag
    return np.divide(weighted, total, out=np.zeros_like(total), where=total > 0)


def zero_crossing_rate(
    clip: AudioClip, frame: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP
) -> np.ndarray:
    """Per-frame rate of crossings of the frame mean, in [0, 1].

    A crossing is an adjacent sample pair on strictly opposite sides of the
    frame's own mean; the count is divided by (frame - 1) possible pairs.
    Framing matches stft() with pad_end, so the track aligns with the
    spectrogram frames.
    """
    x = clip.samples
    if frame > len(x):
        raise ValueError(f"frame ({frame}) longer than clip ({len(x)})")
    n_frames = int(np.ceil(len(x) / hop))
    padded_len = (n_frames - 1) * hop + frame
    x = np.concatenate([x, np.zeros(padded_len - len(x))])
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx]
    centered = frames - np.mean(frames, axis=1, keepdims=True)
    crossings = np.sum(centered[:, :-1] * centered[:, 1:] < 0, axis=1)
    return crossings / (frame - 1)


def log_magnitude(spec: Spectrogram, floor: float = LOG_FLOOR) -> np.ndarray:
    """Elementwise ln(mag + floor); the regressor's input representation."""
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    return np.log(spec.mag + floor)


def compute_features(
    clip: AudioClip,
    window: int = DEFAULT_WINDOW,
    hop: int = DEFAULT_HOP,
    fft_size: int = DEFAULT_FFT_SIZE,
) -> tuple[Spectrogram, FeatureTracks]:
    """Spectrogram plus all five feature tracks for one clip."""
    spec = stft(clip, window=window, hop=hop, fft_size=fft_size)
    feats = FeatureTracks(
        energy=energy_contour(spec),
        flatness=spectral_flatness(spec),
        onset=onset_strength(spec),
        centroid=spectral_centroid(spec),
        zcr=zero_crossing_rate(clip, frame=window, hop=hop),
    )
    return spec, feats
