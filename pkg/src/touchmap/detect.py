"""High-precision, low-recall detection of touch/impact sounds.

Impact sounds show up as (i) relative peaks in the energy envelope
regardless of background level, (ii) wide spectral spread (high flatness),
and (iii) peaks in onset strength.  The detector picks prominent peaks on a
smoothed energy contour and passes them through a cascade of relative
gates; every threshold is a ratio against a median, so detection is
invariant to the overall signal level.  Parameters default to values tuned
for precision at the expense of recall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import AudioClip, FeatureTracks, Spectrogram

# reported scores divide by medians; floor keeps a silent track finite
_MEDIAN_EPS = 1e-12


@dataclass(frozen=True)
class DetectorConfig:
    """Detection thresholds; ratios are relative to track medians."""

    smooth_len: int = 5
    energy_prominence_ratio: float = 4.0
    flatness_min: float = 0.3
    onset_ratio_min: float = 3.0
    refractory_ms: float = 100.0
    segment_len_ms: float = 200.0
    pre_roll_ms: float = 50.0

    def __post_init__(self):
        if self.smooth_len < 1 or self.smooth_len % 2 == 0:
            raise ValueError(f"smooth_len must be odd and >= 1, got {self.smooth_len}")
        if self.energy_prominence_ratio < 1.0:
            raise ValueError("energy_prominence_ratio must be >= 1")
        if not 0.0 <= self.flatness_min <= 1.0:
            raise ValueError("flatness_min must be in [0, 1]")
        if self.onset_ratio_min < 1.0:
            raise ValueError("onset_ratio_min must be >= 1")
        if self.refractory_ms <= 0:
            raise ValueError("refractory_ms must be positive")
        if self.pre_roll_ms < 0:
            raise ValueError("pre_roll_ms must be non-negative")
        if self.segment_len_ms < self.pre_roll_ms:
            raise ValueError("segment_len_ms must be >= pre_roll_ms")

    def segment_samples(self, sample_rate: int) -> int:
        return int(round(self.segment_len_ms * sample_rate / 1000.0))

    def pre_roll_samples(self, sample_rate: int) -> int:
        return int(round(self.pre_roll_ms * sample_rate / 1000.0))


@dataclass(frozen=True)
class DetectionEvent:
    """One accepted impact event with its gate scores and segment bounds."""

    peak_frame: int
    peak_time: float
    energy_prominence: float
    flatness_at_peak: float
    onset_ratio: float
    segment: tuple[int, int]


def smooth(track: np.ndarray, length: int) -> np.ndarray:
    """Centered moving average; edges average over the available window."""
    if length < 1 or length % 2 == 0:
        raise ValueError(f"smoothing length must be odd and >= 1, got {length}")
    track = np.asarray(track, dtype=np.float64)
    if length == 1:
        return track.copy()
    radius = length // 2
    n = len(track)
    idx = np.arange(n)
    hi = np.minimum(idx + radius + 1, n)
    lo = np.maximum(idx - radius, 0)
    sums = np.concatenate([[0.0], np.cumsum(track)])
    return (sums[hi] - sums[lo]) / (hi - lo)


def find_peaks(track: np.ndarray) -> list[tuple[int, float]]:
    """Interior local maxima with their prominences.

    A peak is strictly greater than its neighbors; a flat run higher than
    both flanks counts once, reported at its leftmost sample.  Prominence is
    the peak height above the higher of the two flanking valley minima,
    where each flank extends to the nearest strictly higher sample or the
    track edge.
    """
    track = np.asarray(track, dtype=np.float64)
    n = len(track)
    if n < 3:
        return []

    peaks = []
    i = 1
    while i < n - 1:
        if track[i] > track[i - 1]:
            j = i
            while j + 1 < n and track[j + 1] == track[i]:
                j += 1
            if j + 1 < n and track[j + 1] < track[i]:
                peaks.append(i)
            i = j + 1
        else:
            i += 1

    result = []
    for p in peaks:
        height = track[p]
        left_min = height
        i = p - 1
        while i >= 0 and track[i] <= height:
            left_min = min(left_min, track[i])
            i -= 1
        right_min = height
        i = p + 1
        while i < n and track[i] <= height:
            right_min = min(right_min, track[i])
            i += 1
        result.append((p, height - max(left_min, right_min)))
    return result


def _local_spread(track: np.ndarray, center: int, half_width: int) -> float:
    """Median absolute deviation from the local median, over a centered
    window.  This is the scale that peak prominence is judged against: a
    fluctuation measure, so a loud but steady background does not mask
    impacts, and scaling the waveform scales it proportionally."""
    lo = max(0, center - half_width)
    hi = min(len(track), center + half_width + 1)
    seg = track[lo:hi]
    return float(np.median(np.abs(seg - np.median(seg))))


def detect_events(
    spec: Spectrogram, feats: FeatureTracks, cfg: DetectorConfig | None = None
) -> list[DetectionEvent]:
    """Run the gate cascade over one clip's feature tracks.

    Candidates are prominent peaks of the smoothed energy envelope, localized
    to the raw-energy maximum within the smoothing radius.  Candidates within
    the refractory window are thinned to the most prominent one first (ties
    keep the earlier), then the surviving candidates must pass all three
    gates:

      (a) prominence >= energy_prominence_ratio x the local spread (median
          absolute deviation over a 1 s window) of the smoothed energy
      (b) spectral flatness at the peak >= flatness_min
      (c) peak onset strength within the smoothing radius >=
          onset_ratio_min x track median onset (the analysis window smears
          an attack over a few hops, so the onset spike lands a frame or
          two before the energy peak)

    Thinning before gating makes the detected set shrink monotonically as
    any threshold is raised.  Events are returned sorted by time.
    All three stored gate scores are the relative quantities actually
    compared against the thresholds.
    """
    if cfg is None:
        cfg = DetectorConfig()
    if feats.n_frames != spec.n_frames:
        raise ValueError(
            f"feature tracks ({feats.n_frames} frames) do not match "
            f"spectrogram ({spec.n_frames} frames)"
        )

    energy = np.asarray(feats.energy, dtype=np.float64)
    smoothed = smooth(energy, cfg.smooth_len)
    candidates = find_peaks(smoothed)
    if not candidates:
        return []

    radius = cfg.smooth_len // 2
    n = len(energy)
    refined: dict[int, float] = {}
    for idx, prom in candidates:
        lo = max(0, idx - radius)
        hi = min(n, idx + radius + 1)
        peak = lo + int(np.argmax(energy[lo:hi]))
        if peak not in refined or prom > refined[peak]:
            refined[peak] = prom

    frames_per_second = spec.sample_rate / spec.hop
    refractory_frames = cfg.refractory_ms / 1000.0 * frames_per_second
    ranked = sorted(refined.items(), key=lambda item: (-item[1], item[0]))
    kept: list[tuple[int, float]] = []
    for idx, prom in ranked:
        if all(abs(idx - other) >= refractory_frames for other, _ in kept):
            kept.append((idx, prom))

    median_half_width = int(round(0.5 * frames_per_second))
    onset_median = float(np.median(feats.onset))
    times = spec.frame_times
    pre_roll = cfg.pre_roll_samples(spec.sample_rate)
    seg_len = cfg.segment_samples(spec.sample_rate)

    events = []
    for idx, prom in sorted(kept):
        spread = max(_local_spread(smoothed, idx, median_half_width), _MEDIAN_EPS)
        prominence_score = prom / spread
        if prominence_score < cfg.energy_prominence_ratio:
            continue
        if feats.flatness[idx] < cfg.flatness_min:
            continue
        onset_lo = max(0, idx - radius)
        onset_hi = min(n, idx + radius + 1)
        onset_score = float(np.max(feats.onset[onset_lo:onset_hi])) / max(
            onset_median, _MEDIAN_EPS
        )
        if onset_score < cfg.onset_ratio_min:
            continue
        peak_sample = int(round(times[idx] * spec.sample_rate))
        start = peak_sample - pre_roll
        events.append(
            DetectionEvent(
                peak_frame=idx,
                peak_time=float(times[idx]),
                energy_prominence=prominence_score,
                flatness_at_peak=float(feats.flatness[idx]),
                onset_ratio=onset_score,
                segment=(start, start + seg_len),
            )
        )
    return events


def extract_segment(
    clip: AudioClip, event: DetectionEvent, cfg: DetectorConfig | None = None
) -> AudioClip:
    """Cut the event's segment out of the clip, zero-padding at boundaries.

    The result always has exactly segment_len_ms worth of samples, starting
    pre_roll_ms before the detected peak.
    """
    if cfg is None:
        cfg = DetectorConfig()
    start, end = event.segment
    seg_len = end - start
    out = np.zeros(seg_len)
    src_lo = max(0, start)
    src_hi = min(clip.n_samples, end)
    if src_hi > src_lo:
        out[src_lo - start : src_hi - start] = clip.samples[src_lo:src_hi]
    return AudioClip(samples=out, sample_rate=clip.sample_rate)
