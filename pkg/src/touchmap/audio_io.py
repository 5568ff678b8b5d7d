"""WAV file input/output.

Accepted input: PCM 16-bit signed little-endian, mono.  Sample rates that
are integer multiples of the 16 kHz pipeline rate are decimated by block
averaging; anything else is rejected.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .dsp import DEFAULT_SAMPLE_RATE, AudioClip

_INT16_SCALE = 32768.0


class WavFormatError(ValueError):
    """Raised for WAV files outside the supported format."""


def read_wav(path: str | Path, target_rate: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """Load a mono 16-bit PCM WAV as an AudioClip at target_rate.

    Files at an integer multiple of target_rate are decimated by averaging
    each block of rate/target_rate consecutive samples.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"{path}: not a readable WAV file ({exc})") from exc

    if n_channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {n_channels} channels")
    if sampwidth != 2:
        raise WavFormatError(
            f"{path}: expected 16-bit PCM, got {8 * sampwidth}-bit samples"
        )
    if rate % target_rate != 0:
        raise WavFormatError(
            f"{path}: sample rate {rate} is not an integer multiple of {target_rate}"
        )

    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _INT16_SCALE
    factor = rate // target_rate
    if factor > 1:
        usable = (len(samples) // factor) * factor
        samples = samples[:usable].reshape(-1, factor).mean(axis=1)
    return AudioClip(samples=samples, sample_rate=target_rate)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    """Write an AudioClip as mono 16-bit PCM, clipping to [-1, 1]."""
    scaled = np.clip(clip.samples, -1.0, 1.0) * (_INT16_SCALE - 1)
    data = np.round(scaled).astype("<i2").tobytes()
    with wave.open(str(Path(path)), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(data)
