"""Shared fixtures: a small synthetic corpus and segment/coordinate pairs.

Session-scoped so the expensive synthesis and detection run once; every
consumer treats the artifacts as read-only.
"""

from pathlib import Path

import numpy as np
import pytest

from touchmap import pipeline
from touchmap.config import load_config
from touchmap.synth import SynthSpec, standard_corpus_spec

# One measured pass/fail line per acceptance criterion, echoed after the
# test summary so the numbers are visible in plain `pytest -v` output.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report() -> list[str]:
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_spec() -> SynthSpec:
    """A 14-clip corpus with the standard class/noise/tone structure."""
    base = standard_corpus_spec(seed=99).to_dict()
    base["n_clips"] = 14
    return SynthSpec.from_dict(base)


@pytest.fixture(scope="session")
def small_corpus(small_spec, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus")
    pipeline.run_synth(small_spec, out)
    return out


@pytest.fixture(scope="session")
def small_detection(small_corpus, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("detect")
    pipeline.run_detect(small_corpus / "audio", load_config(), out)
    return out


@pytest.fixture(scope="session")
def segment_pairs(small_corpus, small_detection):
    """(features, target, clip_id) training pairs joined through the manifest.

    Targets are synthetic manifold positions: deterministic per clip, spread
    over a [0, 10] square so span-relative error bounds are meaningful.
    """
    from touchmap.detect import DetectorConfig
    from touchmap.dsp import log_magnitude, stft
    from touchmap.io_formats import read_manifest
    from touchmap.regressor import TrainingPair
    from touchmap.audio_io import read_wav

    rng = np.random.default_rng(17)
    manifest = read_manifest(small_corpus / "manifest.jsonl")
    target_of = {rec["clip_id"]: rng.uniform(0, 10, 2) for rec in manifest}

    pairs = []
    for path in sorted((small_detection / "segments").glob("*.wav")):
        clip_id = path.stem.rsplit("__", 1)[0]
        clip = read_wav(path)
        pairs.append(
            TrainingPair(
                features=log_magnitude(stft(clip)),
                target=target_of[clip_id],
                clip_id=clip_id,
            )
        )
    assert len(pairs) >= 32, "fixture corpus must yield at least 32 segments"
    return pairs
