"""
The whole pipeline through the command-line interface
=====================================================

Everything the previous demos did by calling library functions is also wired
into a single `touchmap` command with one subcommand per stage, so the full
study -- synthesize, detect, reduce, train, evaluate, plot -- runs from a
shell.  This script drives that interface end to end on a small corpus and
shows the artifact each stage leaves behind.  Every stage takes `--seed`,
`--set section.key=value` overrides, and `--deterministic`; outputs are plain
files (WAV, CSV, JSONL, JSON, SVG) so each stage can be rerun or swapped out
independently.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from touchmap.synth import SynthSpec, standard_corpus_spec

root = Path(tempfile.mkdtemp(prefix="pipeline_demo_"))

def run(*args: str) -> str:
    """Run one CLI stage, echoing the command line and its output."""
    cmd = [sys.executable, "-m", "touchmap.cli", *args]
    print("\n$ touchmap", " ".join(args))
    result = subprocess.run(cmd, capture_output=True, text=True, check=True)
    for line in result.stdout.strip().splitlines():
        print("  |", line)
    return result.stdout

# Stage 0: a corpus recipe.  The standard evaluation shape (clicks at 10 dB
# SNR over pink noise, tone distractors, clustered 64-D embeddings), shrunk
# to 14 clips so the demo finishes in under a minute.
recipe = standard_corpus_spec(seed=99).to_dict()
recipe["n_clips"] = 14
spec_path = root / "spec.json"
spec_path.write_text(json.dumps(recipe))

run("synth", "--spec", str(spec_path), "--out", str(root / "corpus"))

# Stage 1: detection.  Finds impacts in every WAV, writes one JSONL record
# per event plus a 200 ms segment WAV per detection.
run("detect", "--audio", str(root / "corpus" / "audio"),
    "--out", str(root / "det"), "--deterministic")
n_segments = len(list((root / "det" / "segments").glob("*.wav")))
print(f"  -> {n_segments} segments cut")

# Stage 2: manifold reduction.  The 64-D embeddings become a 2-D map; the
# neighbor count is lowered to suit a 14-point corpus.
run("reduce", "--embeddings", str(root / "corpus" / "embeddings.csv"),
    "--manifest", str(root / "corpus" / "manifest.jsonl"),
    "--out", str(root / "red"), "--set", "manifold.n_neighbors=5")

# Stage 3: regression.  Segments are joined to their clip's map position via
# the manifest; a fifth of the clips are held out to monitor generalization.
# With only eleven training clips the held-out numbers stay rough -- at
# corpus scale (100 clips) the same configuration places ~96% of held-out
# sounds in the right cluster -- but the train-side error shows the fit.
run("train", "--segments", str(root / "det" / "segments"),
    "--coords", str(root / "red" / "coords.csv"),
    "--manifest", str(root / "corpus" / "manifest.jsonl"),
    "--out", str(root / "tr"),
    "--set", "regressor.epochs=80", "--set", "regressor.batch=4",
    "--set", "regressor.lr=0.0003")

# Stage 4: evaluation of the saved checkpoint on every segment.
run("eval", "--checkpoint", str(root / "tr" / "model.ckpt"),
    "--segments", str(root / "det" / "segments"),
    "--coords", str(root / "red" / "coords.csv"),
    "--manifest", str(root / "corpus" / "manifest.jsonl"),
    "--out", str(root / "ev"))

# Stage 5: the picture.  Map points colored by class, with a dashed square
# marking the evaluation's mean predicted position and mean error radius.
run("plot", "--coords", str(root / "red" / "coords.csv"),
    "--manifest", str(root / "corpus" / "manifest.jsonl"),
    "--report", str(root / "ev" / "report.json"),
    "--out", str(root / "final.svg"))

report = json.loads((root / "ev" / "report.json").read_text())
print(f"\neval report: mean error {report['mean_error']:.3f} map units"
      f" over {len(report['per_item'])} segments")
print(f"all artifacts under {root}:")
for path in sorted(root.rglob("*")):
    if path.is_file() and "audio" not in path.parts and "segments" not in path.parts:
        print(f"  {path.relative_to(root)}")
