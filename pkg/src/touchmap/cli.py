"""Command-line entry point for the touch-sound perception pipeline.

Subcommands mirror the stages: synth, features, detect, reduce, train,
eval, plot.  Common flags: --config (JSON), --seed, --out, --jobs,
--deterministic, --set section.key=value, --print-config.

Exit codes: 0 success, 1 total failure, 2 config/usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .io_formats import FormatError
from .pipeline import (
    PipelineError,
    run_detect,
    run_eval,
    run_features,
    run_plot,
    run_reduce,
    run_synth,
    run_train_eval,
)
from .synth import SynthSpec, load_spec, standard_corpus_spec


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", type=Path, required=True, help="output directory/file")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers per stage")
    common.add_argument(
        "--deterministic", action="store_true",
        help="force single-threaded, bit-reproducible execution",
    )
    common.add_argument(
        "--set", action="append", dest="overrides", metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable)",
    )
    common.add_argument(
        "--print-config", action="store_true", help="dump the effective configuration"
    )

    parser = argparse.ArgumentParser(
        prog="touchmap",
        description="Unsupervised touch-sound perception: detect impact sounds, "
        "embed visual latents to 2-D, and learn the sound-to-place mapping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--preset", choices=["standard"], default="standard")
    p.add_argument("--spec", type=Path, help="SynthSpec JSON (overrides --preset)")

    p = sub.add_parser("features", parents=[common], help="per-clip feature-track CSVs")
    p.add_argument("--audio", type=Path, required=True, help="directory of WAV clips")

    p = sub.add_parser("detect", parents=[common], help="detect impacts, cut segments")
    p.add_argument("--audio", type=Path, required=True, help="directory of WAV clips")

    p = sub.add_parser("reduce", parents=[common], help="embed latent codes to 2-D")
    p.add_argument("--embeddings", type=Path, required=True, help="CSV or binary embeddings")
    p.add_argument("--manifest", type=Path, help="manifest JSONL for class coloring")

    p = sub.add_parser("train", parents=[common], help="train the sound-to-place regressor")
    p.add_argument("--segments", type=Path, required=True, help="directory of segment WAVs")
    p.add_argument("--coords", type=Path, required=True, help="manifold coordinates CSV")
    p.add_argument("--manifest", type=Path, required=True, help="manifest JSONL")
    p.add_argument("--holdout-frac", type=float, default=0.2)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--segments", type=Path, required=True)
    p.add_argument("--coords", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)

    p = sub.add_parser("plot", parents=[common], help="scatter SVG of coordinates")
    p.add_argument("--coords", type=Path, required=True)
    p.add_argument("--manifest", type=Path, help="manifest JSONL for class coloring")
    p.add_argument("--report", type=Path, help="eval report JSON for the error square")

    return parser


def _summarize(summary: dict) -> None:
    for key, value in summary.items():
        if isinstance(value, float):
            print(f"{key}: {value:.6g}")
        elif isinstance(value, (str, int, bool)):
            print(f"{key}: {value}")
        elif isinstance(value, list) and key.endswith(("errors", "failures")):
            print(f"{key}: {len(value)}")
            for item in value[:10]:
                print(f"  - {item}")
        elif isinstance(value, dict):
            for k, v in value.items():
                print(f"{key}.{k}: {v}")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    jobs = 1 if args.deterministic else max(1, args.jobs)
    try:
        cfg = load_config(args.config, args.overrides, args.seed)
        if args.print_config:
            print(cfg.dump())

        if args.command == "synth":
            if args.spec is not None:
                spec = load_spec(args.spec)
            else:
                spec = standard_corpus_spec()
            if args.seed is not None:
                spec = SynthSpec.from_dict({**spec.to_dict(), "seed": args.seed})
            summary = run_synth(spec, args.out)
        elif args.command == "features":
            summary = run_features(args.audio, cfg, args.out, n_jobs=jobs)
        elif args.command == "detect":
            summary = run_detect(args.audio, cfg, args.out, n_jobs=jobs)
            if summary.get("empty_input"):
                print("warning: no WAV files found", file=sys.stderr)
        elif args.command == "reduce":
            summary = run_reduce(
                args.embeddings, cfg, args.out,
                manifest_path=args.manifest, parallel=jobs > 1,
            )
        elif args.command == "train":
            summary = run_train_eval(
                args.segments, args.coords, args.manifest, cfg, args.out,
                holdout_frac=args.holdout_frac,
            )
        elif args.command == "eval":
            summary = run_eval(
                args.checkpoint, args.segments, args.coords, args.manifest, cfg, args.out
            )
        else:  # plot
            summary = run_plot(
                args.coords, args.out, manifest_path=args.manifest, report_path=args.report
            )
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    _summarize(summary)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
