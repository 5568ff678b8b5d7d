"""Stage orchestration: each function consumes the files of the previous
stage and writes declared artifacts, so stages can be rerun independently.

Order: synth -> features/detect -> reduce -> train -> eval -> plot.
Functions return summary dictionaries; printing is the CLI's concern.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import dsp, io_formats, manifold, regressor, synth
from .audio_io import read_wav, write_wav
from .config import PipelineConfig
from .detect import detect_events, extract_segment
from .dsp import AudioClip


class PipelineError(RuntimeError):
    """A stage failed on its inputs (distinct from config/usage errors)."""


_MIN_TRAIN_PAIRS = 10


def _wav_files(audio_dir: str | Path) -> list[Path]:
    audio_dir = Path(audio_dir)
    if not audio_dir.is_dir():
        raise PipelineError(f"not a directory: {audio_dir}")
    return sorted(audio_dir.glob("*.wav"))


def _process_files(files: list[Path], worker, n_jobs: int) -> list:
    """Run worker(path) per file, optionally across threads.

    Results come back in input order, with exceptions captured in place,
    so downstream output is identical regardless of n_jobs.
    """
    if n_jobs <= 1 or len(files) <= 1:
        out = []
        for path in files:
            try:
                out.append(worker(path))
            except (ValueError, OSError) as exc:
                out.append(exc)
        return out
    from concurrent.futures import ThreadPoolExecutor

    def safe(path):
        try:
            return worker(path)
        except (ValueError, OSError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(safe, files))


def run_synth(spec: synth.SynthSpec, out_dir: str | Path) -> dict:
    paths = synth.write_corpus(spec, out_dir)
    return {
        "clips": spec.n_clips,
        "classes": [c.name for c in spec.event_classes],
        "out_dir": str(out_dir),
        "files": {k: str(v) for k, v in paths.items()},
    }


def run_features(
    audio_dir: str | Path, cfg: PipelineConfig, out_dir: str | Path, n_jobs: int = 1
) -> dict:
    """Write one per-frame feature-track CSV per clip."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = _wav_files(audio_dir)

    def worker(path: Path):
        clip = read_wav(path, target_rate=cfg.dsp.sample_rate)
        return dsp.compute_features(
            clip, window=cfg.dsp.window, hop=cfg.dsp.hop, fft_size=cfg.dsp.fft_size
        )

    failures = []
    written = []
    for path, result in zip(files, _process_files(files, worker, n_jobs)):
        if isinstance(result, Exception):
            failures.append({"file": str(path), "error": str(result)})
            continue
        spec, feats = result
        dest = out_dir / f"{path.stem}.features.csv"
        with open(dest, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "time_s", "energy", "flatness", "onset", "centroid", "zcr"])
            times = spec.frame_times
            for i in range(spec.n_frames):
                writer.writerow(
                    [i, repr(float(times[i]))]
                    + [
                        repr(float(track[i]))
                        for track in (
                            feats.energy, feats.flatness, feats.onset,
                            feats.centroid, feats.zcr,
                        )
                    ]
                )
        written.append(str(dest))
    if files and len(failures) == len(files):
        raise PipelineError(f"all {len(files)} clips failed; first: {failures[0]['error']}")
    return {"clips": len(written), "failures": failures, "out_dir": str(out_dir)}


def run_detect(
    audio_dir: str | Path, cfg: PipelineConfig, out_dir: str | Path, n_jobs: int = 1
) -> dict:
    """Detect impact events per clip; write events JSONL and segment WAVs."""
    out_dir = Path(out_dir)
    seg_dir = out_dir / cfg.paths.segments_dir
    seg_dir.mkdir(parents=True, exist_ok=True)
    files = _wav_files(audio_dir)

    def worker(path: Path):
        clip = read_wav(path, target_rate=cfg.dsp.sample_rate)
        spec, feats = dsp.compute_features(
            clip, window=cfg.dsp.window, hop=cfg.dsp.hop, fft_size=cfg.dsp.fft_size
        )
        return clip, detect_events(spec, feats, cfg.detector)

    records = []
    failures = []
    n_events = 0
    clips_done = 0
    for path, result in zip(files, _process_files(files, worker, n_jobs)):
        if isinstance(result, Exception):
            failures.append({"file": str(path), "error": str(result)})
            continue
        clip, events = result
        clip_id = path.stem
        for k, event in enumerate(events):
            records.append(io_formats.event_record(clip_id, event, clip.sample_rate))
            segment = extract_segment(clip, event, cfg.detector)
            write_wav(seg_dir / f"{clip_id}__e{k:02d}.wav", segment)
        n_events += len(events)
        clips_done += 1
    io_formats.write_jsonl(out_dir / cfg.paths.events, records)
    if files and not clips_done:
        raise PipelineError(f"all {len(files)} clips failed; first: {failures[0]['error']}")
    return {
        "clips": clips_done,
        "failures": failures,
        "events": n_events,
        "events_per_clip": n_events / clips_done if clips_done else 0.0,
        "events_file": str(out_dir / cfg.paths.events),
        "segments_dir": str(seg_dir),
        "empty_input": not files,
    }


def _labels_for(ids: list[str], manifest_path: str | Path | None) -> list[str] | None:
    """Class label per embedding id via the manifest's embedding_row join."""
    if manifest_path is None:
        return None
    by_row = {
        rec["embedding_row"]: rec.get("class")
        for rec in io_formats.read_manifest(manifest_path)
    }
    if any(by_row.get(i) is None for i in ids):
        return None  # blind manifest or unlabeled rows: plot uncolored
    return [by_row[i] for i in ids]


def run_reduce(
    embeddings_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
    manifest_path: str | Path | None = None,
    parallel: bool = False,
) -> dict:
    """Embed latent codes to 2-D; write the coordinate CSV and a scatter SVG."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emb = io_formats.read_embeddings(embeddings_path)
    if emb.n < cfg.manifold.n_neighbors + 1:
        from .config import ConfigError

        raise ConfigError(
            f"N={emb.n} rows but n_neighbors={cfg.manifold.n_neighbors} needs "
            f"at least {cfg.manifold.n_neighbors + 1}"
        )
    coords = manifold.embed(emb, cfg.manifold, parallel=parallel)
    io_formats.write_coords_csv(out_dir / cfg.paths.coords, coords)

    from .plotsvg import scatter_svg

    labels = _labels_for(coords.ids, manifest_path)
    svg = scatter_svg(coords.coords, labels=labels, title="manifold layout")
    (out_dir / cfg.paths.scatter).write_text(svg)
    return {
        "points": emb.n,
        "dim": emb.dim,
        "coords_file": str(out_dir / cfg.paths.coords),
        "scatter_file": str(out_dir / cfg.paths.scatter),
    }


def _segment_pairs(
    segments_dir: str | Path,
    coords: manifold.ManifoldCoords,
    manifest: list[dict],
    cfg: PipelineConfig,
) -> tuple[list[regressor.TrainingPair], list[str]]:
    """Join segment WAVs to target coordinates through the manifest.

    Returns (pairs, join_errors).  Missing coordinate rows are named; a
    segment whose clip is absent from the manifest is a join error too.
    """
    coord_of = {cid: xy for cid, xy in zip(coords.ids, coords.coords)}
    row_of = {rec["clip_id"]: rec["embedding_row"] for rec in manifest}
    pairs = []
    errors = []
    for path in _wav_files(segments_dir):
        name = path.stem
        if "__" not in name:
            errors.append(f"{path.name}: no '<clip_id>__' prefix")
            continue
        clip_id = name.rsplit("__", 1)[0]
        if clip_id not in row_of:
            errors.append(f"{path.name}: clip {clip_id!r} not in manifest")
            continue
        row = row_of[clip_id]
        if row not in coord_of:
            errors.append(f"{path.name}: no coordinate row {row!r}")
            continue
        clip = read_wav(path, target_rate=cfg.dsp.sample_rate)
        spec = dsp.stft(clip, window=cfg.dsp.window, hop=cfg.dsp.hop, fft_size=cfg.dsp.fft_size)
        pairs.append(
            regressor.TrainingPair(
                features=dsp.log_magnitude(spec), target=coord_of[row], clip_id=clip_id
            )
        )
    return pairs, errors


def _class_centers(
    coords: manifold.ManifoldCoords, manifest: list[dict]
) -> dict[str, np.ndarray] | None:
    """Mean 2-D coordinate per class, or None for blind manifests."""
    label_of = {rec["embedding_row"]: rec.get("class") for rec in manifest}
    if any(label_of.get(cid) is None for cid in coords.ids):
        return None
    groups: dict[str, list[np.ndarray]] = {}
    for cid, xy in zip(coords.ids, coords.coords):
        groups.setdefault(label_of[cid], []).append(xy)
    return {cls: np.mean(rows, axis=0) for cls, rows in groups.items()}


def _nearest_cluster_accuracy(
    predictions: np.ndarray,
    clip_ids: list[str],
    manifest: list[dict],
    centers: dict[str, np.ndarray],
) -> float:
    class_of = {rec["clip_id"]: rec.get("class") for rec in manifest}
    names = sorted(centers)
    matrix = np.stack([centers[n] for n in names])
    hits = 0
    for pred, cid in zip(predictions, clip_ids):
        nearest = names[int(np.argmin(np.linalg.norm(matrix - pred, axis=1)))]
        hits += nearest == class_of[cid]
    return hits / len(clip_ids)


def _coordinate_span(coords: manifold.ManifoldCoords) -> float:
    extents = coords.coords.max(axis=0) - coords.coords.min(axis=0)
    return float(extents.max())


def run_train_eval(
    segments_dir: str | Path,
    coords_path: str | Path,
    manifest_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
    holdout_frac: float = 0.2,
) -> dict:
    """Hold out a fraction of the sounds by clip id (their coordinates were
    still part of the manifold fit), train the regressor on the rest, and
    report held-out error plus nearest-cluster accuracy."""
    if not 0 <= holdout_frac < 1:
        raise ValueError(f"holdout_frac must be in [0, 1), got {holdout_frac}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    coords = io_formats.read_coords_csv(coords_path)
    manifest = io_formats.read_manifest(manifest_path)
    pairs, join_errors = _segment_pairs(segments_dir, coords, manifest, cfg)

    clip_ids = sorted({p.clip_id for p in pairs})
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(clip_ids))
    n_hold = int(round(holdout_frac * len(clip_ids)))
    held = {clip_ids[i] for i in order[:n_hold]}
    train_pairs = [p for p in pairs if p.clip_id not in held]
    hold_pairs = [p for p in pairs if p.clip_id in held]
    if len(train_pairs) < _MIN_TRAIN_PAIRS:
        raise PipelineError(
            f"only {len(train_pairs)} training pairs after join/split "
            f"(need >= {_MIN_TRAIN_PAIRS}); join errors: {join_errors[:5]}"
        )

    model, history = regressor.train(train_pairs, cfg.regressor, holdout=hold_pairs or None)
    regressor.save_model(model, out_dir / cfg.paths.checkpoint)
    io_formats.write_history_csv(out_dir / cfg.paths.history, history)

    span = _coordinate_span(coords)
    report = {
        "train_clips": len(clip_ids) - len(held),
        "holdout_clips": len(held),
        "train_pairs": len(train_pairs),
        "holdout_pairs": len(hold_pairs),
        "epochs_run": len(history),
        "final_train_error": history[-1].train_metric,
        "coordinate_span": span,
        "join_errors": join_errors,
        "checkpoint": str(out_dir / cfg.paths.checkpoint),
    }
    centers = _class_centers(coords, manifest)
    if hold_pairs:
        ev = regressor.evaluate(model, hold_pairs)
        report["mean_holdout_error"] = ev.mean_error
        report["holdout_error_fraction_of_span"] = ev.mean_error / span
        report["mean_predicted"] = ev.predictions.mean(axis=0).tolist()
        if centers is not None:
            report["nearest_cluster_accuracy"] = _nearest_cluster_accuracy(
                ev.predictions, [p.clip_id for p in hold_pairs], manifest, centers
            )
    else:
        report["note"] = "holdout_frac 0: train-only metrics"
        ev = regressor.evaluate(model, train_pairs)
        report["mean_train_error"] = ev.mean_error
    (out_dir / cfg.paths.report).write_text(json.dumps(report, indent=2))
    report["report_file"] = str(out_dir / cfg.paths.report)
    return report


def run_eval(
    checkpoint_path: str | Path,
    segments_dir: str | Path,
    coords_path: str | Path,
    manifest_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
) -> dict:
    """Evaluate an existing checkpoint on every joinable segment."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = regressor.load_model(checkpoint_path)
    coords = io_formats.read_coords_csv(coords_path)
    manifest = io_formats.read_manifest(manifest_path)
    pairs, join_errors = _segment_pairs(segments_dir, coords, manifest, cfg)
    if not pairs:
        raise PipelineError(f"no evaluable pairs; join errors: {join_errors[:5]}")
    ev = regressor.evaluate(model, pairs)
    span = _coordinate_span(coords)
    report = {
        "pairs": len(pairs),
        "mean_error": ev.mean_error,
        "error_fraction_of_span": ev.mean_error / span,
        "coordinate_span": span,
        "mean_predicted": ev.predictions.mean(axis=0).tolist(),
        "per_item": [
            {"clip_id": cid, "error": err} for cid, err in zip(ev.ids, ev.per_item)
        ],
        "join_errors": join_errors,
    }
    centers = _class_centers(coords, manifest)
    if centers is not None:
        report["nearest_cluster_accuracy"] = _nearest_cluster_accuracy(
            ev.predictions, [p.clip_id for p in pairs], manifest, centers
        )
    (out_dir / cfg.paths.report).write_text(json.dumps(report, indent=2))
    report["report_file"] = str(out_dir / cfg.paths.report)
    return report


def run_plot(
    coords_path: str | Path,
    out_svg: str | Path,
    manifest_path: str | Path | None = None,
    report_path: str | Path | None = None,
) -> dict:
    """Scatter of the manifold, optionally with the evaluation error square
    (side 2 x mean error, centered on the mean predicted point)."""
    from .plotsvg import scatter_svg

    coords = io_formats.read_coords_csv(coords_path)
    labels = _labels_for(coords.ids, manifest_path)
    square = None
    if report_path is not None:
        report = json.loads(Path(report_path).read_text())
        mean_err = report.get("mean_error", report.get("mean_holdout_error"))
        center = report.get("mean_predicted")
        if mean_err is None or center is None:
            raise PipelineError(f"{report_path}: report lacks mean error/predicted point")
        square = ((center[0], center[1]), float(mean_err))
    svg = scatter_svg(coords.coords, labels=labels, title="manifold layout", error_square=square)
    Path(out_svg).write_text(svg)
    return {"points": len(coords.ids), "svg": str(out_svg)}
