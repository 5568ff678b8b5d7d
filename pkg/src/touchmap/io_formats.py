"""On-disk interchange formats.

- Embeddings: CSV with header ``id,v0..v{D-1}``, or raw little-endian
  float32 row-major binary next to a JSON sidecar ``{n, d, ids, ...}``
  (same filename plus ``.json``).
- Manifold coordinates: CSV with header ``id,x,y``.
- Detected events / corpus manifests: JSON lines.
- Training history: CSV with header ``epoch,train_metric,holdout_metric``.

Readers validate structure and fail loudly; writers produce exactly what
the readers accept, so every format round-trips.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .detect import DetectionEvent
from .manifold import EmbeddingMatrix, ManifoldCoords
from .regressor import EpochRecord


class FormatError(ValueError):
    """A file does not match the interchange format it claims to be."""


# ---------------------------------------------------------------------------
# embeddings

def write_embeddings_csv(path: str | Path, emb: EmbeddingMatrix) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"v{i}" for i in range(emb.dim)])
        for cid, row in zip(emb.ids, emb.vectors):
            writer.writerow([cid] + [repr(float(v)) for v in row])


def read_embeddings_csv(path: str | Path) -> EmbeddingMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise FormatError(f"{path}: expected header starting with 'id'")
        dim = len(header) - 1
        if header[1:] != [f"v{i}" for i in range(dim)]:
            raise FormatError(f"{path}: expected columns id,v0..v{dim - 1}")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise FormatError(f"{path}:{lineno}: {len(row)} fields, expected {dim + 1}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not ids:
        raise FormatError(f"{path}: no data rows")
    return EmbeddingMatrix(vectors=np.array(rows, dtype=np.float64), ids=ids)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_embeddings_binary(path: str | Path, emb: EmbeddingMatrix, **extra) -> None:
    """Row-major little-endian float32 blob plus a JSON sidecar.

    Extra keyword fields (e.g. model provenance) are stored in the sidecar.
    """
    path = Path(path)
    data = np.ascontiguousarray(emb.vectors, dtype="<f4")
    path.write_bytes(data.tobytes())
    sidecar = {"n": emb.n, "d": emb.dim, "ids": list(emb.ids), **extra}
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=1))


def read_embeddings_binary(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    sidecar_file = _sidecar_path(path)
    if not sidecar_file.exists():
        raise FormatError(f"{path}: missing sidecar {sidecar_file.name}")
    try:
        sidecar = json.loads(sidecar_file.read_text())
        n, d, ids = int(sidecar["n"]), int(sidecar["d"]), list(sidecar["ids"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{sidecar_file}: bad sidecar ({exc})") from None
    if len(ids) != n:
        raise FormatError(f"{sidecar_file}: {len(ids)} ids but n={n}")
    blob = path.read_bytes()
    if len(blob) != n * d * 4:
        raise FormatError(f"{path}: {len(blob)} bytes, expected {n * d * 4} for {n}x{d}")
    vectors = np.frombuffer(blob, dtype="<f4").reshape(n, d).astype(np.float64)
    return EmbeddingMatrix(vectors=vectors, ids=[str(i) for i in ids])


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Dispatch on extension: .csv is text, anything else is binary+sidecar."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_embeddings_csv(path)
    return read_embeddings_binary(path)


# ---------------------------------------------------------------------------
# manifold coordinates

def write_coords_csv(path: str | Path, coords: ManifoldCoords) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for cid, (x, y) in zip(coords.ids, coords.coords):
            writer.writerow([cid, repr(float(x)), repr(float(y))])


def read_coords_csv(path: str | Path) -> ManifoldCoords:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "x", "y"]:
            raise FormatError(f"{path}: expected header id,x,y, got {header}")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: {len(row)} fields, expected 3")
            ids.append(row[0])
            try:
                rows.append((float(row[1]), float(row[2])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not ids:
        raise FormatError(f"{path}: no data rows")
    return ManifoldCoords(coords=np.array(rows, dtype=np.float64), ids=ids)


# ---------------------------------------------------------------------------
# JSON lines (events, manifests)

def write_jsonl(path: str | Path, records: list[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if not isinstance(rec, dict):
                raise FormatError(f"{path}:{lineno}: expected a JSON object")
            records.append(rec)
    return records


def event_record(clip_id: str, event: DetectionEvent, sample_rate: int) -> dict:
    start, end = event.segment
    return {
        "clip_id": clip_id,
        "peak_time_s": event.peak_time,
        "prominence": event.energy_prominence,
        "flatness": event.flatness_at_peak,
        "onset_ratio": event.onset_ratio,
        "segment_start_s": start / sample_rate,
        "segment_end_s": end / sample_rate,
    }


_EVENT_KEYS = {
    "clip_id", "peak_time_s", "prominence", "flatness",
    "onset_ratio", "segment_start_s", "segment_end_s",
}


def read_events(path: str | Path) -> list[dict]:
    records = read_jsonl(path)
    for i, rec in enumerate(records):
        missing = _EVENT_KEYS - set(rec)
        if missing:
            raise FormatError(f"{path}: record {i} missing keys {sorted(missing)}")
    return records


def read_manifest(path: str | Path) -> list[dict]:
    records = read_jsonl(path)
    seen = set()
    for i, rec in enumerate(records):
        missing = {"clip_id", "audio_path", "embedding_row"} - set(rec)
        if missing:
            raise FormatError(f"{path}: record {i} missing keys {sorted(missing)}")
        if rec["clip_id"] in seen:
            raise FormatError(f"{path}: duplicate clip_id {rec['clip_id']!r}")
        seen.add(rec["clip_id"])
    return records


# ---------------------------------------------------------------------------
# training history

def write_history_csv(path: str | Path, history: list[EpochRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_metric", "holdout_metric"])
        for rec in history:
            hold = "" if rec.holdout_metric is None else repr(float(rec.holdout_metric))
            writer.writerow([rec.epoch, repr(float(rec.train_metric)), hold])


def read_history_csv(path: str | Path) -> list[EpochRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["epoch", "train_metric", "holdout_metric"]:
            raise FormatError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            if not row:
                continue
            hold = float(row[2]) if row[2] else None
            out.append(EpochRecord(int(row[0]), float(row[1]), hold))
    return out
