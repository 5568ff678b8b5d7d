"""From-scratch CNN regressor: 200 ms log-magnitude spectrogram -> 2-D
manifold coordinate.

Five 3x3 same-padded convolutions (8,16,32,64,64 channels) with ReLU, a
2x2 truncating max-pool after each of the first four, then global average
pooling and a dense head to (x, y).  Forward, reverse-mode gradients,
minibatch SGD with momentum, finite-difference gradient verification, and
a binary checkpoint format are all implemented directly on numpy arrays.

Training minimizes squared Euclidean distance (smooth gradients); every
reported metric is the unsquared distance.  Targets are standardized to
zero mean and unit per-axis scale internally; features are normalized by
dataset statistics.  Both sets of statistics live inside the model so
predictions are always in manifold units.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_CHECKPOINT_MAGIC = b"TMRG"
_FORMAT_VERSION = 1
_PLATEAU_REL_IMPROVEMENT = 1e-4
_PLATEAU_EPOCHS = 10
_STAT_EPS = 1e-8


@dataclass(frozen=True)
class RegressorConfig:
    conv_channels: tuple[int, ...] = (8, 16, 32, 64, 64)
    kernel: int = 3
    pool: int = 2
    input_shape: tuple[int, int] = (257, 20)
    lr: float = 1e-3
    batch: int = 16
    epochs: int = 200
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        if len(self.conv_channels) != 5 or any(c < 1 for c in self.conv_channels):
            raise ValueError("conv_channels must be five positive widths")
        if self.kernel != 3 or self.pool != 2:
            raise ValueError("only 3x3 kernels with 2x2 pooling are supported")
        if len(self.input_shape) != 2 or any(s < 16 for s in self.input_shape):
            raise ValueError(f"input_shape too small for four 2x2 pools: {self.input_shape}")
        if self.lr < 0 or not 0 <= self.momentum < 1:
            raise ValueError("need lr >= 0 and momentum in [0, 1)")
        if self.batch < 1 or self.epochs < 1:
            raise ValueError("batch and epochs must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def pooled_shape_chain(self) -> list[tuple[int, int]]:
        """Spatial shape after each of the four pools (truncating halves)."""
        chain = []
        h, w = self.input_shape
        for _ in range(4):
            h, w = h // 2, w // 2
            if h < 1 or w < 1:
                raise ValueError("input collapses before the fourth pool")
            chain.append((h, w))
        return chain


# parameter names in canonical (checkpoint) order
def _param_names(cfg: RegressorConfig) -> list[str]:
    names = []
    for i in range(len(cfg.conv_channels)):
        names += [f"conv{i + 1}_w", f"conv{i + 1}_b"]
    names += ["dense_w", "dense_b"]
    return names


@dataclass
class RegressorModel:
    config: RegressorConfig
    params: dict[str, np.ndarray]
    feat_mean: float = 0.0
    feat_std: float = 1.0
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    target_scale: np.ndarray = field(default_factory=lambda: np.ones(2))

    def __post_init__(self):
        self.target_mean = np.asarray(self.target_mean, dtype=np.float64).reshape(2)
        self.target_scale = np.asarray(self.target_scale, dtype=np.float64).reshape(2)
        expected = _expected_shapes(self.config)
        if set(self.params) != set(expected):
            raise ValueError(f"parameter names {sorted(self.params)} != {sorted(expected)}")
        for name, arr in self.params.items():
            if arr.shape != expected[name]:
                raise ValueError(f"{name}: shape {arr.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if self.feat_std <= 0 or np.any(self.target_scale <= 0):
            raise ValueError("normalization scales must be positive")

    @property
    def dtype(self) -> np.dtype:
        return self.params["dense_w"].dtype

    def astype(self, dtype) -> "RegressorModel":
        return RegressorModel(
            config=self.config,
            params={k: v.astype(dtype) for k, v in self.params.items()},
            feat_mean=self.feat_mean,
            feat_std=self.feat_std,
            target_mean=self.target_mean.copy(),
            target_scale=self.target_scale.copy(),
        )


@dataclass(frozen=True)
class TrainingPair:
    features: np.ndarray  # (n_bins, n_frames) log-magnitude spectrogram
    target: np.ndarray  # (2,) manifold coordinate
    clip_id: str

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        t = np.asarray(self.target, dtype=np.float64).reshape(-1)
        if f.ndim == 3 and f.shape[2] == 1:
            f = f[:, :, 0]
        if f.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {f.shape}")
        if t.shape != (2,) or not np.all(np.isfinite(t)):
            raise ValueError("target must be a finite pair")
        if not np.all(np.isfinite(f)):
            raise ValueError("features contain non-finite values")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "target", t)


def _expected_shapes(cfg: RegressorConfig) -> dict[str, tuple]:
    shapes = {}
    c_in = 1
    for i, c_out in enumerate(cfg.conv_channels):
        shapes[f"conv{i + 1}_w"] = (c_out, c_in, 3, 3)
        shapes[f"conv{i + 1}_b"] = (c_out,)
        c_in = c_out
    shapes["dense_w"] = (2, cfg.conv_channels[-1])
    shapes["dense_b"] = (2,)
    return shapes


def init_model(cfg: RegressorConfig) -> RegressorModel:
    """Seeded He-style initialization: W ~ N(0, sqrt(2/fan_in)), zero bias."""
    rng = np.random.default_rng(cfg.seed)
    params = {}
    for name, shape in _expected_shapes(cfg).items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            std = np.sqrt(2.0 / fan_in)
            params[name] = (rng.standard_normal(shape) * std).astype(np.float32)
    return RegressorModel(config=cfg, params=params)


# ---------------------------------------------------------------------------
# layer primitives (batch-first, dtype follows the input arrays)

def _conv3x3_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Same-padded 3x3 convolution via im2col; returns (out, cols)."""
    n, _, h, wd = x.shape
    c_out = w.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (N, C, H, W, 3, 3)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, h * wd, -1)
    out = cols @ w.reshape(c_out, -1).T + b
    return out.transpose(0, 2, 1).reshape(n, c_out, h, wd), cols


def _conv3x3_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, x_shape):
    n, c_in, h, wd = x_shape
    c_out = w.shape[0]
    dmat = dout.reshape(n, c_out, h * wd).transpose(0, 2, 1)  # (N, HW, C_out)
    dw = np.tensordot(dmat, cols, axes=([0, 1], [0, 1])).reshape(w.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = (dmat @ w.reshape(c_out, -1)).reshape(n, h, wd, c_in, 3, 3)
    dxp = np.zeros((n, c_in, h + 2, wd + 2), dtype=dout.dtype)
    for ki in range(3):
        for kj in range(3):
            dxp[:, :, ki : ki + h, kj : kj + wd] += dcols[:, :, :, :, ki, kj].transpose(
                0, 3, 1, 2
            )
    return dxp[:, :, 1 : h + 1, 1 : wd + 1], dw, db


def _relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def _maxpool2_forward(x: np.ndarray):
    """2x2 max-pool, stride 2, truncating: odd trailing rows/cols dropped."""
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    tiles = x[:, :, : 2 * h2, : 2 * w2].reshape(n, c, h2, 2, w2, 2)
    tiles = tiles.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
    idx = np.argmax(tiles, axis=-1)
    out = np.take_along_axis(tiles, idx[..., None], axis=-1)[..., 0]
    return out, (idx, x.shape)


def _maxpool2_backward(dout: np.ndarray, cache):
    idx, x_shape = cache
    n, c, h, w = x_shape
    h2, w2 = h // 2, w // 2
    dtiles = np.zeros((n, c, h2, w2, 4), dtype=dout.dtype)
    np.put_along_axis(dtiles, idx[..., None], dout[..., None], axis=-1)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    dx[:, :, : 2 * h2, : 2 * w2] = (
        dtiles.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
            n, c, 2 * h2, 2 * w2
        )
    )
    return dx


def _forward_batch(model: RegressorModel, x: np.ndarray, check_chain: bool = True):
    """Run the network on a (N, 1, H, W) batch; returns (out, caches)."""
    cfg = model.config
    caches = []
    chain = cfg.pooled_shape_chain() if check_chain else None
    h = x
    for i in range(len(cfg.conv_channels)):
        w = model.params[f"conv{i + 1}_w"]
        b = model.params[f"conv{i + 1}_b"]
        pre, cols = _conv3x3_forward(h, w, b)
        act, mask = _relu_forward(pre)
        if i < 4:
            pooled, pcache = _maxpool2_forward(act)
            if chain is not None and pooled.shape[2:] != chain[i]:
                raise AssertionError(
                    f"pool {i + 1}: shape {pooled.shape[2:]} != expected {chain[i]}"
                )
        else:
            pooled, pcache = act, None
        caches.append((h.shape, cols, mask, pcache))
        h = pooled
    gap = h.mean(axis=(2, 3))  # (N, C)
    out = gap @ model.params["dense_w"].T + model.params["dense_b"]
    caches.append((h.shape, gap))
    return out, caches


def _backward_batch(model: RegressorModel, caches, dout: np.ndarray):
    """Reverse-mode gradients for every parameter given d(loss)/d(output)."""
    cfg = model.config
    grads = {}
    body_shape, gap = caches[-1]
    grads["dense_w"] = dout.T @ gap
    grads["dense_b"] = dout.sum(axis=0)
    dgap = dout @ model.params["dense_w"]  # (N, C)
    n, c, h, w = body_shape
    dh = np.broadcast_to(dgap[:, :, None, None], body_shape).astype(dout.dtype) / (h * w)
    for i in reversed(range(len(cfg.conv_channels))):
        x_shape, cols, mask, pcache = caches[i]
        if pcache is not None:
            dh = _maxpool2_backward(dh, pcache)
        dh = dh * mask
        dh, dw, db = _conv3x3_backward(dh, cols, model.params[f"conv{i + 1}_w"], x_shape)
        grads[f"conv{i + 1}_w"] = dw
        grads[f"conv{i + 1}_b"] = db
    return grads


# ---------------------------------------------------------------------------
# public operations

def _as_feature_batch(model: RegressorModel, features: np.ndarray) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 3 and f.shape[2] == 1:
        f = f[:, :, 0]
    if f.ndim == 2:
        f = f[None]
    if f.ndim != 3 or f.shape[1:] != model.config.input_shape:
        raise ValueError(
            f"features must have shape {model.config.input_shape}, got {f.shape[1:]}"
        )
    normed = (f - model.feat_mean) / model.feat_std
    return normed[:, None, :, :].astype(model.dtype)


def forward(model: RegressorModel, features: np.ndarray) -> np.ndarray:
    """Predict one (x, y) manifold coordinate from one feature map."""
    x = _as_feature_batch(model, features)
    if x.shape[0] != 1:
        raise ValueError("forward takes a single feature map; use predict for batches")
    out, _ = _forward_batch(model, x)
    return out[0].astype(np.float64) * model.target_scale + model.target_mean


def predict(model: RegressorModel, features: np.ndarray) -> np.ndarray:
    """Predict (N, 2) coordinates for a (N, H, W) feature stack."""
    x = _as_feature_batch(model, features)
    out, _ = _forward_batch(model, x)
    return out.astype(np.float64) * model.target_scale + model.target_mean


def loss(pred, target) -> float:
    """Squared Euclidean distance (the training objective)."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    if pred.shape != target.shape:
        raise ValueError("pred/target shape mismatch")
    d = pred - target
    return float(d @ d)


def metric(pred, target) -> float:
    """Unsquared Euclidean distance (the reported error)."""
    return float(np.sqrt(loss(pred, target)))


def backward(model: RegressorModel, features: np.ndarray, target) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of loss(forward(features), target)
    with respect to every parameter."""
    target = np.asarray(target, dtype=np.float64).reshape(2)
    x = _as_feature_batch(model, features)
    out, caches = _forward_batch(model, x)
    pred = out[0].astype(np.float64) * model.target_scale + model.target_mean
    dpred = 2.0 * (pred - target)  # d(loss)/d(de-standardized output)
    dout = (dpred * model.target_scale).astype(model.dtype)[None, :]
    return _backward_batch(model, caches, dout)


def gradient_check(
    model: RegressorModel,
    features: np.ndarray,
    target,
    n_samples: int = 200,
    h: float = 1e-5,
    seed: int = 0,
) -> dict[str, float]:
    """Max relative error between reverse-mode and central finite-difference
    gradients, per layer type, computed on a float64 copy of the model.

    Sampling covers n_samples random parameters plus the first few entries
    of every tensor, so each layer type is always represented.  The step
    balances roundoff against the chance of stepping across a ReLU or
    max-pool kink, where one-sided curvature breaks central differences.
    """
    m = model.astype(np.float64)
    analytic = backward(m, features, target)
    target = np.asarray(target, dtype=np.float64).reshape(2)
    rng = np.random.default_rng(seed)

    def loss_at() -> float:
        x = _as_feature_batch(m, features)
        out, _ = _forward_batch(m, x)
        pred = out[0] * m.target_scale + m.target_mean
        return loss(pred, target)

    worst: dict[str, float] = {}
    names = list(m.params)
    sizes = np.array([m.params[n].size for n in names], dtype=np.float64)
    picks = [(n, int(i)) for n in names for i in range(min(3, m.params[n].size))]
    extra = rng.choice(len(names), size=n_samples, p=sizes / sizes.sum())
    for li in extra:
        name = names[li]
        picks.append((name, int(rng.integers(m.params[name].size))))
    for name, flat_idx in picks:
        p = m.params[name].reshape(-1)
        orig = p[flat_idx]
        p[flat_idx] = orig + h
        up = loss_at()
        p[flat_idx] = orig - h
        down = loss_at()
        p[flat_idx] = orig
        fd = (up - down) / (2 * h)
        an = analytic[name].reshape(-1)[flat_idx]
        rel = abs(an - fd) / max(abs(an), abs(fd), 1e-6)
        worst[name] = max(worst.get(name, 0.0), rel)
    return worst


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_metric: float
    holdout_metric: float | None = None


def _dataset_tensors(model: RegressorModel, pairs: list[TrainingPair]):
    feats = np.stack([p.features for p in pairs])
    normed = ((feats - model.feat_mean) / model.feat_std)[:, None, :, :]
    targets = np.stack([p.target for p in pairs])
    std_targets = (targets - model.target_mean) / model.target_scale
    return normed.astype(model.dtype), std_targets.astype(model.dtype)


def train(
    pairs: list[TrainingPair],
    cfg: RegressorConfig,
    holdout: list[TrainingPair] | None = None,
) -> tuple[RegressorModel, list[EpochRecord]]:
    """Minibatch SGD with momentum on squared Euclidean loss.

    Logs the mean unsquared error per epoch (manifold units) and stops
    early once the best metric has not improved by a relative 1e-4 for 10
    consecutive epochs.  Raises FloatingPointError if the loss leaves the
    realm of finite numbers.
    """
    if not pairs:
        raise ValueError("training set is empty")
    for p in pairs:
        if p.features.shape != cfg.input_shape:
            raise ValueError(
                f"pair {p.clip_id}: features {p.features.shape} != {cfg.input_shape}"
            )
    model = init_model(cfg)

    feats = np.stack([p.features for p in pairs])
    targets = np.stack([p.target for p in pairs])
    model.feat_mean = float(feats.mean())
    model.feat_std = float(max(feats.std(), _STAT_EPS))
    model.target_mean = targets.mean(axis=0)
    model.target_scale = np.maximum(targets.std(axis=0), _STAT_EPS)

    x, y = _dataset_tensors(model, pairs)
    scale = model.target_scale  # for de-standardized metrics
    holdout_xy = _dataset_tensors(model, holdout) if holdout else None

    rng = np.random.default_rng(cfg.seed + 1)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    history: list[EpochRecord] = []
    best = np.inf
    stale = 0
    n = len(pairs)
    # Divergence surfaces as the explicit FloatingPointError below; the
    # transient inf/nan arithmetic on the way there is expected, not a bug.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            err_sum = 0.0
            for start in range(0, n, cfg.batch):
                sel = order[start : start + cfg.batch]
                out, caches = _forward_batch(model, x[sel])
                diff = out - y[sel]
                batch_loss = float(np.mean(np.sum(diff.astype(np.float64) ** 2, axis=1)))
                if not np.isfinite(batch_loss):
                    raise FloatingPointError(f"non-finite loss at epoch {epoch}")
                err_sum += float(
                    np.sum(np.linalg.norm(diff.astype(np.float64) * scale, axis=1))
                )
                dout = (2.0 / len(sel)) * diff
                grads = _backward_batch(model, caches, dout)
                for k in model.params:
                    velocity[k] = cfg.momentum * velocity[k] - cfg.lr * grads[k]
                    model.params[k] += velocity[k]
            train_metric = err_sum / n
            holdout_metric = None
            if holdout_xy is not None:
                hout, _ = _forward_batch(model, holdout_xy[0])
                hdiff = (hout - holdout_xy[1]).astype(np.float64) * scale
                holdout_metric = float(np.mean(np.linalg.norm(hdiff, axis=1)))
            history.append(EpochRecord(epoch, train_metric, holdout_metric))

            improved = not np.isfinite(best) or (
                best - train_metric > _PLATEAU_REL_IMPROVEMENT * max(best, _STAT_EPS)
            )
            if improved:
                best = train_metric
                stale = 0
            else:
                stale += 1
                if stale >= _PLATEAU_EPOCHS:
                    break
    return model, history


@dataclass(frozen=True)
class EvalReport:
    mean_error: float
    per_item: tuple[float, ...]
    ids: tuple[str, ...]
    predictions: np.ndarray  # (N, 2) manifold units


def evaluate(model: RegressorModel, pairs: list[TrainingPair]) -> EvalReport:
    """Mean and per-item unsquared Euclidean error in manifold units."""
    if not pairs:
        raise ValueError("no pairs to evaluate")
    preds = predict(model, np.stack([p.features for p in pairs]))
    targets = np.stack([p.target for p in pairs])
    errors = np.linalg.norm(preds - targets, axis=1)
    return EvalReport(
        mean_error=float(errors.mean()),
        per_item=tuple(float(e) for e in errors),
        ids=tuple(p.clip_id for p in pairs),
        predictions=preds,
    )


def save_model(model: RegressorModel, path: str | Path) -> None:
    """magic + header length + JSON header + little-endian float32 blob."""
    m = model if model.dtype == np.float32 else model.astype(np.float32)
    names = _param_names(m.config)
    header = {
        "format_version": _FORMAT_VERSION,
        "config": m.config.to_dict(),
        "layers": [[n, list(m.params[n].shape)] for n in names],
        "stats": {
            "feat_mean": m.feat_mean,
            "feat_std": m.feat_std,
            "target_mean": m.target_mean.tolist(),
            "target_scale": m.target_scale.tolist(),
        },
    }
    blob = b"".join(np.ascontiguousarray(m.params[n], dtype="<f4").tobytes() for n in names)
    raw = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(blob)


def load_model(path: str | Path) -> RegressorModel:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != _CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a regressor checkpoint")
    (hlen,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + hlen:
        raise ValueError(f"{path}: truncated header")
    header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    if header.get("format_version") != _FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format_version {header.get('format_version')}")
    cfg = RegressorConfig.from_dict(header["config"])
    expected = _expected_shapes(cfg)
    blob = data[8 + hlen :]
    params = {}
    offset = 0
    for name, shape in header["layers"]:
        shape = tuple(shape)
        if name not in expected or expected[name] != shape:
            raise ValueError(f"{path}: layer {name} shape {shape} conflicts with config")
        size = int(np.prod(shape)) * 4
        if offset + size > len(blob):
            raise ValueError(f"{path}: truncated parameter blob at {name}")
        params[name] = np.frombuffer(blob[offset : offset + size], dtype="<f4").reshape(shape).copy()
        offset += size
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes after parameters")
    stats = header["stats"]
    return RegressorModel(
        config=cfg,
        params=params,
        feat_mean=stats["feat_mean"],
        feat_std=stats["feat_std"],
        target_mean=np.array(stats["target_mean"]),
        target_scale=np.array(stats["target_scale"]),
    )
