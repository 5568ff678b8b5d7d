"""Neighbor-embedding of image latent codes into 2-D, written from scratch.

The construction is the fuzzy-topology family: exact k-nearest-neighbor
graph, per-point adaptive kernel widths found by binary search, fuzzy
symmetrization, then stochastic gradient layout of a 2-D point cloud whose
attraction/repulsion curve 1/(1 + a d^{2b}) is least-squares fitted from
(min_dist, spread).  Everything is seeded and, in the default
single-threaded mode, bit-reproducible.

The quality metric `neighborhood_preservation` reports the mean overlap of
k-nearest-neighbor sets between the high- and low-dimensional spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg
from scipy.optimize import curve_fit
from scipy.spatial.distance import cdist

_SMOOTH_TOLERANCE = 1e-5
_SMOOTH_ITERATIONS = 64
_MIN_SIGMA = 1e-12
_GRAD_CLIP = 4.0
_REPULSION_STRENGTH = 1.0
_INIT_SPAN = 10.0
_INIT_NOISE = 1e-4
_AB_GRID_POINTS = 300


@dataclass(frozen=True)
class EmbeddingMatrix:
    """N image latent codes of shared dimension D with row identifiers."""

    vectors: np.ndarray
    ids: list[str]

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {v.shape}")
        if v.shape[1] < 2:
            raise ValueError(f"row dimension must be >= 2, got {v.shape[1]}")
        if v.shape[0] != len(self.ids):
            raise ValueError(f"{v.shape[0]} rows but {len(self.ids)} ids")
        if not np.all(np.isfinite(v)):
            raise ValueError("vectors contain non-finite values")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "ids", list(self.ids))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ManifoldCoords:
    """2-D layout aligned row-for-row with the embedding it came from."""

    coords: np.ndarray
    ids: list[str]

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 2:
            raise ValueError(f"coords must be N x 2, got shape {c.shape}")
        if c.shape[0] != len(self.ids):
            raise ValueError(f"{c.shape[0]} rows but {len(self.ids)} ids")
        if not np.all(np.isfinite(c)):
            raise ValueError("coords contain non-finite values")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "ids", list(self.ids))


@dataclass(frozen=True)
class ManifoldConfig:
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int = 200
    negative_samples: int = 5
    learning_rate: float = 1.0
    seed: int = 0
    init: str = "spectral"  # "spectral" | "random"

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be >= 2")
        if not 0 <= self.min_dist < self.spread:
            raise ValueError("need 0 <= min_dist < spread")
        if self.n_epochs < 1 or self.negative_samples < 1:
            raise ValueError("n_epochs and negative_samples must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.init not in ("spectral", "random"):
            raise ValueError(f"unknown init {self.init!r}")


def _as_vectors(emb) -> np.ndarray:
    if isinstance(emb, EmbeddingMatrix):
        return emb.vectors
    return np.asarray(emb, dtype=np.float64)


def knn_graph(emb, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact brute-force k nearest neighbors per point, self excluded.

    Returns (indices, distances), each (N, k), distances sorted ascending.
    Ties break toward the lower index so results are deterministic.
    """
    x = _as_vectors(emb)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={n}")
    d = cdist(x, x)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(d, order, axis=1)


def smooth_knn(dists: np.ndarray, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-point kernel parameters (rho, sigma).

    rho_i is the distance to the nearest neighbor.  sigma_i solves
    sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k) by bracketed binary
    search.  Rows whose distances are all equal admit no root (the sum is
    constant at k), so they fall back to sigma = 1.0.
    """
    dists = np.asarray(dists, dtype=np.float64)
    if k is None:
        k = dists.shape[1]
    if k < 2 or dists.shape[1] != k:
        raise ValueError(f"need k >= 2 matching distance columns, got k={k}")
    n = dists.shape[0]
    target = np.log2(k)

    rho = dists[:, 0].copy()
    gaps = np.maximum(dists - rho[:, None], 0.0)

    degenerate = np.all(dists == dists[:, :1], axis=1)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    done = degenerate.copy()
    for _ in range(_SMOOTH_ITERATIONS):
        if done.all():
            break
        psum = np.sum(np.exp(-gaps / mid[:, None]), axis=1)
        done |= np.abs(psum - target) < _SMOOTH_TOLERANCE
        above = ~done & (psum > target)
        below = ~done & ~above
        hi[above] = mid[above]
        mid[above] = (lo[above] + hi[above]) / 2.0
        lo[below] = mid[below]
        unbounded = below & np.isinf(hi)
        mid[unbounded] *= 2.0
        bounded = below & ~unbounded
        mid[bounded] = (lo[bounded] + hi[bounded]) / 2.0

    sigma = np.maximum(mid, _MIN_SIGMA)
    sigma[degenerate] = 1.0
    return rho, sigma


def fuzzy_graph(
    knn_indices: np.ndarray,
    knn_dists: np.ndarray,
    rho: np.ndarray,
    sigma: np.ndarray,
) -> scipy.sparse.csr_matrix:
    """Symmetric fuzzy neighbor graph.

    Directed memberships a_ij = exp(-max(0, d_ij - rho_i)/sigma_i) are
    combined by the probabilistic t-conorm w = a + a^T - a o a^T, so
    w_ij = w_ji exactly and all surviving weights lie in (0, 1].
    """
    n, k = knn_indices.shape
    if knn_dists.shape != (n, k) or rho.shape != (n,) or sigma.shape != (n,):
        raise ValueError("inconsistent shapes between knn arrays and kernel params")
    vals = np.exp(-np.maximum(knn_dists - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n), k)
    a = scipy.sparse.coo_matrix(
        (vals.ravel(), (rows, knn_indices.ravel())), shape=(n, n)
    ).tocsr()
    at = a.T.tocsr()
    w = a + at - a.multiply(at)
    w = w.tocsr()
    w.eliminate_zeros()
    return w


def fit_ab(min_dist: float, spread: float) -> tuple[float, float]:
    """Least-squares (a, b) so that 1/(1 + a d^(2b)) tracks the target
    curve: 1 up to min_dist, then exp(-(d - min_dist)/spread)."""
    if not 0 <= min_dist < spread:
        raise ValueError("need 0 <= min_dist < spread")
    xv = np.linspace(0.0, 3.0 * spread, _AB_GRID_POINTS)
    yv = np.where(xv <= min_dist, 1.0, np.exp(-(xv - min_dist) / spread))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    (a, b), _ = curve_fit(curve, xv, yv, p0=(1.0, 1.0), maxfev=10000)
    return float(a), float(b)


@numba.njit(cache=True)
def _tau_rand_int(state):
    """xorshift generator over a 3-word state; deterministic and
    numba-friendly (the layout loop cannot call numpy Generators)."""
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        (((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        (((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        (((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


@numba.njit(cache=True, inline="always")
def _clip(val):
    if val > _GRAD_CLIP:
        return _GRAD_CLIP
    if val < -_GRAD_CLIP:
        return -_GRAD_CLIP
    return val


@numba.njit(cache=True)
def _sgd_layout(embedding, head, tail, epochs_per_sample, a, b, n_epochs,
                initial_alpha, negative_sample_rate, rng_state):
    """Sequential stochastic layout optimization (deterministic).

    Each edge fires when its sampling clock comes due (rate proportional to
    its fuzzy weight): the endpoints move along the attractive gradient of
    the fitted curve, then `negative_sample_rate` random vertices repel the
    head point.  Gradient components are clipped to +/-4 and the learning
    rate decays linearly to zero.
    """
    n_vertices = embedding.shape[0]
    dim = embedding.shape[1]
    n_edges = epochs_per_sample.shape[0]
    epochs_per_negative = epochs_per_sample / negative_sample_rate
    next_sample = epochs_per_sample.copy()
    next_negative = epochs_per_negative.copy()
    alpha = initial_alpha
    for epoch in range(n_epochs):
        for i in range(n_edges):
            if next_sample[i] > epoch:
                continue
            j = head[i]
            k = tail[i]
            dist_sq = 0.0
            for d in range(dim):
                diff = embedding[j, d] - embedding[k, d]
                dist_sq += diff * diff
            if dist_sq > 0.0:
                coeff = -2.0 * a * b * dist_sq ** (b - 1.0)
                coeff /= a * dist_sq**b + 1.0
            else:
                coeff = 0.0
            for d in range(dim):
                grad = _clip(coeff * (embedding[j, d] - embedding[k, d]))
                embedding[j, d] += grad * alpha
                embedding[k, d] -= grad * alpha
            next_sample[i] += epochs_per_sample[i]

            n_neg = int((epoch - next_negative[i]) / epochs_per_negative[i])
            for _ in range(n_neg):
                k = _tau_rand_int(rng_state) % n_vertices
                dist_sq = 0.0
                for d in range(dim):
                    diff = embedding[j, d] - embedding[k, d]
                    dist_sq += diff * diff
                if dist_sq > 0.0:
                    coeff = 2.0 * _REPULSION_STRENGTH * b
                    coeff /= (0.001 + dist_sq) * (a * dist_sq**b + 1.0)
                elif j == k:
                    continue
                else:
                    coeff = 0.0
                for d in range(dim):
                    if coeff > 0.0:
                        grad = _clip(coeff * (embedding[j, d] - embedding[k, d]))
                    else:
                        grad = _GRAD_CLIP
                    embedding[j, d] += grad * alpha
            next_negative[i] += n_neg * epochs_per_negative[i]
        alpha = initial_alpha * (1.0 - epoch / n_epochs)


@numba.njit(cache=True, parallel=True)
def _sgd_layout_parallel(embedding, head, tail, epochs_per_sample, a, b, n_epochs,
                         initial_alpha, negative_sample_rate, rng_base):
    """Lock-free parallel variant: edges update concurrently without
    synchronization, so results are best-effort and NOT reproducible."""
    n_vertices = embedding.shape[0]
    dim = embedding.shape[1]
    n_edges = epochs_per_sample.shape[0]
    epochs_per_negative = epochs_per_sample / negative_sample_rate
    next_sample = epochs_per_sample.copy()
    next_negative = epochs_per_negative.copy()
    alpha = initial_alpha
    for epoch in range(n_epochs):
        for i in numba.prange(n_edges):
            if next_sample[i] > epoch:
                continue
            state = np.empty(3, dtype=np.int64)
            state[0] = (rng_base ^ (i * 2654435761)) | 1
            state[1] = (rng_base ^ (epoch * 40503) ^ 0x5DEECE66) | 1
            state[2] = (rng_base ^ (i * 69069 + epoch)) | 1
            j = head[i]
            k = tail[i]
            dist_sq = 0.0
            for d in range(dim):
                diff = embedding[j, d] - embedding[k, d]
                dist_sq += diff * diff
            if dist_sq > 0.0:
                coeff = -2.0 * a * b * dist_sq ** (b - 1.0)
                coeff /= a * dist_sq**b + 1.0
            else:
                coeff = 0.0
            for d in range(dim):
                grad = _clip(coeff * (embedding[j, d] - embedding[k, d]))
                embedding[j, d] += grad * alpha
                embedding[k, d] -= grad * alpha
            next_sample[i] += epochs_per_sample[i]

            n_neg = int((epoch - next_negative[i]) / epochs_per_negative[i])
            for _ in range(n_neg):
                k = _tau_rand_int(state) % n_vertices
                dist_sq = 0.0
                for d in range(dim):
                    diff = embedding[j, d] - embedding[k, d]
                    dist_sq += diff * diff
                if dist_sq > 0.0:
                    coeff = 2.0 * _REPULSION_STRENGTH * b
                    coeff /= (0.001 + dist_sq) * (a * dist_sq**b + 1.0)
                elif j == k:
                    continue
                else:
                    coeff = 0.0
                for d in range(dim):
                    if coeff > 0.0:
                        grad = _clip(coeff * (embedding[j, d] - embedding[k, d]))
                    else:
                        grad = _GRAD_CLIP
                    embedding[j, d] += grad * alpha
            next_negative[i] += n_neg * epochs_per_negative[i]
        alpha = initial_alpha * (1.0 - epoch / n_epochs)


def _spectral_init(graph: scipy.sparse.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    """Scaled spectral embedding of the graph Laplacian; raises if the
    eigensolver cannot deliver (caller falls back to seeded uniform)."""
    n = graph.shape[0]
    lap = scipy.sparse.csgraph.laplacian(graph, normed=True)
    k = 3
    ncv = max(2 * k + 1, int(np.sqrt(n)))
    vals, vecs = scipy.sparse.linalg.eigsh(
        lap, k, which="SM", ncv=ncv, tol=1e-4, v0=np.ones(n), maxiter=n * 5
    )
    order = np.argsort(vals)[1:k]
    # On a disconnected graph the nullspace holds per-component indicator
    # directions, so components land at distinct anchors and the jitter
    # below un-degenerates the collapsed points.
    init = vecs[:, order]
    expansion = _INIT_SPAN / np.abs(init).max()
    return init * expansion + rng.normal(scale=_INIT_NOISE, size=init.shape)


def _initial_coords(
    graph: scipy.sparse.csr_matrix, cfg: ManifoldConfig, rng: np.random.Generator
) -> np.ndarray:
    n = graph.shape[0]
    init = None
    if cfg.init == "spectral":
        try:
            init = _spectral_init(graph, rng)
        except Exception:
            init = None
    if init is None:
        init = rng.uniform(-_INIT_SPAN, _INIT_SPAN, size=(n, 2))
    span = init.max(axis=0) - init.min(axis=0)
    span[span == 0] = 1.0
    return (_INIT_SPAN * (init - init.min(axis=0)) / span).astype(np.float32)


def optimize_layout(
    graph: scipy.sparse.csr_matrix,
    cfg: ManifoldConfig,
    ids: list[str] | None = None,
    parallel: bool = False,
) -> ManifoldCoords:
    """Lay out a symmetric weighted graph in 2-D.

    Edges below max_weight/n_epochs can never be sampled and are dropped.
    Per epoch each surviving edge fires with frequency proportional to its
    weight.  Vertices without edges keep their initial placement.
    """
    n = graph.shape[0]
    if graph.shape != (n, n):
        raise ValueError("graph must be square")
    if ids is None:
        ids = [str(i) for i in range(n)]

    graph = graph.tocsr().copy()
    graph.data = np.asarray(graph.data, dtype=np.float64)
    if graph.nnz == 0:
        raise ValueError("graph has no edges")
    graph.data[graph.data < graph.data.max() / cfg.n_epochs] = 0.0
    graph.eliminate_zeros()

    ss = np.random.SeedSequence(cfg.seed)
    init_rng = np.random.Generator(np.random.PCG64(ss.spawn(2)[0]))
    embedding = _initial_coords(graph, cfg, init_rng)

    coo = graph.tocoo()
    head = coo.row.astype(np.int32)
    tail = coo.col.astype(np.int32)
    weights = coo.data
    epochs_per_sample = weights.max() / weights

    a, b = fit_ab(cfg.min_dist, cfg.spread)
    state_rng = np.random.Generator(np.random.PCG64(ss.spawn(2)[1]))
    if parallel:
        base = int(state_rng.integers(1, 2**31 - 1))
        _sgd_layout_parallel(
            embedding, head, tail, epochs_per_sample, a, b, cfg.n_epochs,
            float(cfg.learning_rate), float(cfg.negative_samples), base,
        )
    else:
        rng_state = state_rng.integers(-(2**31), 2**31, size=3).astype(np.int64)
        rng_state[rng_state == 0] = 1
        _sgd_layout(
            embedding, head, tail, epochs_per_sample, a, b, cfg.n_epochs,
            float(cfg.learning_rate), float(cfg.negative_samples), rng_state,
        )
    return ManifoldCoords(coords=embedding.astype(np.float64), ids=ids)


def embed(emb: EmbeddingMatrix, cfg: ManifoldConfig, parallel: bool = False) -> ManifoldCoords:
    """Full pipeline: kNN -> adaptive kernels -> fuzzy graph -> 2-D layout."""
    if not 2 <= cfg.n_neighbors < emb.n:
        raise ValueError(
            f"need 2 <= n_neighbors < N, got n_neighbors={cfg.n_neighbors}, N={emb.n}"
        )
    idx, dists = knn_graph(emb, cfg.n_neighbors)
    rho, sigma = smooth_knn(dists)
    graph = fuzzy_graph(idx, dists, rho, sigma)
    return optimize_layout(graph, cfg, ids=emb.ids, parallel=parallel)


def neighborhood_preservation(high, low, k: int) -> float:
    """Mean over points of |kNN_high(point) ∩ kNN_low(point)| / k.

    Invariant under rigid motion or uniform scaling of either space; 1.0
    when low is an isometric copy of high, ~k/(N-1) for random layouts.
    """
    hv = _as_vectors(high)
    lv = low.coords if isinstance(low, ManifoldCoords) else np.asarray(low, dtype=np.float64)
    if hv.shape[0] != lv.shape[0]:
        raise ValueError(f"row mismatch: {hv.shape[0]} vs {lv.shape[0]}")
    hi_idx, _ = knn_graph(hv, k)
    lo_idx, _ = knn_graph(lv, k)
    overlap = 0
    for row_hi, row_lo in zip(hi_idx, lo_idx):
        overlap += len(set(row_hi.tolist()) & set(row_lo.tolist()))
    return overlap / (k * hv.shape[0])
