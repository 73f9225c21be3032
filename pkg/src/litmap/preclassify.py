"""Macroscopic pre-classification.

Pick the endmember count from the WCSS elbow, extract candidates with VCA,
then assign every pixel by reciprocal-distance affinity on L2-normalized
spectra. Pixels with no affinity above the threshold stay unassigned.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SpectralSignature, chunked_apply, l2_normalize_rows
from .errors import EmptyClass, RankDeficient, TooFewPixels

UNASSIGNED = -1
INVALID = -2


# ---------------------------------------------------------------- k-means


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    n_iter: int = 0


def _sq_dists(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _wcss(X, labels, C):
    diff = X - C[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = _sq_dists(X, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, _sq_dists(X, X[idx][None, :])[:, 0])
    return np.array(centers, dtype=float)


def lloyd(X, C0, max_iter=300, tol=1e-6):
    """Plain Lloyd iterations from the given centroids.

    Stops when the largest centroid shift drops below ``tol``. Empty
    clusters are reseeded with the point farthest from its centroid.
    """
    C = np.array(C0, dtype=float)
    k = C.shape[0]
    labels = np.zeros(X.shape[0], dtype=np.int64)
    it = 0
    for it in range(1, max_iter + 1):
        D = _sq_dists(X, C)
        labels = np.argmin(D, axis=1)
        new = np.empty_like(C)
        for j in range(k):
            members = X[labels == j]
            if members.shape[0] == 0:
                far = int(np.argmax(D[np.arange(X.shape[0]), labels]))
                new[j] = X[far]
                labels[far] = j
            else:
                new[j] = members.mean(axis=0)
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        if shift < tol:
            break
    labels = np.argmin(_sq_dists(X, C), axis=1)
    return KMeansResult(labels, C, _wcss(X, labels, C), it)


def kmeans(pixels, k, seed=0, restarts=8, max_iter=300, tol=1e-6, init=None):
    """Best-of-restarts k-means with seeded k-means++ starts.

    ``init`` adds one extra run from the supplied centroids.
    """
    X = np.asarray(pixels, dtype=float)
    if k < 1:
        raise TooFewPixels("k must be at least 1")
    if X.shape[0] < k:
        raise TooFewPixels(f"{X.shape[0]} pixels cannot form {k} clusters")
    rng = np.random.default_rng(seed)
    best = None
    starts = [_kmeans_pp(X, k, rng) for _ in range(max(restarts, 1))]
    if init is not None:
        starts.append(np.asarray(init, dtype=float))
    for C0 in starts:
        res = lloyd(X, C0, max_iter, tol)
        if best is None or res.wcss < best.wcss:
            best = res
    return best


@dataclass
class ElbowCurve:
    k_values: np.ndarray
    wcss: np.ndarray
    chosen_k: int | None = None


def wcss_curve(pixels, k_max=10, seed=0, restarts=8):
    """WCSS for k = 1..k_max.

    Each k also runs once from the (k-1) solution plus the worst-fit pixel,
    which makes the curve non-increasing.
    """
    X = np.asarray(pixels, dtype=float)
    k_max = min(k_max, X.shape[0])
    wcss = []
    prev = None
    for k in range(1, k_max + 1):
        init = None
        if prev is not None:
            d = _sq_dists(X, prev.centroids).min(axis=1)
            init = np.vstack([prev.centroids, X[int(np.argmax(d))]])
        res = kmeans(X, k, seed=seed + k, restarts=restarts, init=init)
        wcss.append(res.wcss)
        prev = res
    return ElbowCurve(np.arange(1, k_max + 1), np.array(wcss))


def elbow_select(curve: ElbowCurve) -> int:
    """Knee of the WCSS curve by maximum distance to the end-to-end chord.

    Both axes are min-max normalized first. Ties go to the smaller k; a
    flat curve returns 1.
    """
    k = np.asarray(curve.k_values, dtype=float)
    w = np.asarray(curve.wcss, dtype=float)
    if k.size < 3:
        raise ValueError("elbow selection needs at least k = 1..3")
    span = w.max() - w.min()
    if span == 0:
        curve.chosen_k = 1
        return 1
    x = (k - k[0]) / (k[-1] - k[0])
    y = (w - w.min()) / span
    x0, y0, x1, y1 = x[0], y[0], x[-1], y[-1]
    dist = np.abs((y1 - y0) * x - (x1 - x0) * y + x1 * y0 - y1 * x0) / np.hypot(x1 - x0, y1 - y0)
    interior = dist[1:-1]
    chosen = int(k[1 + int(np.argmax(interior))])
    curve.chosen_k = chosen
    return chosen


# ---------------------------------------------------------------- VCA


def affine_dimension(X, rtol=1e-9):
    Xc = X - X.mean(axis=0)
    if not np.any(Xc):
        return 0
    s = np.linalg.svd(Xc, compute_uv=False)
    return int(np.sum(s > rtol * s[0]))


def _estimate_snr(Y, r_m, x):
    B, N = Y.shape
    p = x.shape[0]
    p_y = np.sum(Y ** 2) / N
    p_x = np.sum(x ** 2) / N + np.sum(r_m ** 2)
    noise = p_y - p_x
    if noise <= 1e-12 * p_y:
        return np.inf
    signal = p_x - p / B * p_y
    if signal <= 0:
        return -np.inf
    return 10.0 * np.log10(signal / noise)


def vca(pixels, p, seed=0):
    """Vertex Component Analysis.

    pixels: (N, B) array, one spectrum per row. Returns ``(endmembers,
    indices)`` where endmembers are rows of the input (actual pixels) in
    extraction order.
    """
    X = np.asarray(pixels, dtype=float)
    N, B = X.shape
    if p < 1 or N < p:
        raise TooFewPixels(f"{N} pixels cannot yield {p} endmembers")
    dim = affine_dimension(X)
    if dim < p - 1:
        raise RankDeficient(f"pixel cloud has affine dimension {dim}, need {p - 1} for {p} endmembers")
    rng = np.random.default_rng(seed)
    Y = X.T

    if p == 1:
        dev = np.sum((X - X.mean(axis=0)) ** 2, axis=1)
        idx = int(np.argmax(dev))
        return X[[idx]].copy(), np.array([idx])

    r_m = Y.mean(axis=1, keepdims=True)
    Y_o = Y - r_m
    U = np.linalg.svd(Y_o @ Y_o.T / N)[0][:, :p]
    x_p = U.T @ Y_o
    snr = _estimate_snr(Y, r_m, x_p)
    snr_th = 15.0 + 10.0 * np.log10(p)

    if snr < snr_th:
        d = p - 1
        x = x_p[:d, :]
        c = np.sqrt(np.max(np.sum(x ** 2, axis=0)))
        y = np.vstack([x, c * np.ones((1, N))])
    else:
        Ud = np.linalg.svd(Y @ Y.T / N)[0][:, :p]
        x = Ud.T @ Y
        u = x.mean(axis=1, keepdims=True)
        denom = u.T @ x
        denom[denom == 0] = np.finfo(float).tiny
        y = x / denom

    indices = np.zeros(p, dtype=np.int64)
    A = np.zeros((p, p))
    A[-1, 0] = 1.0
    for i in range(p):
        w = rng.random((p, 1))
        f = w - A @ np.linalg.pinv(A) @ w
        f = f / np.linalg.norm(f)
        v = (f.T @ y).ravel()
        indices[i] = int(np.argmax(np.abs(v)))
        A[:, i] = y[:, indices[i]]
    return X[indices].copy(), indices


# ---------------------------------------------------------------- similarity


@dataclass
class ClassMap:
    """Per-pixel class ids; UNASSIGNED and INVALID are negative sentinels."""

    labels: np.ndarray
    class_names: dict = field(default_factory=dict)
    class_means: dict = field(default_factory=dict)

    def counts(self):
        ids, n = np.unique(self.labels, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, n)}

    def resolve(self, key):
        """Class id from an int, a numeric string, or a class name."""
        if isinstance(key, (int, np.integer)):
            cid = int(key)
        elif isinstance(key, str) and key.strip().lstrip("-").isdigit():
            cid = int(key)
        else:
            matches = [i for i, n in self.class_names.items() if n == key]
            if not matches:
                raise EmptyClass(f"no class named {key!r}; have {sorted(self.class_names.values())}")
            cid = matches[0]
        if cid not in self.class_names:
            raise EmptyClass(f"class id {cid} does not exist")
        return cid


def gamma_from_distances(D):
    """Rows of reciprocal distances normalized to sum to one.

    A zero distance puts all weight on the first matching candidate.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    zero = D == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / D
        gamma = inv / inv.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    if np.any(hit):
        first = np.argmax(zero[hit], axis=1)
        g = np.zeros((int(hit.sum()), D.shape[1]))
        g[np.arange(g.shape[0]), first] = 1.0
        gamma[hit] = g
    return gamma


def similarity(pixels, candidates):
    """Affinity of each pixel to each candidate; both sides are L2-normalized first."""
    X = l2_normalize_rows(pixels)
    R = l2_normalize_rows(candidates)
    D = np.empty((X.shape[0], R.shape[0]))
    for i, r in enumerate(R):
        diff = X - r
        D[:, i] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return gamma_from_distances(D)


def assign(gamma, threshold=0.5):
    """Class per row: the unique candidate with affinity strictly above threshold."""
    above = gamma > threshold
    n_above = above.sum(axis=1)
    return np.where(n_above == 1, np.argmax(gamma, axis=1), UNASSIGNED)


def similarity_assign(cube, candidates, threshold=0.5, names=None, threads=1) -> ClassMap:
    """Label every valid pixel of the cube against candidate spectra."""
    C = np.asarray(candidates, dtype=float)
    X, flat = cube.pixel_matrix()
    labels = np.full(cube.rows * cube.cols, INVALID, dtype=np.int64)
    if X.shape[0]:
        lab = chunked_apply(lambda chunk: assign(similarity(chunk, C), threshold), X, threads)
        labels[flat] = lab
    else:
        lab = np.zeros(0, dtype=np.int64)
    names = names or {i: f"class_{i}" for i in range(C.shape[0])}
    wl = cube.used_wavelengths
    means = {}
    for i in range(C.shape[0]):
        members = X[lab == i]
        if members.shape[0]:
            means[i] = SpectralSignature(wl, members.mean(axis=0), f"{names[i]}_mean")
    return ClassMap(labels.reshape(cube.rows, cube.cols), dict(names), means)


def isolate_class(cube, class_map: ClassMap, class_id):
    """Pixels of one class (masked bands, float64) and their flat raster indices."""
    flat_labels = class_map.labels.ravel()
    idx = np.flatnonzero(flat_labels == class_id)
    if idx.size == 0:
        raise EmptyClass(f"class {class_map.class_names.get(class_id, class_id)!r} has no pixels")
    X = cube.data.reshape(-1, cube.bands)[idx][:, cube.band_mask].astype(np.float64)
    return X, idx
