"""Image-quality metrics and clustering diagnostics.

PSNR and SSIM score restored images against their clean references.  The
three clustering indices (silhouette with cosine distance, Davies-Bouldin
and Calinski-Harabasz with Euclidean distance) diagnose how well an
embedding space separates supplied cluster labels; labels are inputs, not
computed here.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy import signal

from .errors import NumericError

__all__ = [
    "psnr",
    "ssim",
    "silhouette_cosine",
    "davies_bouldin",
    "calinski_harabasz",
    "load_embeddings_csv",
    "save_embeddings_csv",
]


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical images give +inf."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def _gaussian_window(size=11, sigma=1.5):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean structural similarity, canonical settings.

    11x11 Gaussian window (sigma 1.5), C1 = (0.01 peak)^2,
    C2 = (0.03 peak)^2, statistics aggregated over the valid region only
    (no padding), so every window lies fully inside the image.
    """
    a, b = _check_pair(a, b)
    if a.ndim != 2 or min(a.shape) < 11:
        raise ValueError(f"ssim needs at least an 11x11 image, got {a.shape}")
    win = _gaussian_window()

    def smooth(x):
        return signal.fftconvolve(x, win, mode="valid")

    mu_a = smooth(a)
    mu_b = smooth(b)
    var_a = smooth(a * a) - mu_a * mu_a
    var_b = smooth(b * b) - mu_b * mu_b
    cov = smooth(a * b) - mu_a * mu_b
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def _check_embeddings(vectors, labels):
    x = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2:
        raise ValueError("vectors must be (n, d)")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must be one per vector")
    y = y.astype(np.intp)
    if y.min() < 0:
        raise ValueError("labels must be non-negative")
    n_clusters = int(y.max()) + 1
    present = np.bincount(y, minlength=n_clusters)
    if np.any(present == 0):
        raise ValueError("every label in [0, K) must appear at least once")
    if n_clusters < 2:
        raise ValueError("need at least two clusters")
    return x, y, n_clusters


def silhouette_cosine(vectors: np.ndarray, labels) -> float:
    """Mean silhouette score under cosine distance (1 - cos similarity).

    For each sample, a = mean distance to its own cluster (self excluded)
    and b = smallest mean distance to any other cluster;
    s = (b - a) / max(a, b).  Members of singleton clusters score 0, as
    does any sample where a = b = 0.
    """
    x, y, n_clusters = _check_embeddings(vectors, labels)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValueError("cosine distance undefined for zero-norm vectors")
    unit = x / norms[:, None]
    dist = np.clip(1.0 - unit @ unit.T, 0.0, None)
    n = x.shape[0]
    sizes = np.bincount(y, minlength=n_clusters)
    # summed distance from each sample to each cluster
    totals = np.zeros((n, n_clusters))
    for k in range(n_clusters):
        totals[:, k] = dist[:, y == k].sum(axis=1)
    scores = np.zeros(n)
    for i in range(n):
        k = y[i]
        if sizes[k] == 1:
            continue  # singleton: score 0 by convention
        a = totals[i, k] / (sizes[k] - 1)
        other = [totals[i, j] / sizes[j] for j in range(n_clusters) if j != k]
        b = min(other)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def davies_bouldin(vectors: np.ndarray, labels) -> float:
    """Davies-Bouldin index with Euclidean geometry (lower is better).

    Mean over clusters of the worst ratio (S_i + S_j) / d(c_i, c_j) where
    S is the mean member-to-centroid distance.  Raises NumericError when
    two centroids coincide, since the ratio is then undefined.
    """
    x, y, n_clusters = _check_embeddings(vectors, labels)
    centroids = np.stack([x[y == k].mean(axis=0) for k in range(n_clusters)])
    scatter = np.array(
        [
            np.linalg.norm(x[y == k] - centroids[k], axis=1).mean()
            for k in range(n_clusters)
        ]
    )
    gaps = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=2)
    off = ~np.eye(n_clusters, dtype=bool)
    if np.any(gaps[off] == 0.0):
        raise NumericError("coincident cluster centroids: ratio undefined")
    ratios = (scatter[:, None] + scatter[None, :]) / np.where(off, gaps, np.inf)
    return float(ratios.max(axis=1).mean())


def calinski_harabasz(vectors: np.ndarray, labels) -> float:
    """Variance-ratio criterion [B/(K-1)] / [W/(n-K)] (higher is better).

    B is the label-weighted dispersion of centroids around the grand mean
    and W the summed squared member-to-centroid distances.  Returns +inf
    when W = 0 (all clusters are point masses).
    """
    x, y, n_clusters = _check_embeddings(vectors, labels)
    n = x.shape[0]
    if n <= n_clusters:
        raise ValueError("need more samples than clusters")
    grand = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for k in range(n_clusters):
        members = x[y == k]
        c = members.mean(axis=0)
        between += members.shape[0] * float(np.sum((c - grand) ** 2))
        within += float(np.sum((members - c) ** 2))
    if within == 0.0:
        return float("inf")
    return (between / (n_clusters - 1)) / (within / (n - n_clusters))


def load_embeddings_csv(path):
    """Read an embedding table: one row per sample, label then d floats."""
    rows = []
    labels = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            labels.append(int(rec[0]))
            rows.append([float(v) for v in rec[1:]])
    if not rows:
        raise ValueError(f"no embedding rows in {path!r}")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("inconsistent embedding dimension across rows")
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.intp)


def save_embeddings_csv(path, vectors: np.ndarray, labels) -> None:
    vectors = np.asarray(vectors, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for lab, vec in zip(labels, vectors):
            writer.writerow([int(lab)] + [repr(float(v)) for v in vec])
