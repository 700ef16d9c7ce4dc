"""X-means: k-means whose centroids split while the BIC improves."""

from __future__ import annotations

import math

import numpy as np

_VAR_FLOOR = 1e-12
# Clusters tighter than this fraction of the data's overall per-dimension
# variance gain nothing from further splits. Without it, data sitting on a
# few exact points (common with count and one-hot features) drives child
# variances to zero and the BIC splits until every distinct point is alone.
DEFAULT_MIN_VARIANCE_RATIO = 0.01


def kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(1))
    return np.array(centers)


def lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    centers = centers.copy()
    labels = np.full(len(x), -1)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(2)
        new = d2.argmin(1)
        if np.array_equal(new, labels):
            break
        labels = new
        for j in range(len(centers)):
            members = x[labels == j]
            if len(members):
                centers[j] = members.mean(0)
    return labels, centers


def bic(x: np.ndarray, labels: np.ndarray, centers: np.ndarray, min_var: float = _VAR_FLOOR) -> float:
    """Spherical-Gaussian BIC (higher is better); -inf when the variance is
    not estimable (no more points than clusters)."""
    r, m = x.shape
    k = len(centers)
    if r <= k:
        return -math.inf
    sse = float(((x - centers[labels]) ** 2).sum())
    var = max(sse / (m * (r - k)), min_var, _VAR_FLOOR)
    loglik = -r * m / 2.0 * math.log(2 * math.pi * var) - sse / (2.0 * var)
    for j in range(k):
        rn = int((labels == j).sum())
        if rn:
            loglik += rn * math.log(rn / r)
    params = (k - 1) + k * m + 1
    return loglik - params / 2.0 * math.log(r)


def xmeans(points, k_min: int = 1, k_max: int | None = None, seed: int = 0,
           max_rounds: int = 50, min_variance_ratio: float = DEFAULT_MIN_VARIANCE_RATIO) -> np.ndarray:
    """Cluster labels 0..K-1, numbered by first appearance."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    if n < k_min:
        raise ValueError(f"need at least k_min={k_min} points, got {n}")
    if k_max is None:
        k_max = max(k_min, min(50, n // 3))
    if k_max < k_min:
        raise ValueError("k_max must be >= k_min")
    if x.shape[1] == 0:
        x = np.zeros((n, 1))
    rng = np.random.default_rng(seed)
    min_var = min_variance_ratio * float(x.var(axis=0).mean())

    labels, centers = lloyd(x, kmeans_pp(x, k_min, rng))
    for _ in range(max_rounds):
        new_centers = []
        for j in range(len(centers)):
            members = x[labels == j]
            if len(members) < 2 or len(new_centers) + (len(centers) - j) + 1 > k_max:
                new_centers.append(centers[j])
                continue
            parent = bic(members, np.zeros(len(members), dtype=int), centers[j][None, :], min_var)
            child_labels, child_centers = lloyd(members, kmeans_pp(members, 2, rng))
            if len(np.unique(child_labels)) == 2 and bic(members, child_labels, child_centers, min_var) > parent:
                new_centers.extend(child_centers)
            else:
                new_centers.append(centers[j])
        if len(new_centers) == len(centers):
            break
        labels, centers = lloyd(x, np.array(new_centers))
        centers = centers[np.unique(labels)]
        labels, centers = lloyd(x, centers)
    return _relabel(labels)


def _relabel(labels: np.ndarray) -> np.ndarray:
    mapping: dict[int, int] = {}
    return np.array([mapping.setdefault(int(v), len(mapping)) for v in labels], dtype=int)
