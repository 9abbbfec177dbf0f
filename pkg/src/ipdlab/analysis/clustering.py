"""Labelling performances as good or bad: rank thresholds and k-means."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .._rng import np_substream

THRESHOLDS = {1: 0.05, 2: 0.25, 3: 0.50}


class DegenerateInputError(ValueError):
    pass


def cluster_threshold(r, theta: float) -> np.ndarray:
    """1 for rows with normalized rank at most ``theta``, else 0."""
    return (np.asarray(r, dtype=float) <= theta).astype(int)


def standardize(X: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per column (constant columns are only centred)."""
    X = np.asarray(X, dtype=float)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return (X - X.mean(axis=0)) / std


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [X[rng.integers(n)]]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total == 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def kmeans(X: np.ndarray, k: int, seed=0, n_init: int = 10, max_iter: int = 300, tol: float = 1e-10):
    """Lloyd iterations from k-means++ starts; returns (labels, centers, inertia).

    Restart i uses the random stream keyed by (seed, k, i), so the first
    restarts of a long run coincide with a short run.
    """
    X = np.asarray(X, dtype=float)
    prefix = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    best = None
    for restart in range(n_init):
        rng = np_substream(*prefix, k, restart)
        centers = kmeans_pp_init(X, k, rng)
        for _ in range(max_iter):
            labels = _sq_dists(X, centers).argmin(axis=1)
            new = centers.copy()
            for j in range(k):
                members = X[labels == j]
                if len(members):
                    new[j] = members.mean(axis=0)
            shift = ((new - centers) ** 2).sum()
            centers = new
            if shift <= tol:
                break
        d = _sq_dists(X, centers)
        labels = d.argmin(axis=1)
        inertia = float(d[np.arange(len(X)), labels].sum())
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    return best


def silhouette_samples(X: np.ndarray, labels: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Per-point silhouette with Euclidean distances; points in singleton clusters score 0."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    classes, inverse = np.unique(labels, return_inverse=True)
    if len(classes) < 2:
        raise DegenerateInputError("silhouette needs at least two clusters")
    sizes = np.bincount(inverse, minlength=len(classes)).astype(float)
    out = np.empty(len(X))
    for start in range(0, len(X), chunk):
        block = X[start:start + chunk]
        d = np.sqrt(np.maximum(_sq_dists(block, X), 0.0))
        sums = np.zeros((len(block), len(classes)))
        for c in range(len(classes)):
            sums[:, c] = d[:, inverse == c].sum(axis=1)
        own = inverse[start:start + chunk]
        rows = np.arange(len(block))
        own_size = sizes[own]
        with np.errstate(invalid="ignore", divide="ignore"):
            a = sums[rows, own] / (own_size - 1)
            mean_other = sums / sizes[None, :]
        mean_other[rows, own] = np.inf
        b = mean_other.min(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = (b - a) / np.maximum(a, b)
        s[own_size == 1] = 0.0
        s[np.isnan(s)] = 0.0
        out[start:start + chunk] = s
    return out


def silhouette_score(X: np.ndarray, labels: np.ndarray) -> float:
    return float(silhouette_samples(X, labels).mean())


@dataclass
class KMeansResult:
    labels: np.ndarray
    chosen_k: int
    scores: dict
    centers: np.ndarray


def kmeans_silhouette(points, k_range: Iterable[int] = range(2, 9), seed=0, n_init: int = 10,
                      order_by: Optional[np.ndarray] = None) -> KMeansResult:
    """Cluster standardized points for each k and keep the k with the best mean silhouette.

    Values of k larger than the number of distinct points are skipped.
    Labels are renumbered so cluster 0 has the smallest mean of
    ``order_by`` (default: the first column, e.g. normalized rank).
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise DegenerateInputError("need a 2-d array with at least two points")
    distinct = len(np.unique(X, axis=0))
    if distinct < 2:
        raise DegenerateInputError("all points are identical")
    Z = standardize(X)
    scores = {}
    best = None
    for k in k_range:
        if k < 2 or k > distinct:
            continue
        labels, centers, _ = kmeans(Z, k, seed, n_init)
        if len(np.unique(labels)) < 2:
            continue
        score = silhouette_score(Z, labels)
        scores[k] = score
        if best is None or score > best[0]:
            best = (score, k, labels, centers)
    if best is None:
        raise DegenerateInputError("no k in range could be evaluated")
    _, k, labels, centers = best
    key = X[:, 0] if order_by is None else np.asarray(order_by, dtype=float)
    present = np.unique(labels)
    order = sorted(present, key=lambda c: (key[labels == c].mean(), c))
    remap = {old: new for new, old in enumerate(order)}
    labels = np.array([remap[c] for c in labels])
    centers = centers[order]
    return KMeansResult(labels, k, scores, centers)
