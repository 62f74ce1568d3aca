"""Lloyd's K-means with k-means++ seeding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusteringResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int = 0
    inertia_history: list[float] = field(default_factory=list)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_plusplus(X: np.ndarray, nclusters: int, seed: int | np.random.Generator) -> np.ndarray:
    """Indices of the initial centres chosen by k-means++ D^2 sampling."""
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(X, X[chosen]).min(axis=1)
    for _ in range(1, nclusters):
        total = closest.sum()
        if total <= 0:
            # every point sits on a centre already
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        else:
            idx = int(rng.choice(n, p=closest / total))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(X, X[[idx]])[:, 0])
    return np.array(chosen)


def kmeans(
    X: np.ndarray,
    nclusters: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusteringResult:
    """Cluster the rows of ``X``.

    Iterates until no centroid moves by ``tol`` or more, or ``max_iter``
    rounds. Empty clusters keep their previous centroid.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("kmeans needs a non-empty 2-D array of points")
    if not 1 <= nclusters <= X.shape[0]:
        raise ValueError(f"nclusters={nclusters} must be in [1, {X.shape[0]}]")
    centroids = X[kmeans_plusplus(X, nclusters, seed)].copy()
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = _sq_dists(X, centroids)
        labels = d.argmin(axis=1)
        history.append(float(d[np.arange(len(X)), labels].sum()))
        new = centroids.copy()
        for j in range(nclusters):
            members = labels == j
            if members.any():
                new[j] = X[members].mean(axis=0)
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    d = _sq_dists(X, centroids)
    labels = d.argmin(axis=1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    history.append(inertia)
    return ClusteringResult(labels, centroids, inertia, n_iter, history)
