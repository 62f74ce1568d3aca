"""Isolation forest anomaly scores."""

from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329


def average_path_length(n: int) -> float:
    """Expected path length of an unsuccessful BST search among ``n`` points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def _path_lengths(
    X: np.ndarray, sample: np.ndarray, rng: np.random.Generator, height_limit: int
) -> np.ndarray:
    """Path length of every row of ``X`` in one tree grown on ``X[sample]``."""
    out = np.zeros(X.shape[0])
    # (rows of X routed here, training rows here, depth)
    stack = [(np.arange(X.shape[0]), sample, 0)]
    while stack:
        rows, train, depth = stack.pop()
        if len(rows) == 0:
            continue
        sub = X[train]
        spread = sub.max(axis=0) - sub.min(axis=0) if len(train) else np.zeros(X.shape[1])
        splittable = np.flatnonzero(spread > 0)
        if depth >= height_limit or len(train) <= 1 or len(splittable) == 0:
            out[rows] = depth + average_path_length(len(train))
            continue
        q = int(rng.choice(splittable))
        lo, hi = sub[:, q].min(), sub[:, q].max()
        p = rng.uniform(lo, hi)
        stack.append((rows[X[rows, q] < p], train[X[train, q] < p], depth + 1))
        stack.append((rows[X[rows, q] >= p], train[X[train, q] >= p], depth + 1))
    return out


def iforest_scores(
    X: np.ndarray, ntrees: int = 100, subsample: int = 256, seed: int = 0
) -> np.ndarray:
    """Anomaly score ``2 ** (-E[h(x)] / c(psi))`` per row of ``X``.

    ``subsample`` is clamped to the number of points. Higher is more anomalous.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("isolation forest needs at least 2 points")
    if ntrees < 1:
        raise ValueError("ntrees must be positive")
    rng = np.random.default_rng(seed)
    psi = min(subsample, X.shape[0])
    height_limit = math.ceil(math.log2(psi)) if psi > 1 else 0
    total = np.zeros(X.shape[0])
    for _ in range(ntrees):
        sample = rng.choice(X.shape[0], size=psi, replace=False)
        total += _path_lengths(X, sample, rng, height_limit)
    return 2.0 ** (-(total / ntrees) / average_path_length(psi))
