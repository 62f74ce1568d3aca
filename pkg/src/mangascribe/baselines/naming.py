"""Clustering-based naming baselines: K-means and iForest + K-means."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mangascribe.bank import OTHER, CharacterBank
from mangascribe.baselines.hungarian import hungarian
from mangascribe.baselines.iforest import iforest_scores
from mangascribe.baselines.kmeans import kmeans
from mangascribe.chapter import CharacterNode

logger = logging.getLogger(__name__)

DEFAULT_NTREES = 100
DEFAULT_SUBSAMPLE = 256
DEFAULT_ANOMALY_THRESHOLD = 0.55


@dataclass
class BaselineNaming:
    names: dict[str, str]
    method: str
    fallback: bool = False


def _unit_rows(M: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    return np.where(norms > 0, M / np.where(norms > 0, norms, 1.0), M)


def _match_clusters(centroids: np.ndarray, bank: CharacterBank) -> dict[int, str]:
    """Cluster index -> character name; unmatched clusters are absent."""
    reps = bank.representatives()
    cost = np.linalg.norm(_unit_rows(centroids)[:, None, :] - reps[None, :, :], axis=2)
    return {cl: bank.characters[j].name for cl, j in hungarian(cost).items()}


def name_by_kmeans(
    crops: Sequence[CharacterNode], bank: CharacterBank, seed: int = 0
) -> BaselineNaming:
    """K-means with k+1 clusters; the cluster left unmatched by Hungarian is "other"."""
    if bank.k < 1:
        raise ValueError("the K-means baseline needs at least one bank character")
    if len(crops) < bank.k + 1:
        raise ValueError(f"too few crops ({len(crops)}) for {bank.k + 1} clusters")
    X = np.vstack([c.embedding for c in crops])
    result = kmeans(X, bank.k + 1, seed=seed)
    named = _match_clusters(result.centroids, bank)
    names = {c.id: named.get(int(lab), OTHER) for c, lab in zip(crops, result.assignments)}
    return BaselineNaming(names, "kmeans")


def name_by_iforest_kmeans(
    crops: Sequence[CharacterNode],
    bank: CharacterBank,
    seed: int = 0,
    ntrees: int = DEFAULT_NTREES,
    subsample: int = DEFAULT_SUBSAMPLE,
    threshold: float = DEFAULT_ANOMALY_THRESHOLD,
) -> BaselineNaming:
    """Drop isolation-forest outliers as "other", then K-means with k clusters.

    Falls back to :func:`name_by_kmeans` (``fallback=True``) when fewer than
    ``k`` crops survive the filter.
    """
    if bank.k < 1:
        raise ValueError("the iForest + K-means baseline needs at least one bank character")
    X = np.vstack([c.embedding for c in crops])
    scores = iforest_scores(X, ntrees=ntrees, subsample=subsample, seed=seed)
    inliers = np.flatnonzero(scores < threshold)
    if len(inliers) < bank.k:
        logger.warning(
            "iForest kept %d crops for %d characters; falling back to K-means", len(inliers), bank.k
        )
        fallback = name_by_kmeans(crops, bank, seed)
        return BaselineNaming(fallback.names, "iforest-kmeans", fallback=True)
    result = kmeans(X[inliers], bank.k, seed=seed)
    named = _match_clusters(result.centroids, bank)
    names = {c.id: OTHER for c in crops}
    for i, lab in zip(inliers, result.assignments):
        names[crops[i].id] = named.get(int(lab), OTHER)
    return BaselineNaming(names, "iforest-kmeans")
