"""Clustering baselines for chapter-wide character naming."""

from mangascribe.baselines.hungarian import hungarian, matching_cost
from mangascribe.baselines.iforest import average_path_length, iforest_scores
from mangascribe.baselines.kmeans import ClusteringResult, kmeans, kmeans_plusplus
from mangascribe.baselines.naming import BaselineNaming, name_by_iforest_kmeans, name_by_kmeans

__all__ = [
    "BaselineNaming",
    "ClusteringResult",
    "average_path_length",
    "hungarian",
    "iforest_scores",
    "kmeans",
    "kmeans_plusplus",
    "matching_cost",
    "name_by_iforest_kmeans",
    "name_by_kmeans",
]
