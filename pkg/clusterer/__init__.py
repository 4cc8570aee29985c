from clusterer.dbscan import OUTLIER, PseudoLabeling, cosine_distances, dbscan

__all__ = [
    "OUTLIER",
    "PseudoLabeling",
    "cosine_distances",
    "dbscan"
]
