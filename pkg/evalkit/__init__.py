from evalkit.retrieval import (
    RetrievalSplit,
    build_split,
    average_precision,
    mean_ap,
    cmc,
    evaluate
)
from evalkit.clustering import ari, nmi

__all__ = [
    "RetrievalSplit",
    "build_split",
    "average_precision",
    "mean_ap",
    "cmc",
    "evaluate",
    "ari",
    "nmi"
]
