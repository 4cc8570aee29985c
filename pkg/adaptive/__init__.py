from adaptive.stats import (
    STATS_HEADER,
    ClassAdaptiveStats,
    hardest_similarity,
    per_instance_similarity,
    least_hardest_similarity,
    adaptive_weight,
    weighted_similarity,
    intra_class_diff,
    select_beta,
    compute_class_stats
)
from adaptive.sample_mining import similarity_order, rank_for_beta, select_update_sample
from adaptive.outlier_filter import AdaOFDecision, global_diff, adaof_admit

__all__ = [
    "STATS_HEADER",
    "ClassAdaptiveStats",
    "hardest_similarity",
    "per_instance_similarity",
    "least_hardest_similarity",
    "adaptive_weight",
    "weighted_similarity",
    "intra_class_diff",
    "select_beta",
    "compute_class_stats",
    "similarity_order",
    "rank_for_beta",
    "select_update_sample",
    "AdaOFDecision",
    "global_diff",
    "adaof_admit"
]
