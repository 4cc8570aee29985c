from loss.hybrid_nce import hybrid_nce
from loss.distill import (
    LossBreakdown,
    class_prob,
    class_prob_backward,
    mse_distill,
    total,
    batch_mean
)

__all__ = [
    "hybrid_nce",
    "LossBreakdown",
    "class_prob",
    "class_prob_backward",
    "mse_distill",
    "total",
    "batch_mean"
]
