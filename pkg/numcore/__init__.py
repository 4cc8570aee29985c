from numcore.linalg import (
    NORM_TOLERANCE,
    ZeroNormError,
    EmbeddingMatrix,
    as_vector,
    l2_normalize,
    l2_normalize_rows,
    cosine_sim,
    logsumexp,
    logsumexp_rows,
    round_half_away,
    similarity_matrix
)

__all__ = [
    "NORM_TOLERANCE",
    "ZeroNormError",
    "EmbeddingMatrix",
    "as_vector",
    "l2_normalize",
    "l2_normalize_rows",
    "cosine_sim",
    "logsumexp",
    "logsumexp_rows",
    "round_half_away",
    "similarity_matrix"
]
