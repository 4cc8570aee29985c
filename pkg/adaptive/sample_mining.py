"""
自适应样本挖掘: 按与簇中心的相似度降序排列，取第 ceil(β·K) 个样本写入记忆
"""

import math

import numpy as np

from adaptive.stats import as_class_features

# 抵消 β·K 的浮点误差，避免 ceil 多进一位
_RANK_SLACK = 1e-9


def similarity_order(features, centroid):
    """
    按 ⟨centroid, Fₖ⟩ 降序排列的索引，相似度相同时索引小者在前
    """
    features = as_class_features(features)
    centroid = np.asarray(centroid, dtype=np.float64)
    if centroid.shape != (features.shape[1],):
        raise ValueError(f"簇中心维度 {centroid.shape} 与特征维度 {features.shape[1]} 不一致")
    sims = features @ centroid
    return np.lexsort((np.arange(len(sims)), -sims))


def rank_for_beta(beta, k):
    """1-based 秩 clamp(ceil(β·K), 1, K)"""
    return min(max(math.ceil(beta * k - _RANK_SLACK), 1), k)


def select_update_sample(features, centroid, beta):
    """
    选择用于更新簇中心的样本

    参数:
        features: (K, d) 单位特征
        centroid: 簇中心单位向量
        beta: 秩比例，β=1 选最不相似（最难）的样本

    返回:
        int: 样本在 features 中的索引
    """
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta 必须在 [0, 1] 内: {beta}")
    order = similarity_order(features, centroid)
    return int(order[rank_for_beta(beta, len(order)) - 1])
