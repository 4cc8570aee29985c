"""
聚类一致性指标: ARI 与 NMI，离群点(-1)各自视为单独的簇
"""

import numpy as np
from sklearn import metrics


def _expand_outliers(labels):
    labels = np.asarray(labels, dtype=np.int64).copy()
    outliers = np.flatnonzero(labels == -1)
    if outliers.size:
        start = labels.max() + 1 if labels.size else 0
        labels[outliers] = start + np.arange(outliers.size)
    return labels


def _check(labels, truth):
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise ValueError(f"标签长度不一致: {labels.shape} vs {truth.shape}")
    return _expand_outliers(labels), _expand_outliers(truth)


def ari(labels, truth):
    """调整兰德指数"""
    labels, truth = _check(labels, truth)
    return float(metrics.adjusted_rand_score(truth, labels))


def nmi(labels, truth):
    """归一化互信息（算术平均归一化）"""
    labels, truth = _check(labels, truth)
    return float(metrics.normalized_mutual_info_score(truth, labels))
