"""
自适应离群点过滤

diff_global 衡量模型当前能力；离群点按到最近簇中心的余弦距离从远到近排列，
接纳比例 clamp(1 − diff_global, f_min, 1)，随模型变强由远及近吸收全部离群点
"""

from dataclasses import dataclass, field

import numpy as np

from numcore import round_half_away
from utils import setup_logger

# 创建日志记录器
logger = setup_logger("outlier_filter")


@dataclass(frozen=True)
class AdaOFDecision:
    """
    离群点接纳决策

    属性:
        diff_global: 全局难度
        admitted_fraction: 接纳比例
        admitted_indices: 被接纳离群点的位置（最远者在前）
        distances: 每个离群点到最近簇中心的距离
    """
    diff_global: float
    admitted_fraction: float
    admitted_indices: np.ndarray
    distances: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_admitted(self):
        return int(len(self.admitted_indices))


def global_diff(diffs):
    """
    所有类 diff 的算术平均

    参数:
        diffs: 非空实数序列

    返回:
        float
    """
    diffs = np.asarray(diffs, dtype=np.float64).ravel()
    if diffs.size == 0:
        raise ValueError("diff 列表为空，无法计算 diff_global")
    return float(np.sum(diffs) / diffs.size)


def adaof_admit(outliers, centroids, diff_global, f_min=0.1):
    """
    按全局难度接纳离群点

    参数:
        outliers: 单位化的离群点 EmbeddingMatrix
        centroids: 单位化的簇中心 EmbeddingMatrix
        diff_global: 全局难度，取值 [0, 1]
        f_min: 最小接纳比例

    返回:
        AdaOFDecision
    """
    if centroids.rows == 0:
        raise ValueError("没有簇中心，无法计算离群点距离")
    if not 0.0 <= diff_global <= 1.0:
        raise ValueError(f"diff_global 必须在 [0, 1] 内: {diff_global}")
    if not 0.0 <= f_min <= 1.0:
        raise ValueError(f"f_min 必须在 [0, 1] 内: {f_min}")
    if outliers.rows and outliers.dim != centroids.dim:
        raise ValueError(f"离群点维度 {outliers.dim} 与簇中心维度 {centroids.dim} 不一致")

    fraction = min(max(1.0 - diff_global, f_min), 1.0)
    n_outliers = outliers.rows
    if n_outliers == 0:
        return AdaOFDecision(diff_global, fraction, np.zeros(0, dtype=np.int64))

    distances = 1.0 - np.max(outliers.data @ centroids.data.T, axis=1)
    order = np.lexsort((np.arange(n_outliers), -distances))
    count = min(max(round_half_away(fraction * n_outliers), 0), n_outliers)
    admitted = order[:count].astype(np.int64)

    logger.info(f"AdaOF: diff_global={diff_global:.4f}, 接纳比例={fraction:.4f}, 接纳 {count}/{n_outliers} 个离群点")
    return AdaOFDecision(diff_global, fraction, admitted, distances)
