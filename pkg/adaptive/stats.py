"""
类内变化统计量

对小批量中每个类的 K 个单位特征，计算最难正样本对相似度、逐实例相似度、
最不难正样本对相似度、调和平均权重、加权相似度、类内差异 diff 与采样秩比例 β
"""

from dataclasses import dataclass, asdict

import numpy as np

from numcore import EmbeddingMatrix, logsumexp, logsumexp_rows, round_half_away
from utils import setup_logger

# 创建日志记录器
logger = setup_logger("adaptive")

# sim_lh 与 sim_h 之差小于该值视为无类内变化
ZERO_VARIATION = 1e-12


def as_class_features(features):
    """
    整理为 (K, d) 的64位数组，K 至少为 1
    """
    if isinstance(features, EmbeddingMatrix):
        features = features.data
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError(f"类特征必须是非空的 (K, d) 数组，实际形状: {features.shape}")
    return features


def _check_tau(tau):
    if tau <= 0:
        raise ValueError(f"温度 τ 必须为正: {tau}")


def hardest_similarity(features, tau):
    """
    最难正样本对相似度（软最小值），对所有有序对求和，含 n=m

    Sim_h = −τ·log Σₙ Σₘ exp(−⟨Fₙ,Fₘ⟩/τ)
    """
    features = as_class_features(features)
    _check_tau(tau)
    gram = features @ features.T
    return -tau * logsumexp((-gram / tau).ravel())


def per_instance_similarity(features, tau):
    """
    逐实例相似度 Simₙ = −τ·log Σₘ exp(−⟨Fₙ,Fₘ⟩/τ)

    返回:
        np.ndarray: K 个值
    """
    features = as_class_features(features)
    _check_tau(tau)
    gram = features @ features.T
    return -tau * logsumexp_rows(-gram / tau)


def least_hardest_similarity(features, tau):
    """
    最不难正样本对相似度（逐实例相似度的软最大值）

    Sim_lh = τ·log Σₙ exp(Simₙ/τ)
    """
    per_instance = per_instance_similarity(features, tau)
    return tau * logsumexp(per_instance / tau)


def adaptive_weight(sim_h, sim_lh):
    """
    调和平均与自适应权重

    参数:
        sim_h: 最难相似度
        sim_lh: 最不难相似度

    返回:
        tuple: (h, alpha)，sim_h < 0 时 alpha 为 0
    """
    denominator = sim_lh + sim_h
    if denominator == 0.0:
        logger.warning(f"调和平均分母为 0 (sim_h={sim_h}, sim_lh={sim_lh})，按极限约定取 alpha=0")
        return 0.0, 0.0
    h = 2.0 * sim_lh * sim_h / denominator
    alpha = h if sim_h >= 0 else 0.0
    return h, alpha


def weighted_similarity(alpha, sim_h, sim_lh):
    """加权正样本相似度 α·sim_h + (1−α)·sim_lh"""
    return alpha * sim_h + (1.0 - alpha) * sim_lh


def intra_class_diff(sim_plus, sim_h, sim_lh, gamma=None):
    """
    类内差异

    参数:
        sim_plus: 加权相似度
        sim_h: 最难相似度
        sim_lh: 最不难相似度
        gamma: 可选的减速权重 cur_epoch/total_epoch

    返回:
        float: 截断到 [0, 1] 的 diff
    """
    spread = sim_lh - sim_h
    if abs(spread) < ZERO_VARIATION:
        diff = 0.0
    else:
        diff = (sim_plus - sim_h) / spread
    if gamma is not None:
        diff = gamma * diff
    return min(max(diff, 0.0), 1.0)


def select_beta(sim_h, sim_lh, diff, k=None):
    """
    采样秩比例 β

    sim_h > 0 且 round(sim_lh/sim_h) == 1 时取 1（最难样本），否则取 diff；
    结果截断到 [0, 1]，给定 K 时下限为 1/K

    参数:
        sim_h: 最难相似度
        sim_lh: 最不难相似度
        diff: 类内差异
        k: 类内样本数

    返回:
        float
    """
    if sim_h > 0 and round_half_away(sim_lh / sim_h) == 1:
        beta = 1.0
    else:
        beta = diff
    beta = min(max(beta, 0.0), 1.0)
    if k is not None:
        beta = max(beta, 1.0 / k)
    return beta


@dataclass(frozen=True)
class ClassAdaptiveStats:
    """
    单个类在一个小批量中的统计量
    """
    class_id: int
    k: int
    sim_h: float
    sim_per_instance: tuple
    sim_lh: float
    h: float
    alpha: float
    sim_plus: float
    diff: float
    beta: float

    def to_row(self):
        """CSV 行: class_id,sim_h,sim_lh,alpha,diff,beta"""
        return [self.class_id, self.sim_h, self.sim_lh, self.alpha, self.diff, self.beta]

    def to_dict(self):
        return asdict(self)


STATS_HEADER = ["class_id", "sim_h", "sim_lh", "alpha", "diff", "beta"]


def compute_class_stats(features, tau, gamma=None, class_id=-1):
    """
    计算一个类的全部统计量

    参数:
        features: (K, d) 单位特征
        tau: 温度
        gamma: 可选的减速权重
        class_id: 类编号，仅用于记录

    返回:
        ClassAdaptiveStats
    """
    features = as_class_features(features)
    k = features.shape[0]
    sim_h = hardest_similarity(features, tau)
    per_instance = per_instance_similarity(features, tau)
    sim_lh = tau * logsumexp(per_instance / tau)
    h, alpha = adaptive_weight(sim_h, sim_lh)
    sim_plus = weighted_similarity(alpha, sim_h, sim_lh)
    diff = intra_class_diff(sim_plus, sim_h, sim_lh, gamma)
    beta = select_beta(sim_h, sim_lh, diff, k)
    return ClassAdaptiveStats(
        class_id=int(class_id),
        k=k,
        sim_h=sim_h,
        sim_per_instance=tuple(float(s) for s in per_instance),
        sim_lh=sim_lh,
        h=h,
        alpha=alpha,
        sim_plus=sim_plus,
        diff=diff,
        beta=beta
    )
