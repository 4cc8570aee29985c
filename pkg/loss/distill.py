"""
概率蒸馏与总损失

学生与教师在簇中心上的类别概率分布做平方L2匹配，教师分布视为常量
"""

from dataclasses import dataclass

import numpy as np

from numcore import EmbeddingMatrix, logsumexp


def _as_centroid_array(centroids):
    if isinstance(centroids, EmbeddingMatrix):
        centroids = centroids.data
    return np.asarray(centroids, dtype=np.float64)


def class_prob(q, centroids, tau):
    """
    查询在簇中心上的 softmax 概率（不含离群点）

    参数:
        q: 单位向量
        centroids: (n_c, d) 数组或 EmbeddingMatrix
        tau: 温度

    返回:
        np.ndarray: 概率向量
    """
    centroids = _as_centroid_array(centroids)
    if centroids.ndim != 2 or centroids.shape[0] == 0:
        raise ValueError("簇中心集合不能为空")
    if tau <= 0:
        raise ValueError(f"温度 τ 必须为正: {tau}")
    logits = centroids @ np.asarray(q, dtype=np.float64) / tau
    return np.exp(logits - logsumexp(logits))


def class_prob_backward(q, centroids, tau, grad_prob):
    """
    把对概率的梯度传回查询向量: ∂L/∂q = Cᵀ (p ⊙ (g − ⟨p, g⟩)) / τ
    """
    centroids = _as_centroid_array(centroids)
    probs = class_prob(q, centroids, tau)
    grad_prob = np.asarray(grad_prob, dtype=np.float64)
    grad_logits = probs * (grad_prob - np.dot(probs, grad_prob))
    return centroids.T @ grad_logits / tau


def mse_distill(p_s, p_t):
    """
    平方L2蒸馏损失（求和，不取平均）

    参数:
        p_s: 学生概率
        p_t: 教师概率（常量）

    返回:
        tuple: (loss, 对 p_s 的梯度)
    """
    p_s = np.asarray(p_s, dtype=np.float64)
    p_t = np.asarray(p_t, dtype=np.float64)
    if p_s.shape != p_t.shape:
        raise ValueError(f"概率向量长度不一致: {p_s.shape} vs {p_t.shape}")
    delta = p_s - p_t
    return float(np.dot(delta, delta)), 2.0 * delta


@dataclass(frozen=True)
class LossBreakdown:
    """各项损失"""
    hybrid: float
    mse: float
    total: float
    lambda_m: float


def total(hybrid, mse, lambda_m=1.0):
    """总损失 hybrid + λ_m·mse"""
    return LossBreakdown(hybrid=hybrid, mse=mse, total=hybrid + lambda_m * mse, lambda_m=lambda_m)


def batch_mean(breakdowns):
    """
    按固定顺序对逐样本损失求平均
    """
    if not breakdowns:
        raise ValueError("损失列表为空")
    n = len(breakdowns)
    lambda_m = breakdowns[0].lambda_m
    hybrid = sum(b.hybrid for b in breakdowns) / n
    mse = sum(b.mse for b in breakdowns) / n
    return total(hybrid, mse, lambda_m)
