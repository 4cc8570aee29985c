"""
HybridNCE 对比损失：分母同时包含所有簇中心与被接纳的离群点
"""

import numpy as np

from numcore import logsumexp


def hybrid_nce(q, memory, positive_id):
    """
    计算单个查询的 HybridNCE 损失及其对查询向量的梯度

    参数:
        q: 单位查询向量
        memory: ClusterMemory
        positive_id: 正样本簇编号

    返回:
        tuple: (loss, grad_q)
    """
    if memory.n_clusters == 0:
        raise ValueError("记忆字典中没有簇中心")
    if not 0 <= positive_id < memory.n_clusters:
        raise ValueError(f"无效的正样本簇编号: {positive_id}")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (memory.dim,):
        raise ValueError(f"查询维度 {q.shape} 与记忆维度 {memory.dim} 不一致")

    vectors = memory.all_vectors()
    tau = memory.temperature
    logits = vectors @ q / tau
    lse = logsumexp(logits)
    loss = lse - logits[positive_id]
    probs = np.exp(logits - lse)
    grad_q = (probs @ vectors - vectors[positive_id]) / tau
    return float(loss), grad_q
