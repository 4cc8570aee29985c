"""
PK 采样：随机选 P 个伪身份，每个身份取 K 个样本
"""

import numpy as np


def pk_sample(labeling, p, k, rng):
    """
    生成一个小批量的样本索引

    参数:
        labeling: PseudoLabeling
        p: 伪身份数
        k: 每个身份的样本数（成员不足 K 时有放回采样）
        rng: numpy Generator

    返回:
        np.ndarray: 长度 P·K 的索引，按身份分组连续排列；离群点不会被采样
    """
    if p < 1 or k < 1:
        raise ValueError(f"P 与 K 必须为正: P={p}, K={k}")
    if labeling.n_clusters < p:
        raise ValueError(f"簇数量 {labeling.n_clusters} 少于 P={p}")

    chosen = rng.choice(labeling.n_clusters, size=p, replace=False)
    batch = []
    for cluster_id in chosen:
        members = labeling.members(int(cluster_id))
        picks = rng.choice(members, size=k, replace=len(members) < k)
        batch.extend(int(i) for i in picks)
    return np.array(batch, dtype=np.int64)
