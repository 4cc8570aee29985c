"""
检索评估: mAP 与 CMC Rank-k

每个查询按余弦相似度降序排列图库，相似度相同时按图库索引升序；不做重排序
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from numcore import EmbeddingMatrix


@dataclass(frozen=True)
class RetrievalSplit:
    """
    查询集与图库

    属性:
        query, gallery: 单位化特征
        query_ids, gallery_ids: 身份标签
        query_tags, gallery_tags: 可选的摄像头标记，用于同摄像头排除
    """
    query: EmbeddingMatrix
    query_ids: np.ndarray
    gallery: EmbeddingMatrix
    gallery_ids: np.ndarray
    query_tags: Optional[np.ndarray] = None
    gallery_tags: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.query.normalized and self.gallery.normalized):
            raise ValueError("查询集与图库必须是已归一化的特征")
        if self.query.dim != self.gallery.dim:
            raise ValueError(f"查询维度 {self.query.dim} 与图库维度 {self.gallery.dim} 不一致")
        for name, matrix in (("query_ids", self.query), ("gallery_ids", self.gallery)):
            ids = np.asarray(getattr(self, name), dtype=np.int64)
            if ids.shape != (matrix.rows,):
                raise ValueError(f"{name} 长度与特征行数不一致")
            object.__setattr__(self, name, ids)


def build_split(embeddings, ids, tags=None):
    """
    每个身份的第一个样本（索引最小）作为查询，其余进入图库

    参数:
        embeddings: 单位化特征
        ids: 身份标签
        tags: 可选摄像头标记

    返回:
        RetrievalSplit
    """
    ids = np.asarray(ids, dtype=np.int64)
    _, first, counts = np.unique(ids, return_index=True, return_counts=True)
    is_query = np.zeros(len(ids), dtype=bool)
    # 只有一个样本的身份不作为查询，留在图库中充当干扰项
    is_query[first[counts > 1]] = True
    if not is_query.any():
        raise ValueError("没有任何身份拥有至少两个样本，无法构建检索划分")
    query_idx, gallery_idx = np.flatnonzero(is_query), np.flatnonzero(~is_query)
    tags = None if tags is None else np.asarray(tags, dtype=np.int64)
    return RetrievalSplit(
        query=embeddings.subset(query_idx),
        query_ids=ids[query_idx],
        gallery=embeddings.subset(gallery_idx),
        gallery_ids=ids[gallery_idx],
        query_tags=None if tags is None else tags[query_idx],
        gallery_tags=None if tags is None else tags[gallery_idx]
    )


def _ranked_matches(split, exclude_same_camera=False):
    """
    逐查询生成排序后的匹配布尔序列
    """
    if exclude_same_camera and (split.query_tags is None or split.gallery_tags is None):
        raise ValueError("同摄像头排除需要查询集与图库的摄像头标记")
    sims = split.query.data @ split.gallery.data.T
    positions = np.arange(split.gallery.rows)
    for i in range(split.query.rows):
        order = np.lexsort((positions, -sims[i]))
        matches = split.gallery_ids[order] == split.query_ids[i]
        if exclude_same_camera:
            keep = ~(matches & (split.gallery_tags[order] == split.query_tags[i]))
            matches = matches[keep]
        if not matches.any():
            raise ValueError(f"查询 {i} (身份 {split.query_ids[i]}) 在图库中没有匹配")
        yield matches


def average_precision(matches):
    """单个查询的 AP：各相关位置处 precision 的平均"""
    hits = np.flatnonzero(matches)
    precision_at_hits = np.arange(1, len(hits) + 1) / (hits + 1)
    return float(np.mean(precision_at_hits))


def mean_ap(split, exclude_same_camera=False):
    """
    mAP

    参数:
        split: RetrievalSplit
        exclude_same_camera: 是否排除同身份同摄像头的图库样本

    返回:
        float
    """
    aps = [average_precision(m) for m in _ranked_matches(split, exclude_same_camera)]
    return float(np.mean(aps))


def cmc(split, ks=(1, 5, 10), exclude_same_camera=False):
    """
    CMC: 首个正确匹配出现在前 k 名内的查询比例

    返回:
        list: 与 ks 对应的准确率
    """
    first_hits = np.array([int(np.argmax(m)) for m in _ranked_matches(split, exclude_same_camera)])
    return [float(np.mean(first_hits < k)) for k in ks]


def evaluate(split, ks=(1, 5, 10), exclude_same_camera=False):
    """
    汇总检索指标

    返回:
        dict: {"mAP": ..., "rank1": ..., ...}
    """
    metrics = {"mAP": mean_ap(split, exclude_same_camera)}
    for k, value in zip(ks, cmc(split, ks, exclude_same_camera)):
        metrics[f"rank{k}"] = value
    return metrics
