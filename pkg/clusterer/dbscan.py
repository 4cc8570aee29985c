"""
余弦距离上的 DBSCAN，生成伪标签与离群点集合

距离矩阵分块并行计算，聚类交给 sklearn 的 DBSCAN（precomputed 距离），结果确定
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import DBSCAN

from utils import setup_logger, write_csv

# 创建日志记录器
logger = setup_logger("clusterer")

OUTLIER = -1
# 距离矩阵按固定行块计算，块划分与线程数无关
DISTANCE_CHUNK = 256


@dataclass(frozen=True)
class PseudoLabeling:
    """
    伪标签

    属性:
        label: 每个样本的簇编号，离群点为 -1
        n_clusters: 簇数量
    """
    label: np.ndarray
    n_clusters: int

    def __post_init__(self):
        label = np.asarray(self.label, dtype=np.int64)
        if label.ndim != 1:
            raise ValueError("label 必须是一维数组")
        if label.size and (label.min() < OUTLIER or label.max() >= self.n_clusters):
            raise ValueError(f"标签超出范围 [-1, {self.n_clusters})")
        present = np.unique(label[label != OUTLIER])
        if present.size != self.n_clusters:
            raise ValueError(f"存在没有成员的簇: 声明 {self.n_clusters} 个, 实际 {present.size} 个")
        label.setflags(write=False)
        object.__setattr__(self, "label", label)

    @property
    def outlier_indices(self):
        return np.flatnonzero(self.label == OUTLIER)

    @property
    def clustered_indices(self):
        return np.flatnonzero(self.label != OUTLIER)

    @property
    def n_outliers(self):
        return int(np.sum(self.label == OUTLIER))

    def members(self, cluster_id):
        """返回某簇成员索引（升序）"""
        if not 0 <= cluster_id < self.n_clusters:
            raise ValueError(f"无效的簇编号: {cluster_id}")
        return np.flatnonzero(self.label == cluster_id)

    def cluster_sizes(self):
        return np.bincount(self.label[self.label != OUTLIER], minlength=self.n_clusters)

    def to_csv(self, path, config=None):
        """写出 index,label 形式的CSV"""
        rows = ((i, int(v)) for i, v in enumerate(self.label))
        return write_csv(path, ["index", "label"], rows, config=config)


def _distance_chunk(data, start):
    block = data[start:start + DISTANCE_CHUNK]
    return 1.0 - block @ data.T


def cosine_distances(data, threads=1):
    """
    两两余弦距离 1 − ⟨a,b⟩

    参数:
        data: (n, d) 单位行向量
        threads: 线程数

    返回:
        np.ndarray: (n, n)
    """
    starts = range(0, data.shape[0], DISTANCE_CHUNK)
    if threads <= 1:
        blocks = [_distance_chunk(data, s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            blocks = list(executor.map(lambda s: _distance_chunk(data, s), starts))
    return np.vstack(blocks)


def dbscan(embeddings, eps, min_pts=4, threads=1):
    """
    DBSCAN 聚类

    参数:
        embeddings: 已归一化的 EmbeddingMatrix
        eps: 邻域半径（余弦距离）
        min_pts: 核心点最少邻居数（含自身）
        threads: 距离计算线程数

    返回:
        PseudoLabeling
    """
    if embeddings.rows == 0:
        raise ValueError("聚类输入不能为空")
    if not embeddings.normalized:
        raise ValueError("聚类输入必须是已归一化的特征")
    if eps <= 0:
        raise ValueError(f"eps 必须为正: {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts 必须至少为 1: {min_pts}")

    distances = cosine_distances(embeddings.data, threads)
    # 浮点误差可能产生微小负距离，precomputed 模式要求非负
    np.maximum(distances, 0.0, out=distances)
    # sklearn 按索引升序扫描，边界点归属最先扩展到它的簇，邻域判定为 <= eps 且含自身
    label = DBSCAN(eps=eps, min_samples=min_pts, metric="precomputed").fit(distances).labels_
    label = label.astype(np.int64)
    n_clusters = int(label.max()) + 1

    labeling = PseudoLabeling(label, n_clusters)
    logger.info(f"DBSCAN 完成: {embeddings.rows} 个样本, {n_clusters} 个簇, {labeling.n_outliers} 个离群点 (eps={eps}, min_pts={min_pts})")
    return labeling
