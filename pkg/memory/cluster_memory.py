"""
簇级记忆字典

centroids 保存每个簇的代表向量 Φ，outlier_bank 保存被接纳为负样本的离群点 𝓘。
Φ 只通过动量写入更新，不接收梯度
"""

import numpy as np

from numcore import NORM_TOLERANCE, EmbeddingMatrix, l2_normalize
from utils import setup_logger

# 创建日志记录器
logger = setup_logger("memory")


class ClusterMemory:
    """
    簇中心 + 离群点记忆
    """
    def __init__(self, centroids, outlier_bank=None, momentum=0.2, temperature=0.05):
        """
        初始化记忆字典

        参数:
            centroids: 单位化的簇中心 EmbeddingMatrix
            outlier_bank: 单位化的离群点 EmbeddingMatrix，None 表示为空
            momentum: 动量 m，取值 [0, 1]
            temperature: 温度 τ > 0
        """
        if not 0.0 <= momentum <= 1.0:
            raise ValueError(f"momentum 必须在 [0, 1] 内: {momentum}")
        if temperature <= 0:
            raise ValueError(f"temperature 必须为正: {temperature}")
        if centroids.rows < 1:
            raise ValueError("记忆字典至少需要一个簇中心")
        if not centroids.normalized:
            raise ValueError("簇中心必须是单位向量")

        self.momentum = momentum
        self.temperature = temperature
        self._centroids = np.array(centroids.data)
        self._outliers = np.zeros((0, centroids.dim))
        if outlier_bank is not None:
            self.set_outlier_bank(outlier_bank)

    @classmethod
    def from_labeling(cls, embeddings, labeling, momentum=0.2, temperature=0.05):
        """
        用每个簇成员特征的均值（再归一化）初始化簇中心

        参数:
            embeddings: 单位化的样本特征
            labeling: PseudoLabeling
            momentum: 动量
            temperature: 温度

        返回:
            ClusterMemory
        """
        if labeling.n_clusters < 1:
            raise ValueError("伪标签中没有任何簇，无法初始化记忆字典")
        if labeling.label.shape[0] != embeddings.rows:
            raise ValueError(f"伪标签长度 {labeling.label.shape[0]} 与样本数 {embeddings.rows} 不一致")

        centroids = np.zeros((labeling.n_clusters, embeddings.dim))
        for k in range(labeling.n_clusters):
            members = np.flatnonzero(labeling.label == k)
            if members.size == 0:
                raise ValueError(f"簇 {k} 没有成员，伪标签不一致")
            centroids[k] = l2_normalize(embeddings.data[members].mean(axis=0))

        logger.info(f"记忆字典初始化完成: {labeling.n_clusters} 个簇中心")
        return cls(EmbeddingMatrix(centroids, normalized=True), momentum=momentum, temperature=temperature)

    @property
    def centroids(self):
        return EmbeddingMatrix(self._centroids, normalized=True)

    @property
    def outlier_bank(self):
        return EmbeddingMatrix(self._outliers, normalized=True)

    @property
    def n_clusters(self):
        return self._centroids.shape[0]

    @property
    def n_outliers(self):
        return self._outliers.shape[0]

    @property
    def dim(self):
        return self._centroids.shape[1]

    def all_vectors(self):
        """簇中心在前、离群点在后的拼接矩阵"""
        return np.vstack([self._centroids, self._outliers])

    def scores(self, q):
        """
        查询向量与簇中心、离群点的内积

        参数:
            q: 单位向量

        返回:
            tuple: (簇得分, 离群点得分)
        """
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"查询维度 {q.shape} 与记忆维度 {self.dim} 不一致")
        return self._centroids @ q, self._outliers @ q

    def momentum_update(self, class_id, selected):
        """
        动量写入: Φ_k ← m·Φ_k + (1−m)·selected，随后重新归一化

        参数:
            class_id: 簇编号
            selected: 单位向量
        """
        if not 0 <= class_id < self.n_clusters:
            raise ValueError(f"无效的簇编号: {class_id}")
        selected = np.asarray(selected, dtype=np.float64)
        if selected.shape != (self.dim,):
            raise ValueError(f"写入向量维度 {selected.shape} 与记忆维度 {self.dim} 不一致")
        mixed = self.momentum * self._centroids[class_id] + (1.0 - self.momentum) * selected
        if np.linalg.norm(mixed) <= NORM_TOLERANCE:
            # 写入向量与簇中心按权重完全抵消时保留原中心
            logger.warning(f"簇 {class_id} 的动量混合结果为零向量，保留原簇中心")
            return
        self._centroids[class_id] = l2_normalize(mixed)

    def set_outlier_bank(self, admitted):
        """
        整体替换离群点记忆（每个 epoch 在 AdaOF 之后调用一次）

        参数:
            admitted: 单位化的 EmbeddingMatrix
        """
        if admitted.dim != self.dim:
            raise ValueError(f"离群点维度 {admitted.dim} 与记忆维度 {self.dim} 不一致")
        if admitted.rows and not admitted.normalized:
            raise ValueError("离群点必须是单位向量")
        self._outliers = np.array(admitted.data)
        logger.info(f"离群点记忆已更新: {self.n_outliers} 个")


def init_memory(embeddings, labeling, m=0.2, tau=0.05):
    """ClusterMemory.from_labeling 的函数形式"""
    return ClusterMemory.from_labeling(embeddings, labeling, momentum=m, temperature=tau)
