"""
基础线性代数与数值稳定的 log-sum-exp 原语

所有运算均使用64位浮点数，求和顺序固定，结果与线程数无关
"""

import math
from dataclasses import dataclass

import numpy as np

# 单位范数校验容差
NORM_TOLERANCE = 1e-9


class ZeroNormError(ValueError):
    """零范数向量无法归一化"""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


def as_vector(values):
    """
    转换为一维64位浮点向量并校验

    参数:
        values: 实数序列

    返回:
        np.ndarray: 一维向量
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"向量必须是非空一维数组，实际形状: {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("向量包含 NaN 或 Inf")
    return v


def l2_normalize(v):
    """
    L2 归一化

    参数:
        v: 向量

    返回:
        np.ndarray: 单位向量，方向不变
    """
    v = as_vector(v)
    norm = math.sqrt(float(np.dot(v, v)))
    if norm == 0.0:
        raise ZeroNormError("零范数向量无法归一化")
    return v / norm


def l2_normalize_rows(data):
    """
    按行 L2 归一化，零范数行抛出带行号的错误
    """
    data = np.asarray(data, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", data, data))
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        row = int(zero_rows[0])
        raise ZeroNormError(f"第 {row} 行为零向量，无法归一化", row=row)
    return data / norms[:, None]


def cosine_sim(a, b):
    """
    两个单位向量的余弦相似度（即内积）

    参数:
        a: 单位向量
        b: 单位向量

    返回:
        float: 相似度
    """
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise ValueError(f"维度不一致: {a.shape[0]} vs {b.shape[0]}")
    return float(np.dot(a, b))


def logsumexp(xs):
    """
    数值稳定的 log(sum(exp(x)))

    以最大值平移，最大项单独取出后用 log1p 累加其余项，
    单元素输入精确返回该元素

    参数:
        xs: 非空有限实数序列

    返回:
        float
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    if xs.size == 0:
        raise ValueError("logsumexp 的输入不能为空")
    if not np.all(np.isfinite(xs)):
        raise ValueError("logsumexp 的输入包含 NaN 或 Inf")
    top = int(np.argmax(xs))
    m = xs[top]
    rest = np.exp(np.delete(xs, top) - m)
    return float(m + math.log1p(float(np.sum(rest))))


def logsumexp_rows(matrix):
    """
    按行计算 logsumexp

    返回:
        np.ndarray: 每行一个值
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] == 0:
        raise ValueError(f"logsumexp_rows 需要非空二维输入，实际形状: {matrix.shape}")
    return np.array([logsumexp(row) for row in matrix])


def round_half_away(x):
    """
    四舍五入（0.5 远离零方向），区别于 Python 内置的银行家舍入
    """
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """
    行优先的特征矩阵

    属性:
        data: (rows, dim) 的64位浮点数组
        normalized: 为 True 时每行都是单位向量
    """
    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True, order="C")
        if data.ndim != 2:
            raise ValueError(f"特征矩阵必须是二维数组，实际维数: {data.ndim}")
        if data.shape[1] < 1:
            raise ValueError("特征维度必须为正")
        if not np.all(np.isfinite(data)):
            raise ValueError("特征矩阵包含 NaN 或 Inf")
        if self.normalized and data.shape[0]:
            norms = np.sqrt(np.einsum("ij,ij->i", data, data))
            bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
            if bad.size:
                raise ValueError(f"第 {int(bad[0])} 行不是单位向量，范数: {norms[bad[0]]}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def empty(cls, dim, normalized=True):
        return cls(np.zeros((0, dim)), normalized=normalized)

    @classmethod
    def from_normalized_rows(cls, data):
        """对原始行做 L2 归一化后构造"""
        return cls(l2_normalize_rows(data), normalized=True)

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def normalize(self):
        return EmbeddingMatrix.from_normalized_rows(self.data)

    def row(self, index):
        return self.data[index]

    def subset(self, indices):
        """按索引取子矩阵，保留归一化标记"""
        indices = np.asarray(indices, dtype=np.int64)
        return EmbeddingMatrix(self.data[indices].reshape(len(indices), self.dim), normalized=self.normalized)


def similarity_matrix(a, b):
    """
    两组单位向量之间的内积矩阵
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"维度不一致: {a.shape[1]} vs {b.shape[1]}")
    return a @ b.T
