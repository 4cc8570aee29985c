"""
玩具编码器 f_θ: 仿射变换 + L2 归一化，可选一层 tanh 隐藏层

前向缓存归一化前的激活，反向传播手工推导，包含归一化的雅可比矩阵
"""

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from numcore import EmbeddingMatrix, ZeroNormError

PARAM_NAMES = ("weight", "bias", "hidden_weight", "hidden_bias")


@dataclass(frozen=True)
class EncoderParams:
    """
    编码器参数（梯度也复用此结构）

    属性:
        weight: (in_dim, out_dim)
        bias: (out_dim,)
        hidden_weight: 可选 (raw_dim, hidden_dim)
        hidden_bias: 可选 (hidden_dim,)
    """
    weight: np.ndarray
    bias: np.ndarray
    hidden_weight: Optional[np.ndarray] = None
    hidden_bias: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.hidden_weight is None) != (self.hidden_bias is None):
            raise ValueError("hidden_weight 与 hidden_bias 必须同时提供")
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.asarray(value, dtype=np.float64))
        for name, value in self.arrays().items():
            if not np.all(np.isfinite(value)):
                raise ValueError(f"参数 {name} 包含 NaN 或 Inf")
        if self.bias.shape != (self.weight.shape[1],):
            raise ValueError(f"bias 形状 {self.bias.shape} 与 weight {self.weight.shape} 不匹配")
        if self.has_hidden:
            if self.hidden_bias.shape != (self.hidden_weight.shape[1],):
                raise ValueError("hidden_bias 形状与 hidden_weight 不匹配")
            if self.hidden_weight.shape[1] != self.weight.shape[0]:
                raise ValueError("隐藏层输出维度与输出层输入维度不一致")

    @property
    def has_hidden(self):
        return self.hidden_weight is not None

    @property
    def raw_dim(self):
        return (self.hidden_weight if self.has_hidden else self.weight).shape[0]

    @property
    def out_dim(self):
        return self.weight.shape[1]

    def arrays(self):
        """按固定顺序返回非空参数字典"""
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    def map(self, fn, *others):
        """逐参数应用 fn(self_array, other_arrays...)，返回同结构的新对象"""
        for other in others:
            check_same_shapes(self, other)
        updated = {
            name: fn(value, *(other.arrays()[name] for other in others))
            for name, value in self.arrays().items()
        }
        return replace(self, **updated)

    def copy(self):
        return self.map(np.copy)


def check_same_shapes(a, b):
    a_arrays, b_arrays = a.arrays(), b.arrays()
    if a_arrays.keys() != b_arrays.keys():
        raise ValueError(f"参数结构不一致: {list(a_arrays)} vs {list(b_arrays)}")
    for name in a_arrays:
        if a_arrays[name].shape != b_arrays[name].shape:
            raise ValueError(f"参数 {name} 形状不一致: {a_arrays[name].shape} vs {b_arrays[name].shape}")


def init_params(raw_dim, out_dim=None, hidden_dim=None, jitter=0.01, seed=0):
    """
    初始化参数: 左上角单位阵（其余为0）+ 小幅高斯扰动，偏置为0

    参数:
        raw_dim: 输入维度
        out_dim: 输出维度，默认等于 raw_dim
        hidden_dim: 隐藏层维度，None 表示单层仿射
        jitter: 扰动标准差
        seed: 随机种子

    返回:
        EncoderParams
    """
    out_dim = out_dim or raw_dim
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    if hidden_dim is None:
        weight = np.eye(raw_dim, out_dim) + jitter * rng.standard_normal((raw_dim, out_dim))
        return EncoderParams(weight=weight, bias=np.zeros(out_dim))

    hidden_weight = np.eye(raw_dim, hidden_dim) + jitter * rng.standard_normal((raw_dim, hidden_dim))
    weight = np.eye(hidden_dim, out_dim) + jitter * rng.standard_normal((hidden_dim, out_dim))
    return EncoderParams(
        weight=weight,
        bias=np.zeros(out_dim),
        hidden_weight=hidden_weight,
        hidden_bias=np.zeros(hidden_dim)
    )


@dataclass(frozen=True)
class ForwardCache:
    """反向传播所需的前向中间量"""
    inputs: np.ndarray
    hidden: Optional[np.ndarray]
    norms: np.ndarray
    outputs: np.ndarray


def forward_with_cache(params, raw):
    """
    前向传播并返回缓存

    参数:
        params: EncoderParams
        raw: 原始特征 EmbeddingMatrix

    返回:
        tuple: (单位化输出 EmbeddingMatrix, ForwardCache)
    """
    if raw.dim != params.raw_dim:
        raise ValueError(f"输入维度 {raw.dim} 与编码器输入维度 {params.raw_dim} 不一致")
    x = raw.data
    hidden = None
    layer_in = x
    if params.has_hidden:
        hidden = np.tanh(x @ params.hidden_weight + params.hidden_bias)
        layer_in = hidden
    y = layer_in @ params.weight + params.bias
    norms = np.sqrt(np.einsum("ij,ij->i", y, y))
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        row = int(zero_rows[0])
        raise ZeroNormError(f"编码器输出第 {row} 行在归一化前为零向量", row=row)
    outputs = y / norms[:, None]
    return EmbeddingMatrix(outputs, normalized=True), ForwardCache(x, hidden, norms, outputs)


def forward(params, raw):
    """前向传播，返回单位化的特征"""
    return forward_with_cache(params, raw)[0]


def backward(params, raw, grad_wrt_embeddings, cache=None):
    """
    反向传播

    参数:
        params: EncoderParams
        raw: 原始特征 EmbeddingMatrix
        grad_wrt_embeddings: (rows, out_dim) 上游梯度
        cache: 前向缓存，None 时重新计算前向

    返回:
        EncoderParams: 各参数的梯度
    """
    if cache is None:
        cache = forward_with_cache(params, raw)[1]
    grad = np.asarray(grad_wrt_embeddings, dtype=np.float64)
    if grad.shape != cache.outputs.shape:
        raise ValueError(f"上游梯度形状 {grad.shape} 与输出形状 {cache.outputs.shape} 不一致")

    # 归一化雅可比: (I - ŷŷᵀ)/‖y‖
    y_hat = cache.outputs
    radial = np.einsum("ij,ij->i", grad, y_hat)
    grad_y = (grad - radial[:, None] * y_hat) / cache.norms[:, None]

    layer_in = cache.hidden if params.has_hidden else cache.inputs
    grad_weight = layer_in.T @ grad_y
    grad_bias = grad_y.sum(axis=0)
    if not params.has_hidden:
        return EncoderParams(weight=grad_weight, bias=grad_bias)

    grad_hidden = (grad_y @ params.weight.T) * (1.0 - cache.hidden ** 2)
    return EncoderParams(
        weight=grad_weight,
        bias=grad_bias,
        hidden_weight=cache.inputs.T @ grad_hidden,
        hidden_bias=grad_hidden.sum(axis=0)
    )
