"""
带解耦权重衰减的 Adam 优化器
"""

from dataclasses import dataclass, field, replace
from typing import Dict

import numpy as np


@dataclass(frozen=True)
class AdamState:
    """
    Adam 优化器状态

    属性:
        lr: 学习率
        beta1, beta2: 一阶/二阶矩衰减率
        eps: 数值稳定项
        weight_decay: 解耦权重衰减系数
        step: 已执行步数
        first_moment, second_moment: 按参数名存放的矩估计
    """
    lr: float = 3.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 5e-4
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params, grads, state):
    """
    执行一步 Adam 更新

    参数:
        params: EncoderParams
        grads: 同结构的梯度
        state: AdamState

    返回:
        tuple: (更新后的 EncoderParams, 新的 AdamState)
    """
    if state.step < 0:
        raise ValueError(f"step 不能为负: {state.step}")
    grad_arrays = grads.arrays()
    for name, value in grad_arrays.items():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"梯度 {name} 包含 NaN 或 Inf")

    step = state.step + 1
    first, second, updated = {}, {}, {}
    for name, value in params.arrays().items():
        if grad_arrays[name].shape != value.shape:
            raise ValueError(f"梯度 {name} 形状 {grad_arrays[name].shape} 与参数 {value.shape} 不一致")
        g = grad_arrays[name]
        m = state.beta1 * state.first_moment.get(name, np.zeros_like(value)) + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moment.get(name, np.zeros_like(value)) + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** step)
        v_hat = v / (1.0 - state.beta2 ** step)
        updated[name] = value - state.lr * (m_hat / (np.sqrt(v_hat) + state.eps) + state.weight_decay * value)
        first[name], second[name] = m, v

    new_params = replace(params, **updated)
    return new_params, replace(state, step=step, first_moment=first, second_moment=second)
