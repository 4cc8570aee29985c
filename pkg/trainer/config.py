"""
训练配置

TrainConfig 记录一次运行的全部超参数；运行配置文件为 key = value 文本，
每行一个字段，# 开头为注释
"""

import os
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from utils import ensure_dir


class UpdateStrategy(str, Enum):
    """记忆更新策略"""
    CM = "cm"
    HARDEST = "hardest"
    LINEAR = "linear"
    ADAPTIVE = "adaptive"


class OutlierStrategy(str, Enum):
    """离群点策略"""
    NONE = "none"
    ALL = "all"
    ADAPTIVE = "adaptive"


class TrainConfig(BaseModel):
    """训练配置"""
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    tau: float = Field(0.05, gt=0, description="对比损失与类内统计的温度")
    momentum_m: float = Field(0.2, ge=0, le=1, description="记忆动量")
    ema_rate: float = Field(0.999, ge=0, lt=1, description="教师EMA衰减率")
    lambda_m: float = Field(1.0, ge=0, description="蒸馏损失权重")
    eps: float = Field(0.5, gt=0, description="DBSCAN 邻域半径")
    min_pts: int = Field(4, ge=1, description="DBSCAN 核心点最少邻居数")
    identities_per_batch: int = Field(4, ge=1, description="每批伪身份数 P")
    instances_per_identity: int = Field(4, ge=1, description="每个伪身份的样本数 K")
    epochs: int = Field(50, ge=0, description="训练轮数")
    iters_per_epoch: Optional[int] = Field(None, ge=1, description="每轮迭代数，默认按聚类样本数推算")
    lr: float = Field(3.5e-4, ge=0, description="学习率")
    weight_decay: float = Field(5e-4, ge=0, description="解耦权重衰减")
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    f_min: float = Field(0.1, ge=0, le=1, description="离群点最小接纳比例")
    gamma_enabled: bool = Field(False, description="是否启用 cur_epoch/total_epoch 减速权重")
    update_strategy: UpdateStrategy = UpdateStrategy.ADAPTIVE
    outlier_strategy: OutlierStrategy = OutlierStrategy.ADAPTIVE
    out_dim: Optional[int] = Field(None, ge=1, description="编码器输出维度，默认等于输入维度")
    hidden_dim: Optional[int] = Field(None, ge=1, description="tanh 隐藏层维度，None 表示单层")
    init_jitter: float = Field(0.01, ge=0, description="初始化扰动标准差")
    eval_interval: int = Field(5, ge=1, description="评估间隔（轮）")
    holdout_fraction: float = Field(0.2, ge=0, lt=1, description="留出评估的身份比例")
    exclude_same_camera: bool = Field(False, description="评估时排除同身份同摄像头样本")
    seed: int = Field(7, ge=0, lt=2 ** 64)
    threads: int = Field(1, ge=1, description="线程数，不影响结果")

    def to_record(self):
        """可JSON序列化的配置字典"""
        return self.model_dump(mode="json")


def _parse_value(raw):
    value = raw.strip()
    if value.lower() in ("", "none", "null"):
        return None
    return value


def load_run_config(path, **overrides):
    """
    读取 key = value 运行配置文件

    参数:
        path: 文件路径
        **overrides: 覆盖文件中的字段（值为 None 的项忽略）

    返回:
        TrainConfig
    """
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno} 缺少 '=': {line}")
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in TrainConfig.model_fields:
                raise ValueError(f"{path}:{lineno} 未知配置项: {key}")
            if key in values:
                raise ValueError(f"{path}:{lineno} 重复的配置项: {key}")
            values[key] = _parse_value(raw)
    values = {k: v for k, v in values.items() if v is not None}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    return str(value)


def dump_run_config(config, path):
    """
    按字段顺序写出 key = value 运行配置
    """
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8") as f:
        for name in TrainConfig.model_fields:
            f.write(f"{name} = {_format_value(getattr(config, name))}\n")
    return path
