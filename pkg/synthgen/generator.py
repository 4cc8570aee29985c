"""
合成身份特征数据生成

每个身份在 identity_dim 维单位球面上有一个中心，样本 = 中心 + 高斯噪声（均方根范数 noise_scale），
剩余维度叠加与 nuisance_tag（模拟摄像头）相关的固定偏置（逐维标准差 nuisance_scale）
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from numcore import EmbeddingMatrix, l2_normalize
from utils import setup_logger

# 创建日志记录器
logger = setup_logger("synthgen")


class SynthSpec(BaseModel):
    """合成数据规格"""
    n_identities: int = Field(50, ge=0, description="身份数")
    samples_per_identity: int = Field(20, ge=0, description="每个身份的样本数")
    raw_dim: int = Field(64, ge=1, description="原始特征维度")
    identity_dim: int = Field(32, ge=1, description="身份子空间维度")
    nuisance_scale: float = Field(0.5, ge=0.0, allow_inf_nan=False, description="摄像头偏置逐维标准差")
    noise_scale: float = Field(0.1, ge=0.0, allow_inf_nan=False, description="身份内噪声的均方根范数")
    n_nuisance_tags: int = Field(6, ge=1, description="模拟摄像头数量")
    seed: int = Field(7, ge=0, lt=2 ** 64, description="随机种子")

    @model_validator(mode="after")
    def _check_dims(self):
        if self.identity_dim > self.raw_dim:
            raise ValueError(f"identity_dim ({self.identity_dim}) 不能大于 raw_dim ({self.raw_dim})")
        return self


@dataclass(frozen=True)
class RawDataset:
    """
    原始（未归一化）特征数据集

    属性:
        features: 原始特征矩阵
        true_ids: 每个样本的真实身份，外部特征文件无标签时为 None
        nuisance_tag: 每个样本的摄像头标记，未知时为 None
    """
    features: EmbeddingMatrix
    true_ids: Optional[np.ndarray] = None
    nuisance_tag: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("true_ids", "nuisance_tag"):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.asarray(values, dtype=np.int64)
            if values.shape != (self.features.rows,):
                raise ValueError(f"{name} 长度 {values.shape} 与样本数 {self.features.rows} 不一致")
            object.__setattr__(self, name, values)

    @property
    def rows(self):
        return self.features.rows

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return RawDataset(
            features=self.features.subset(indices),
            true_ids=None if self.true_ids is None else self.true_ids[indices],
            nuisance_tag=None if self.nuisance_tag is None else self.nuisance_tag[indices]
        )


def _stream(seed_sequence):
    # Philox 为计数器型生成器，跨平台输出一致
    return np.random.Generator(np.random.Philox(seed_sequence))


def generate(spec):
    """
    按规格生成合成数据集

    参数:
        spec: SynthSpec

    返回:
        RawDataset: 样本按身份连续排列
    """
    total = spec.n_identities * spec.samples_per_identity
    if total == 0:
        raise ValueError("n_identities × samples_per_identity 为 0，无法生成数据")

    root = np.random.SeedSequence(spec.seed)
    nuisance_seq, identity_root = root.spawn(2)
    identity_seqs = identity_root.spawn(spec.n_identities)

    nuisance_dim = spec.raw_dim - spec.identity_dim
    # 偏置逐维标准差为 nuisance_scale
    offsets = spec.nuisance_scale * _stream(nuisance_seq).standard_normal((spec.n_nuisance_tags, nuisance_dim))
    # 身份噪声的均方根范数为 noise_scale（相对单位中心）
    noise_std = spec.noise_scale / np.sqrt(spec.identity_dim)

    features = np.zeros((total, spec.raw_dim))
    true_ids = np.zeros(total, dtype=np.int64)
    tags = np.zeros(total, dtype=np.int64)
    for identity, seq in enumerate(identity_seqs):
        rng = _stream(seq)
        center = l2_normalize(rng.standard_normal(spec.identity_dim))
        noise = rng.standard_normal((spec.samples_per_identity, spec.identity_dim))
        sample_tags = rng.integers(0, spec.n_nuisance_tags, size=spec.samples_per_identity)

        rows = slice(identity * spec.samples_per_identity, (identity + 1) * spec.samples_per_identity)
        features[rows, :spec.identity_dim] = center + noise_std * noise
        features[rows, spec.identity_dim:] = offsets[sample_tags]
        true_ids[rows] = identity
        tags[rows] = sample_tags

    logger.info(f"生成合成数据: {spec.n_identities} 个身份 × {spec.samples_per_identity} 个样本, 维度 {spec.raw_dim}")
    return RawDataset(EmbeddingMatrix(features), true_ids, tags)


def split_identities(dataset, holdout_fraction, seed):
    """
    按身份划分训练集与评估集，评估身份不参与训练

    参数:
        dataset: 带 true_ids 的 RawDataset
        holdout_fraction: 留出身份比例，0 表示不留出
        seed: 随机种子

    返回:
        tuple: (训练集 RawDataset, 评估集 RawDataset 或 None)
    """
    if dataset.true_ids is None:
        raise ValueError("数据集没有真实身份标签，无法按身份划分")
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction 必须在 [0, 1) 内: {holdout_fraction}")

    identities = np.unique(dataset.true_ids)
    n_holdout = int(round(holdout_fraction * len(identities)))
    if n_holdout == 0:
        return dataset, None

    rng = _stream(np.random.SeedSequence(seed))
    held = np.sort(rng.choice(identities, size=n_holdout, replace=False))
    mask = np.isin(dataset.true_ids, held)
    logger.info(f"留出 {n_holdout}/{len(identities)} 个身份用于评估")
    return dataset.subset(np.flatnonzero(~mask)), dataset.subset(np.flatnonzero(mask))
