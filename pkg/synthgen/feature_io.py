"""
"AICV" 特征文件读写

格式（小端序）:
    magic "AICV" (4字节) | u32 version=1 | u32 rows | u32 dim | u8 has_labels
    | rows×dim 个 float32 | 可选 rows 个 int64 标签
"""

import os
import csv
import struct

import numpy as np

from numcore import EmbeddingMatrix
from utils import setup_logger, ensure_dir, config_comment

# 创建日志记录器
logger = setup_logger("feature_io")

FEATURE_MAGIC = b"AICV"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIIIB")


class FeatureFormatError(ValueError):
    """特征文件格式错误"""


class BadMagicError(FeatureFormatError):
    """文件魔数不匹配"""


class UnsupportedVersionError(FeatureFormatError):
    """不支持的文件版本"""


class TruncatedPayloadError(FeatureFormatError):
    """数据区长度不足"""


class InvalidDimensionError(FeatureFormatError):
    """维度非法"""


def write_features(path, matrix, ids=None):
    """
    写出特征文件

    参数:
        path: 文件路径
        matrix: EmbeddingMatrix
        ids: 可选的整数标签，长度等于行数
    """
    data = np.asarray(matrix.data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise ValueError("特征矩阵包含 NaN 或 Inf，拒绝写出")
    if data.size and np.max(np.abs(data)) > np.finfo(np.float32).max:
        raise ValueError(f"特征值超出32位浮点范围（最大 {np.finfo(np.float32).max:.6e}），拒绝写出")
    if ids is not None:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (matrix.rows,):
            raise ValueError(f"标签数量 {ids.shape} 与行数 {matrix.rows} 不一致")

    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, matrix.rows, matrix.dim, int(ids is not None)))
        f.write(data.astype("<f4").tobytes())
        if ids is not None:
            f.write(ids.astype("<i8").tobytes())
    logger.info(f"特征文件已写出: {path} ({matrix.rows}×{matrix.dim})")
    return path


def read_features(path):
    """
    读取特征文件

    参数:
        path: 文件路径

    返回:
        tuple: (EmbeddingMatrix 未归一化, 标签数组或 None)
    """
    with open(path, "rb") as f:
        blob = f.read()

    if len(blob) < _HEADER.size:
        if blob[:4] != FEATURE_MAGIC[:len(blob[:4])]:
            raise BadMagicError(f"bad magic: {path}")
        raise TruncatedPayloadError(f"文件头不完整: {path}")
    magic, version, rows, dim, has_labels = _HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(f"bad magic: {path}, 实际为 {magic!r}")
    if version != FEATURE_VERSION:
        raise UnsupportedVersionError(f"不支持的版本 {version}: {path}")
    if dim <= 0:
        raise InvalidDimensionError(f"非法维度 {dim}: {path}")

    payload_size = rows * dim * 4
    label_size = rows * 8 if has_labels else 0
    expected = _HEADER.size + payload_size + label_size
    if len(blob) < expected:
        raise TruncatedPayloadError(f"数据区不完整: 期望 {expected} 字节, 实际 {len(blob)} 字节: {path}")

    offset = _HEADER.size
    data = np.frombuffer(blob, dtype="<f4", count=rows * dim, offset=offset).astype(np.float64)
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype="<i8", count=rows, offset=offset + payload_size).astype(np.int64)

    logger.info(f"特征文件已读取: {path} ({rows}×{dim}, 标签: {'有' if has_labels else '无'})")
    return EmbeddingMatrix(data.reshape(rows, dim)), labels


def write_truth_csv(path, dataset, config=None):
    """
    写出真实身份CSV: index,identity,nuisance_tag
    """
    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "w", encoding="utf-8", newline="") as f:
        if config is not None:
            f.write(config_comment(config) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["index", "identity", "nuisance_tag"])
        for i in range(dataset.rows):
            tag = "" if dataset.nuisance_tag is None else int(dataset.nuisance_tag[i])
            writer.writerow([i, int(dataset.true_ids[i]), tag])
    return path


def read_truth_csv(path):
    """
    读取真实身份CSV

    返回:
        tuple: (identity 数组, nuisance_tag 数组或 None)
    """
    identities, tags = [], []
    with open(path, "r", encoding="utf-8") as f:
        rows = csv.DictReader(line for line in f if not line.startswith("#"))
        for row in rows:
            identities.append(int(row["identity"]))
            tags.append(row.get("nuisance_tag", ""))
    nuisance = None
    if tags and all(t not in ("", None) for t in tags):
        nuisance = np.array([int(t) for t in tags], dtype=np.int64)
    return np.array(identities, dtype=np.int64), nuisance
