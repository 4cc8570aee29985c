"""
"AICP" 参数检查点文件

格式（小端序）:
    magic "AICP" | u32 version=1 | u32 数组个数
    | 每个数组: u8 名称长度, 名称(ASCII), u32 ndim, ndim 个 u32 维度
    | 按相同顺序排列的 float64 数据
"""

import os
import struct

import numpy as np

from encoder.model import EncoderParams, PARAM_NAMES
from synthgen.feature_io import (
    BadMagicError,
    UnsupportedVersionError,
    TruncatedPayloadError,
    InvalidDimensionError
)
from utils import setup_logger, ensure_dir

# 创建日志记录器
logger = setup_logger("checkpoint")

CHECKPOINT_MAGIC = b"AICP"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, params):
    """
    保存编码器参数

    参数:
        path: 文件路径
        params: EncoderParams
    """
    arrays = params.arrays()
    header = [struct.pack("<4sII", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(arrays))]
    for name, value in arrays.items():
        encoded = name.encode("ascii")
        header.append(struct.pack("<B", len(encoded)) + encoded)
        header.append(struct.pack(f"<I{value.ndim}I", value.ndim, *value.shape))

    ensure_dir(os.path.dirname(os.path.abspath(path)))
    with open(path, "wb") as f:
        f.write(b"".join(header))
        for value in arrays.values():
            f.write(np.ascontiguousarray(value, dtype="<f8").tobytes())
    logger.info(f"检查点已保存: {path}")
    return path


def _take(blob, offset, size, path):
    if offset + size > len(blob):
        raise TruncatedPayloadError(f"检查点文件不完整: {path}")
    return blob[offset:offset + size], offset + size


def load_checkpoint(path):
    """
    读取编码器参数

    返回:
        EncoderParams
    """
    with open(path, "rb") as f:
        blob = f.read()

    if blob[:4] != CHECKPOINT_MAGIC:
        raise BadMagicError(f"bad magic: {path}")
    chunk, offset = _take(blob, 0, 12, path)
    _, version, count = struct.unpack("<4sII", chunk)
    if version != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(f"不支持的检查点版本 {version}: {path}")

    shapes = []
    for _ in range(count):
        chunk, offset = _take(blob, offset, 1, path)
        chunk, offset = _take(blob, offset, chunk[0], path)
        name = chunk.decode("ascii")
        if name not in PARAM_NAMES:
            raise InvalidDimensionError(f"未知参数名 {name}: {path}")
        chunk, offset = _take(blob, offset, 4, path)
        ndim = struct.unpack("<I", chunk)[0]
        chunk, offset = _take(blob, offset, 4 * ndim, path)
        shape = struct.unpack(f"<{ndim}I", chunk)
        if ndim == 0 or any(d <= 0 for d in shape):
            raise InvalidDimensionError(f"参数 {name} 维度非法 {shape}: {path}")
        shapes.append((name, shape))

    arrays = {}
    for name, shape in shapes:
        size = int(np.prod(shape)) * 8
        chunk, offset = _take(blob, offset, size, path)
        arrays[name] = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(shape)

    logger.info(f"检查点已加载: {path}")
    return EncoderParams(**arrays)
