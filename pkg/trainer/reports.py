"""
训练报告模型与产物写出
"""

import os
from typing import List, Optional

from pydantic import BaseModel, Field

from adaptive import STATS_HEADER
from encoder import save_checkpoint
from utils import setup_logger, write_csv, write_json, write_jsonl
from trainer.config import dump_run_config

# 创建日志记录器
logger = setup_logger("reports")

STATS_LOG_HEADER = ["epoch", "iteration"] + STATS_HEADER


class EpochReport(BaseModel):
    """单轮训练报告"""
    epoch: int = Field(..., description="轮次（从0开始）")
    n_clusters: int
    n_outliers: int
    n_admitted: int
    admission_diff_global: float = Field(..., description="本轮离群点接纳所用的 diff_global（来自上一轮）")
    diff_global: float = Field(..., description="本轮统计得到的 diff_global，供下一轮使用")
    iterations: int
    hybrid: float
    mse: float
    total: float
    mAP: Optional[float] = None
    rank1: Optional[float] = None
    rank5: Optional[float] = None
    rank10: Optional[float] = None
    wall_clock: float = Field(0.0, exclude=True, description="耗时（秒），只写日志不写产物")


class TrainingReport(BaseModel):
    """完整训练报告"""
    config: dict
    baseline: Optional[dict] = None
    final: Optional[dict] = None
    epochs: List[EpochReport] = Field(default_factory=list)
    stats_rows: list = Field(default_factory=list, exclude=True)


def write_run_artifacts(out_dir, report, params, config):
    """
    写出一次训练的全部产物

    参数:
        out_dir: 输出目录
        report: TrainingReport
        params: 最终编码器参数
        config: TrainConfig

    返回:
        dict: 产物名称到路径
    """
    record = config.to_record()
    paths = {
        "epochs": os.path.join(out_dir, "epochs.jsonl"),
        "metrics": os.path.join(out_dir, "metrics.json"),
        "stats": os.path.join(out_dir, "adaptive_stats.csv"),
        "config": os.path.join(out_dir, "run_config.txt"),
        "checkpoint": os.path.join(out_dir, "encoder.aicp")
    }
    lines = [{"type": "config", "seed": config.seed, "config": record}]
    lines.extend({"type": "epoch", **epoch.model_dump()} for epoch in report.epochs)
    write_jsonl(paths["epochs"], lines)
    write_json(paths["metrics"], {
        "seed": config.seed,
        "config": record,
        "epochs_run": len(report.epochs),
        "baseline": report.baseline,
        "final": report.final
    })
    write_csv(paths["stats"], STATS_LOG_HEADER, report.stats_rows, config=record)
    dump_run_config(config, paths["config"])
    save_checkpoint(paths["checkpoint"], params)
    logger.info(f"训练产物已写出: {out_dir}")
    return paths
