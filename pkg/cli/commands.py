"""
命令行入口: generate | train | eval | ablate | dump-stats

退出码: 0 成功，2 用法错误（argparse），1 运行时错误
"""

import os
import argparse
import json

import numpy as np
from rich.console import Console
from rich.table import Table

from adaptive import STATS_HEADER, compute_class_stats
from clusterer import dbscan
from encoder import forward, load_checkpoint
from evalkit import build_split, evaluate, ari, nmi
from memory import ClusterMemory
from synthgen import (
    SynthSpec,
    RawDataset,
    generate,
    read_features,
    write_features,
    read_truth_csv,
    write_truth_csv
)
from trainer import (
    TrainConfig,
    UpdateStrategy,
    OutlierStrategy,
    load_run_config,
    run_training,
    write_run_artifacts
)
from utils import setup_logger, load_config, write_csv, write_json

# 创建日志记录器
logger = setup_logger("cli")

console = Console()

# 消融实验的六种组合（记忆更新策略, 离群点策略）
ABLATION_ROWS = [
    (UpdateStrategy.CM, OutlierStrategy.NONE),
    (UpdateStrategy.HARDEST, OutlierStrategy.NONE),
    (UpdateStrategy.LINEAR, OutlierStrategy.NONE),
    (UpdateStrategy.ADAPTIVE, OutlierStrategy.NONE),
    (UpdateStrategy.ADAPTIVE, OutlierStrategy.ALL),
    (UpdateStrategy.ADAPTIVE, OutlierStrategy.ADAPTIVE),
]


# 与 TrainConfig 同名的命令行覆盖项
CONFIG_FLAGS = (
    "tau",
    "momentum_m",
    "ema_rate",
    "lambda_m",
    "f_min",
    "weight_decay",
    "beta1",
    "beta2",
    "adam_eps",
    "out_dim",
    "hidden_dim",
    "init_jitter",
    "holdout_fraction",
    "exclude_same_camera",
)

# 默认合成数据（偏置逐维 0.5、噪声范数 0.1）的标定 eps：同身份同摄像头的余弦距离
# 在训练全程不超过约 0.017，同摄像头最近的不同身份约 0.04 起
SYNTHETIC_EPS = 0.02


def _add_synth_args(parser):
    group = parser.add_argument_group("合成数据")
    group.add_argument("--ids", type=int, default=50, help="身份数")
    group.add_argument("--per-id", type=int, default=20, help="每个身份的样本数")
    group.add_argument("--raw-dim", type=int, default=64, help="原始特征维度")
    group.add_argument("--id-dim", type=int, default=32, help="身份子空间维度")
    group.add_argument("--nuisance", type=float, default=0.5, help="摄像头偏置逐维标准差")
    group.add_argument("--noise", type=float, default=0.1, help="身份内噪声的均方根范数")
    group.add_argument("--tags", type=int, default=6, help="模拟摄像头数量")


def _add_dataset_args(parser):
    parser.add_argument("--data", help="AICV 特征文件，不提供时按合成参数生成")
    parser.add_argument("--truth", help="真实身份CSV（index,identity,nuisance_tag）")
    parser.add_argument("--data-seed", type=int, default=7, help="合成数据的随机种子")
    _add_synth_args(parser)


def _add_train_args(parser):
    parser.add_argument("--config", help="key = value 运行配置文件")
    parser.add_argument("--strategy", choices=[s.value for s in UpdateStrategy], help="记忆更新策略")
    parser.add_argument("--outliers", choices=[s.value for s in OutlierStrategy], help="离群点策略")
    parser.add_argument("--epochs", type=int, help="训练轮数")
    parser.add_argument("--iters", type=int, help="每轮迭代数")
    parser.add_argument("--seed", type=int, help="训练随机种子")
    parser.add_argument("--eps", type=float, help="DBSCAN eps")
    parser.add_argument("--min-pts", type=int, help="DBSCAN min_pts")
    parser.add_argument("--batch-ids", type=int, help="每批伪身份数 P")
    parser.add_argument("--batch-k", type=int, help="每个伪身份的样本数 K")
    parser.add_argument("--lr", type=float, help="学习率")
    parser.add_argument("--gamma", action="store_true", default=None, help="启用减速权重（困难数据集模式）")
    parser.add_argument("--tau", type=float, help="温度")
    parser.add_argument("--momentum", dest="momentum_m", type=float, help="记忆动量 m")
    parser.add_argument("--ema-rate", type=float, help="教师EMA衰减率")
    parser.add_argument("--lambda-m", type=float, help="蒸馏损失权重")
    parser.add_argument("--f-min", type=float, help="离群点最小接纳比例")
    parser.add_argument("--weight-decay", type=float, help="解耦权重衰减")
    parser.add_argument("--beta1", type=float, help="Adam 一阶矩衰减")
    parser.add_argument("--beta2", type=float, help="Adam 二阶矩衰减")
    parser.add_argument("--adam-eps", type=float, help="Adam 数值稳定项")
    parser.add_argument("--out-dim", type=int, help="编码器输出维度")
    parser.add_argument("--hidden-dim", type=int, help="tanh 隐藏层维度")
    parser.add_argument("--init-jitter", type=float, help="初始化扰动标准差")
    parser.add_argument("--holdout", dest="holdout_fraction", type=float, help="留出评估的身份比例")
    parser.add_argument(
        "--exclude-same-camera", action="store_true", default=None, help="评估时排除同身份同摄像头样本"
    )
    parser.add_argument("--eval-interval", type=int, help="评估间隔")
    parser.add_argument("--threads", type=int, help="线程数")


def build_parser():
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(prog="aicv", description="自适应类内变化对比学习引擎")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="生成合成数据")
    _add_synth_args(gen)
    gen.add_argument("--seed", type=int, default=7, help="随机种子")
    gen.add_argument("-o", "--output", required=True, help="输出 AICV 文件")

    train = sub.add_parser("train", help="训练")
    _add_dataset_args(train)
    _add_train_args(train)
    train.add_argument("-o", "--output", help="输出目录，默认 runtime.output_dir/train")

    ev = sub.add_parser("eval", help="评估特征文件")
    ev.add_argument("--data", required=True, help="AICV 特征文件（需含标签或配合 --truth）")
    ev.add_argument("--truth", help="真实身份CSV")
    ev.add_argument("--checkpoint", help="AICP 编码器检查点，提供时先编码再评估")
    ev.add_argument("--eps", type=float, default=0.5, help="DBSCAN eps")
    ev.add_argument("--min-pts", type=int, default=4, help="DBSCAN min_pts")
    ev.add_argument("--exclude-same-camera", action="store_true", help="排除同身份同摄像头样本")
    ev.add_argument("--threads", type=int, help="线程数")
    ev.add_argument("-o", "--output", help="输出目录，默认 runtime.output_dir/eval")

    ablate = sub.add_parser("ablate", help="消融实验")
    _add_dataset_args(ablate)
    _add_train_args(ablate)
    ablate.add_argument("--seeds", default="7", help="逗号分隔的训练种子，多个种子取中位数")
    ablate.add_argument("-o", "--output", help="输出目录，默认 runtime.output_dir/ablate")

    dump = sub.add_parser("dump-stats", help="导出聚类与类内统计")
    dump.add_argument("--data", required=True, help="AICV 特征文件")
    dump.add_argument("--checkpoint", help="AICP 编码器检查点")
    dump.add_argument("--eps", type=float, default=0.5, help="DBSCAN eps")
    dump.add_argument("--min-pts", type=int, default=4, help="DBSCAN min_pts")
    dump.add_argument("--tau", type=float, default=0.05, help="温度")
    dump.add_argument("--threads", type=int, help="线程数")
    dump.add_argument("-o", "--output", help="输出目录，默认 runtime.output_dir/dump-stats")
    return parser


def apply_runtime_defaults(args, config=None):
    """
    用应用配置的 runtime 段补齐未指定的输出目录与线程数

    运行配置文件（--config）中的 threads 优先于应用配置
    """
    runtime = (config or load_config()).get("runtime", {})
    if getattr(args, "output", "") is None:
        args.output = os.path.join(runtime.get("output_dir", "./output"), args.command)
    if hasattr(args, "threads") and args.threads is None and not getattr(args, "config", None):
        args.threads = runtime.get("threads", 1)
    return args


def _synth_spec(args, seed):
    return SynthSpec(
        n_identities=args.ids,
        samples_per_identity=args.per_id,
        raw_dim=args.raw_dim,
        identity_dim=args.id_dim,
        nuisance_scale=args.nuisance,
        noise_scale=args.noise,
        n_nuisance_tags=args.tags,
        seed=seed
    )


def load_dataset(args):
    """
    从特征文件或合成参数得到 RawDataset
    """
    if not getattr(args, "data", None):
        return generate(_synth_spec(args, args.data_seed))
    features, labels = read_features(args.data)
    tags = None
    if getattr(args, "truth", None):
        labels, tags = read_truth_csv(args.truth)
    return RawDataset(features, labels, tags)


def resolve_config(args, **extra):
    """
    合并运行配置文件与命令行覆盖项
    """
    overrides = {
        "update_strategy": args.strategy,
        "outlier_strategy": args.outliers,
        "epochs": args.epochs,
        "iters_per_epoch": args.iters,
        "seed": args.seed,
        "eps": args.eps,
        "min_pts": args.min_pts,
        "identities_per_batch": args.batch_ids,
        "instances_per_identity": args.batch_k,
        "lr": args.lr,
        "gamma_enabled": args.gamma,
        "eval_interval": args.eval_interval,
        "threads": args.threads,
    }
    for name in CONFIG_FLAGS:
        overrides[name] = getattr(args, name)
    overrides.update(extra)
    if overrides["eps"] is None and not args.config and not getattr(args, "data", None):
        overrides["eps"] = SYNTHETIC_EPS
        logger.info(f"合成数据未指定 eps，使用标定值 {SYNTHETIC_EPS}")
    if args.config:
        return load_run_config(args.config, **overrides)
    return TrainConfig(**{k: v for k, v in overrides.items() if v is not None})


def _print_metrics(title, metrics):
    table = Table(title=title)
    table.add_column("指标")
    table.add_column("数值", justify="right")
    for key, value in metrics.items():
        table.add_row(key, "-" if value is None else f"{value:.4f}")
    console.print(table)


def cmd_generate(args):
    spec = _synth_spec(args, args.seed)
    dataset = generate(spec)
    write_features(args.output, dataset.features, dataset.true_ids)
    truth_path = os.path.splitext(args.output)[0] + ".truth.csv"
    write_truth_csv(truth_path, dataset, config=spec.model_dump())
    console.print(f"已生成 {dataset.rows} 行: {args.output}, 标签: {truth_path}")
    return 0


def cmd_train(args):
    config = resolve_config(args)
    dataset = load_dataset(args)
    logger.info(f"训练配置: {json.dumps(config.to_record(), ensure_ascii=False)}")
    params, report = run_training(config, dataset)
    write_run_artifacts(args.output, report, params, config)
    if report.final is not None:
        _print_metrics("最终指标", report.final)
    return 0


def cmd_eval(args):
    features, labels = read_features(args.data)
    tags = None
    if args.truth:
        labels, tags = read_truth_csv(args.truth)
    if labels is None:
        raise ValueError(f"特征文件没有标签，请通过 --truth 提供: {args.data}")

    if args.checkpoint:
        embeddings = forward(load_checkpoint(args.checkpoint), features)
    else:
        embeddings = features.normalize()

    metrics = evaluate(build_split(embeddings, labels, tags), exclude_same_camera=args.exclude_same_camera)
    labeling = dbscan(embeddings, args.eps, args.min_pts, args.threads)
    metrics["ARI"] = ari(labeling.label, labels)
    metrics["NMI"] = nmi(labeling.label, labels)
    metrics["n_clusters"] = labeling.n_clusters

    settings = {k: v for k, v in vars(args).items() if k != "func"}
    write_json(os.path.join(args.output, "metrics.json"), {"config": settings, "metrics": metrics})
    write_csv(os.path.join(args.output, "metrics.csv"), list(metrics), [list(metrics.values())], config=settings)
    _print_metrics("评估结果", metrics)
    return 0


def cmd_ablate(args):
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ValueError("--seeds 不能为空")
    base = resolve_config(args)
    dataset = load_dataset(args)
    if dataset.true_ids is None:
        raise ValueError("消融实验需要身份标签")

    rows = []
    for update, outliers in ABLATION_ROWS:
        maps, rank1s = [], []
        for seed in seeds:
            record = {**base.model_dump(), "update_strategy": update, "outlier_strategy": outliers, "seed": seed}
            _, report = run_training(TrainConfig(**record), dataset)
            maps.append(report.final["mAP"])
            rank1s.append(report.final["rank1"])
        rows.append([update.value, outliers.value, float(np.median(maps)), float(np.median(rank1s))])
        logger.info(f"消融 {update.value}/{outliers.value}: mAP={rows[-1][2]:.4f}, rank1={rows[-1][3]:.4f}")

    settings = {"base_config": base.to_record(), "seeds": seeds}
    write_csv(os.path.join(args.output, "ablation.csv"), ["strategy", "outliers", "mAP", "rank1"], rows, config=settings)

    table = Table(title="消融实验")
    for column in ("strategy", "outliers", "mAP", "rank1"):
        table.add_column(column)
    for row in rows:
        table.add_row(row[0], row[1], f"{row[2]:.4f}", f"{row[3]:.4f}")
    console.print(table)
    return 0


def cmd_dump_stats(args):
    features, _ = read_features(args.data)
    if args.checkpoint:
        embeddings = forward(load_checkpoint(args.checkpoint), features)
    else:
        embeddings = features.normalize()

    settings = {k: v for k, v in vars(args).items() if k != "func"}
    labeling = dbscan(embeddings, args.eps, args.min_pts, args.threads)
    labeling.to_csv(os.path.join(args.output, "labels.csv"), config=settings)
    if labeling.n_clusters == 0:
        raise RuntimeError(f"没有得到任何簇，请调大 eps（当前 {args.eps}）")

    memory = ClusterMemory.from_labeling(embeddings, labeling, temperature=args.tau)
    write_features(os.path.join(args.output, "centroids.aicv"), memory.centroids, np.arange(memory.n_clusters))
    rows = [
        compute_class_stats(embeddings.data[labeling.members(k)], args.tau, class_id=k).to_row()
        for k in range(labeling.n_clusters)
    ]
    write_csv(os.path.join(args.output, "class_stats.csv"), STATS_HEADER, rows, config=settings)
    console.print(f"已导出 {labeling.n_clusters} 个簇的统计量: {args.output}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "dump-stats": cmd_dump_stats,
}


def main(argv=None):
    """
    命令行主函数

    参数:
        argv: 参数列表，None 表示使用 sys.argv

    返回:
        int: 退出码
    """
    args = apply_runtime_defaults(build_parser().parse_args(argv))
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        logger.exception(f"命令 {args.command} 执行失败: {str(e)}")
        return 1
