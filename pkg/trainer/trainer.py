"""
训练流程编排

每轮: 教师网络提取特征 → DBSCAN → 初始化记忆 → 离群点接纳 →
PK 小批量循环（损失、Adam、记忆动量写入、EMA）→ 汇总 diff_global 供下一轮使用
"""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from adaptive import compute_class_stats, select_update_sample, global_diff, adaof_admit
from clusterer import dbscan
from encoder import (
    AdamState,
    TeacherState,
    init_params,
    forward,
    forward_with_cache,
    backward,
    adam_step,
    ema_update
)
from evalkit import build_split, evaluate as evaluate_retrieval
from loss import hybrid_nce, class_prob, class_prob_backward, mse_distill, total, batch_mean
from memory import ClusterMemory
from numcore import EmbeddingMatrix, l2_normalize
from synthgen import split_identities
from trainer.config import UpdateStrategy, OutlierStrategy
from trainer.reports import EpochReport, TrainingReport
from trainer.sampler import pk_sample
from utils import setup_logger

# 创建日志记录器
logger = setup_logger("trainer")

# 首轮没有上一轮统计，按最弱模型假设取 1
INITIAL_DIFF_GLOBAL = 1.0


class Trainer:
    """
    单次训练的全部状态：学生/教师参数、优化器、采样随机数流和 diff_global
    """
    def __init__(self, config, dataset):
        """
        初始化训练器

        参数:
            config: TrainConfig
            dataset: 训练用 RawDataset
        """
        batch_size = config.identities_per_batch * config.instances_per_identity
        if batch_size > dataset.rows:
            raise ValueError(f"P·K={batch_size} 超过训练样本数 {dataset.rows}")

        self.config = config
        self.raw = dataset.features
        self.params = init_params(
            dataset.features.dim,
            out_dim=config.out_dim,
            hidden_dim=config.hidden_dim,
            jitter=config.init_jitter,
            seed=config.seed
        )
        self.teacher = TeacherState(self.params.copy(), config.ema_rate)
        self.optimizer = AdamState(
            lr=config.lr,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.adam_eps,
            weight_decay=config.weight_decay
        )
        self.rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, 1])))
        self.diff_global = INITIAL_DIFF_GLOBAL
        self.epoch = 0
        self.stats_rows = []
        self.executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def close(self):
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None

    def _map(self, fn, items):
        # executor.map 保持输入顺序，归约顺序与线程数无关
        if self.executor is None:
            return [fn(item) for item in items]
        return list(self.executor.map(fn, items))

    def admit_outliers(self, embeddings, labeling, memory):
        """
        按离群点策略选出写入记忆的离群点

        返回:
            EmbeddingMatrix: 被接纳的离群点特征
        """
        outliers = embeddings.subset(labeling.outlier_indices)
        strategy = self.config.outlier_strategy
        if strategy == OutlierStrategy.NONE:
            return EmbeddingMatrix.empty(embeddings.dim)
        if strategy == OutlierStrategy.ALL:
            return outliers
        decision = adaof_admit(outliers, memory.centroids, self.diff_global, self.config.f_min)
        return outliers.subset(decision.admitted_indices)

    def update_feature(self, features, centroid, stats):
        """
        按记忆更新策略选出写入簇中心的特征

        参数:
            features: 该类在本批中的 (K, d) 学生特征
            centroid: 当前簇中心
            stats: ClassAdaptiveStats

        返回:
            np.ndarray: 单位向量
        """
        strategy = self.config.update_strategy
        if strategy == UpdateStrategy.CM:
            return l2_normalize(features.mean(axis=0))
        if strategy == UpdateStrategy.HARDEST:
            beta = 1.0
        elif strategy == UpdateStrategy.LINEAR:
            beta = min((self.epoch + 1) / max(self.config.epochs, 1), 1.0)
        else:
            beta = stats.beta
        return features[select_update_sample(features, centroid, beta)]

    def _sample_loss(self, args):
        q, t, positive_id, memory, centroids = args
        cfg = self.config
        hybrid, grad_hybrid = hybrid_nce(q, memory, positive_id)
        p_s = class_prob(q, centroids, cfg.tau)
        p_t = class_prob(t, centroids, cfg.tau)
        mse, grad_prob = mse_distill(p_s, p_t)
        grad_q = grad_hybrid + cfg.lambda_m * class_prob_backward(q, centroids, cfg.tau, grad_prob)
        return total(hybrid, mse, cfg.lambda_m), grad_q

    def train_step(self, batch, labeling, memory, gamma, iteration):
        """
        一个小批量的训练

        返回:
            tuple: (LossBreakdown 批均值, 本批各类的 ClassAdaptiveStats 列表)
        """
        cfg = self.config
        raw_batch = self.raw.subset(batch)
        student, cache = forward_with_cache(self.params, raw_batch)
        teacher = forward(self.teacher.params, raw_batch)
        labels = labeling.label[batch]
        centroids = memory.centroids.data

        results = self._map(
            self._sample_loss,
            [(student.data[i], teacher.data[i], int(labels[i]), memory, centroids) for i in range(len(batch))]
        )
        breakdown = batch_mean([r[0] for r in results])
        grad_embeddings = np.stack([r[1] for r in results]) / len(batch)

        # 统计量只用于选样，不参与梯度
        _, first = np.unique(labels, return_index=True)
        classes = [int(c) for c in labels[np.sort(first)]]
        groups = [np.flatnonzero(labels == c) for c in classes]
        stats = self._map(
            lambda item: compute_class_stats(student.data[item[1]], cfg.tau, gamma, item[0]),
            list(zip(classes, groups))
        )

        grads = backward(self.params, raw_batch, grad_embeddings, cache)
        self.params, self.optimizer = adam_step(self.params, grads, self.optimizer)

        for class_id, group, class_stats in zip(classes, groups, stats):
            feature = self.update_feature(student.data[group], memory.centroids.data[class_id], class_stats)
            memory.momentum_update(class_id, feature)
            self.stats_rows.append([self.epoch, iteration] + class_stats.to_row())

        self.teacher = ema_update(self.teacher, self.params)
        logger.debug(f"epoch {self.epoch} iter {iteration}: hybrid={breakdown.hybrid:.6f}, mse={breakdown.mse:.6f}")
        return breakdown, stats

    def train_epoch(self):
        """
        训练一轮

        返回:
            EpochReport
        """
        cfg = self.config
        start = time.perf_counter()
        embeddings = forward(self.teacher.params, self.raw)
        labeling = dbscan(embeddings, cfg.eps, cfg.min_pts, cfg.threads)
        if labeling.n_clusters == 0:
            raise RuntimeError(
                f"第 {self.epoch} 轮聚类没有得到任何簇，请调大 eps（当前 {cfg.eps}）或减小 min_pts（当前 {cfg.min_pts}）"
            )

        memory = ClusterMemory.from_labeling(embeddings, labeling, cfg.momentum_m, cfg.tau)
        admission_diff = self.diff_global
        memory.set_outlier_bank(self.admit_outliers(embeddings, labeling, memory))

        p = cfg.identities_per_batch
        k = cfg.instances_per_identity
        if labeling.n_clusters < p:
            logger.warning(f"簇数量 {labeling.n_clusters} 少于 P={p}，本轮 P 取 {labeling.n_clusters}")
            p = labeling.n_clusters
        iterations = cfg.iters_per_epoch or max(1, len(labeling.clustered_indices) // (p * k))
        gamma = min(self.epoch / max(cfg.epochs, 1), 1.0) if cfg.gamma_enabled else None

        breakdowns, diffs = [], []
        for iteration in range(iterations):
            batch = pk_sample(labeling, p, k, self.rng)
            breakdown, stats = self.train_step(batch, labeling, memory, gamma, iteration)
            breakdowns.append(breakdown)
            diffs.extend(s.diff for s in stats)

        self.diff_global = min(max(global_diff(diffs), 0.0), 1.0)
        epoch_loss = batch_mean(breakdowns)
        report = EpochReport(
            epoch=self.epoch,
            n_clusters=labeling.n_clusters,
            n_outliers=labeling.n_outliers,
            n_admitted=memory.n_outliers,
            admission_diff_global=admission_diff,
            diff_global=self.diff_global,
            iterations=iterations,
            hybrid=epoch_loss.hybrid,
            mse=epoch_loss.mse,
            total=epoch_loss.total,
            wall_clock=time.perf_counter() - start
        )
        logger.info(
            f"第 {self.epoch} 轮完成: 簇 {report.n_clusters}, 离群点 {report.n_outliers}, 接纳 {report.n_admitted}, "
            f"diff_global {report.diff_global:.4f}, loss {report.total:.4f}, 耗时 {report.wall_clock:.2f}s"
        )
        self.epoch += 1
        return report

    def evaluate(self, dataset):
        """
        用学生编码器在评估集上计算检索指标

        参数:
            dataset: 带 true_ids 的 RawDataset

        返回:
            dict: mAP 与 rank1/5/10
        """
        embeddings = forward(self.params, dataset.features)
        split = build_split(embeddings, dataset.true_ids, dataset.nuisance_tag)
        return evaluate_retrieval(split, exclude_same_camera=self.config.exclude_same_camera)


def prepare_datasets(config, dataset):
    """
    划分训练集与评估集

    返回:
        tuple: (训练集, 评估集或 None)
    """
    if dataset.true_ids is None:
        logger.warning("数据集没有身份标签，训练过程中不做评估")
        return dataset, None
    train_set, eval_set = split_identities(dataset, config.holdout_fraction, config.seed)
    if eval_set is None:
        logger.info("未留出评估身份，在训练集上评估")
        eval_set = train_set
    return train_set, eval_set


def run_training(config, dataset):
    """
    完整训练

    参数:
        config: TrainConfig
        dataset: RawDataset

    返回:
        tuple: (最终学生编码器参数, TrainingReport)
    """
    train_set, eval_set = prepare_datasets(config, dataset)
    report = TrainingReport(config=config.to_record())
    with Trainer(config, train_set) as trainer:
        if eval_set is not None:
            report.baseline = trainer.evaluate(eval_set)
            logger.info(f"未训练编码器基线: {report.baseline}")

        for epoch in range(config.epochs):
            epoch_report = trainer.train_epoch()
            last_epoch = epoch + 1 == config.epochs
            if eval_set is not None and ((epoch + 1) % config.eval_interval == 0 or last_epoch):
                metrics = trainer.evaluate(eval_set)
                epoch_report = epoch_report.model_copy(update=metrics)
                logger.info(f"第 {epoch} 轮评估: {metrics}")
            report.epochs.append(epoch_report)

        if eval_set is not None:
            report.final = trainer.evaluate(eval_set)
        report.stats_rows = trainer.stats_rows
        return trainer.params, report
