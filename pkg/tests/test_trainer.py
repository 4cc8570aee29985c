import os
import sys
import json
import tempfile
import unittest
from collections import Counter

import numpy as np
from pydantic import ValidationError

# 添加项目根目录到导入路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from adaptive import compute_class_stats
from clusterer import PseudoLabeling
from encoder import init_params, load_checkpoint
from numcore import EmbeddingMatrix, l2_normalize
from synthgen import SynthSpec, RawDataset, generate
from trainer import (
    TrainConfig,
    UpdateStrategy,
    OutlierStrategy,
    Trainer,
    load_run_config,
    dump_run_config,
    pk_sample,
    run_training,
    write_run_artifacts
)


def small_dataset(seed=3, stray=0):
    """8 个身份 × 8 个样本，可附加若干随机离群样本"""
    spec = SynthSpec(
        n_identities=8, samples_per_identity=8, raw_dim=32, identity_dim=32,
        nuisance_scale=0.0, noise_scale=0.05, seed=seed
    )
    dataset = generate(spec)
    if not stray:
        return dataset
    rng = np.random.default_rng(seed)
    features = np.vstack([dataset.features.data, rng.standard_normal((stray, 32))])
    ids = np.concatenate([dataset.true_ids, 100 + np.arange(stray)])
    return RawDataset(EmbeddingMatrix(features), ids)


def nuisance_dataset(seed=5):
    """16 个身份 × 10 个样本，两个摄像头的偏置明显大于身份内噪声"""
    spec = SynthSpec(
        n_identities=16, samples_per_identity=10, raw_dim=64, identity_dim=32,
        nuisance_scale=0.25, noise_scale=0.1, n_nuisance_tags=2, seed=seed
    )
    return generate(spec)


def small_config(**overrides):
    values = {"eps": 0.3, "epochs": 2, "seed": 1, "holdout_fraction": 0.25}
    values.update(overrides)
    return TrainConfig(**values)


class TestTrainConfig(unittest.TestCase):
    """测试训练配置"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "run.txt")

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        with open(self.path, "w", encoding="utf-8") as f:
            f.write(text)

    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual((config.tau, config.momentum_m, config.ema_rate, config.lambda_m), (0.05, 0.2, 0.999, 1.0))
        self.assertEqual((config.eps, config.min_pts, config.f_min), (0.5, 4, 0.1))
        self.assertEqual(config.update_strategy, UpdateStrategy.ADAPTIVE)
        self.assertEqual(config.outlier_strategy, OutlierStrategy.ADAPTIVE)

    def test_rejects_unknown_and_invalid_fields(self):
        with self.assertRaises(ValidationError):
            TrainConfig(unknown=1)
        with self.assertRaises(ValidationError):
            TrainConfig(ema_rate=1.0)
        with self.assertRaises(ValidationError):
            TrainConfig(update_strategy="random")

    def test_load_run_config(self):
        self.write("# 注释\ntau = 0.1\nupdate_strategy = hardest\nout_dim = none\ngamma_enabled = true\n")
        config = load_run_config(self.path, epochs=3, seed=None)
        self.assertEqual(config.tau, 0.1)
        self.assertEqual(config.update_strategy, UpdateStrategy.HARDEST)
        self.assertIsNone(config.out_dim)
        self.assertTrue(config.gamma_enabled)
        self.assertEqual(config.epochs, 3)
        self.assertEqual(config.seed, 7)

    def test_unknown_key(self):
        self.write("temperature = 0.1\n")
        with self.assertRaises(ValueError):
            load_run_config(self.path)

    def test_duplicate_key(self):
        self.write("tau = 0.1\ntau = 0.2\n")
        with self.assertRaises(ValueError):
            load_run_config(self.path)

    def test_dump_then_load(self):
        config = TrainConfig(tau=0.07, hidden_dim=16, outlier_strategy="all", gamma_enabled=True, lr=1.25e-4)
        dump_run_config(config, self.path)
        self.assertEqual(load_run_config(self.path).model_dump(), config.model_dump())


class TestPKSampler(unittest.TestCase):
    """测试 PK 采样"""

    def setUp(self):
        self.labeling = PseudoLabeling(np.array([0, 0, 0, 0, 0, -1, 1, 1, 1, 1, 2, 2, -1, 3]), 4)

    def test_single_index(self):
        batch = pk_sample(self.labeling, 1, 1, np.random.default_rng(0))
        self.assertEqual(len(batch), 1)
        self.assertNotEqual(self.labeling.label[batch[0]], -1)

    def test_groups_are_contiguous_and_distinct(self):
        labeling = PseudoLabeling(np.repeat(np.arange(5), 6), 5)
        batch = pk_sample(labeling, 3, 4, np.random.default_rng(1))
        groups = batch.reshape(3, 4)
        self.assertEqual(len({int(labeling.label[g[0]]) for g in groups}), 3)
        for group in groups:
            self.assertEqual(len(set(labeling.label[group])), 1)
            self.assertEqual(len(set(group.tolist())), 4)

    def test_small_clusters_sample_with_replacement(self):
        for seed in range(20):
            batch = pk_sample(self.labeling, 4, 4, np.random.default_rng(seed))
            self.assertEqual(len(batch), 16)
            self.assertTrue(np.all(self.labeling.label[batch] != -1))

    def test_seeded_replay(self):
        a = pk_sample(self.labeling, 2, 3, np.random.default_rng(42))
        b = pk_sample(self.labeling, 2, 3, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_too_few_clusters(self):
        with self.assertRaises(ValueError):
            pk_sample(self.labeling, 5, 2, np.random.default_rng(0))


class TestUpdateFeature(unittest.TestCase):
    """测试记忆更新策略"""

    def setUp(self):
        rng = np.random.default_rng(7)
        self.features = EmbeddingMatrix.from_normalized_rows(rng.standard_normal((4, 32))).data
        self.centroid = l2_normalize(self.features.mean(axis=0) + 0.1 * rng.standard_normal(32))
        self.stats = compute_class_stats(self.features, 0.05)
        self.sims = self.features @ self.centroid
        self.dataset = small_dataset()

    def feature_for(self, strategy, epochs=4):
        with Trainer(small_config(update_strategy=strategy, epochs=epochs), self.dataset) as trainer:
            return trainer.update_feature(self.features, self.centroid, self.stats)

    def test_cm_uses_mean(self):
        np.testing.assert_allclose(self.feature_for("cm"), l2_normalize(self.features.mean(axis=0)), atol=1e-12)

    def test_hardest_uses_least_similar(self):
        np.testing.assert_array_equal(self.feature_for("hardest"), self.features[np.argmin(self.sims)])

    def test_linear_first_epoch_uses_most_similar(self):
        # epoch 0/4 时 β = 1/4，K = 4 对应第 1 名
        np.testing.assert_array_equal(self.feature_for("linear"), self.features[np.argmax(self.sims)])

    def test_adaptive_uses_stats_beta(self):
        order = sorted(range(4), key=lambda i: (-self.sims[i], i))
        rank = min(max(int(np.ceil(self.stats.beta * 4 - 1e-9)), 1), 4)
        np.testing.assert_array_equal(self.feature_for("adaptive"), self.features[order[rank - 1]])


class TestTrainEpoch(unittest.TestCase):
    """测试单轮训练"""

    def test_epoch_report_counts(self):
        config = small_config(outlier_strategy="all", holdout_fraction=0.0)
        with Trainer(config, small_dataset(stray=4)) as trainer:
            report = trainer.train_epoch()
            self.assertEqual(report.n_clusters, 8)
            self.assertEqual(report.n_outliers, 4)
            self.assertEqual(report.n_admitted, 4)
            self.assertEqual(report.iterations, 64 // 16)
            self.assertTrue(0.0 <= report.diff_global <= 1.0)
            self.assertEqual(report.admission_diff_global, 1.0)
            # 每个小批量恰好写入 P 个簇中心
            writes = Counter((row[0], row[1]) for row in trainer.stats_rows)
            self.assertEqual(set(writes.values()), {config.identities_per_batch})
            self.assertEqual(trainer.epoch, 1)

    def test_no_outliers_strategy(self):
        with Trainer(small_config(outlier_strategy="none"), small_dataset(stray=4)) as trainer:
            self.assertEqual(trainer.train_epoch().n_admitted, 0)

    def test_adaptive_admission_is_bounded(self):
        with Trainer(small_config(outlier_strategy="adaptive"), small_dataset(stray=6)) as trainer:
            for _ in range(2):
                report = trainer.train_epoch()
                self.assertLessEqual(report.n_admitted, report.n_outliers)

    def test_zero_clusters(self):
        with Trainer(small_config(eps=1e-6), small_dataset()) as trainer:
            with self.assertRaises(RuntimeError):
                trainer.train_epoch()

    def test_batch_larger_than_dataset(self):
        with self.assertRaises(ValueError):
            Trainer(small_config(identities_per_batch=20), small_dataset())


class TestRunTraining(unittest.TestCase):
    """测试完整训练"""

    def test_zero_epochs(self):
        config = small_config(epochs=0)
        dataset = small_dataset()
        params, report = run_training(config, dataset)
        self.assertEqual(report.epochs, [])
        expected = init_params(32, seed=config.seed, jitter=config.init_jitter)
        np.testing.assert_array_equal(params.weight, expected.weight)

    def test_end_to_end(self):
        _, report = run_training(small_config(), small_dataset())
        self.assertEqual(len(report.epochs), 2)
        self.assertIsNone(report.epochs[0].mAP)
        self.assertIsNotNone(report.epochs[1].mAP)
        self.assertGreaterEqual(report.final["mAP"], 0.9)
        self.assertIsNotNone(report.baseline)

    def test_learns_camera_invariance(self):
        # 初始特征中同摄像头的不同身份比跨摄像头的同身份更近
        config = TrainConfig(eps=0.05, min_pts=3, lr=0.002, epochs=40, holdout_fraction=0.5, seed=1)
        _, report = run_training(config, nuisance_dataset())
        self.assertLessEqual(report.baseline["mAP"], 0.75)
        self.assertGreaterEqual(report.final["mAP"], report.baseline["mAP"] + 0.15)

    def test_same_seed_replays(self):
        config = small_config(epochs=2)
        params_a, report_a = run_training(config, small_dataset())
        params_b, report_b = run_training(config, small_dataset())
        self.assertEqual(report_a.model_dump(), report_b.model_dump())
        np.testing.assert_array_equal(params_a.weight, params_b.weight)

    def test_thread_count_does_not_change_result(self):
        params_a, report_a = run_training(small_config(threads=1), small_dataset())
        params_b, report_b = run_training(small_config(threads=3), small_dataset())
        self.assertEqual(report_a.model_dump(exclude={"config"}), report_b.model_dump(exclude={"config"}))
        self.assertEqual(report_a.stats_rows, report_b.stats_rows)
        np.testing.assert_array_equal(params_a.weight, params_b.weight)

    def test_hidden_layer_runs(self):
        params, report = run_training(small_config(hidden_dim=24, out_dim=16, epochs=1), small_dataset())
        self.assertTrue(params.has_hidden)
        self.assertEqual(params.out_dim, 16)
        self.assertEqual(len(report.epochs), 1)


class TestRunArtifacts(unittest.TestCase):
    """测试训练产物"""

    def test_write_run_artifacts(self):
        config = small_config(epochs=1)
        params, report = run_training(config, small_dataset())
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_run_artifacts(tmp, report, params, config)
            with open(paths["epochs"], encoding="utf-8") as f:
                lines = [json.loads(line) for line in f]
            self.assertEqual(lines[0]["type"], "config")
            self.assertEqual(lines[0]["config"], config.to_record())
            self.assertEqual(len(lines), 2)
            self.assertNotIn("wall_clock", lines[1])

            with open(paths["metrics"], encoding="utf-8") as f:
                metrics = json.load(f)
            self.assertEqual(metrics["seed"], config.seed)
            self.assertEqual(metrics["final"], report.final)

            with open(paths["stats"], encoding="utf-8") as f:
                self.assertTrue(f.readline().startswith("# config: "))
                self.assertEqual(f.readline().strip(), "epoch,iteration,class_id,sim_h,sim_lh,alpha,diff,beta")

            self.assertEqual(load_run_config(paths["config"]).model_dump(), config.model_dump())
            loaded = load_checkpoint(paths["checkpoint"])
            np.testing.assert_array_equal(loaded.weight, params.weight)


if __name__ == '__main__':
    unittest.main()
