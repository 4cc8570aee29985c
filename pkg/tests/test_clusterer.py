import os
import sys
import tempfile
import unittest

import numpy as np

# 添加项目根目录到导入路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from clusterer import OUTLIER, PseudoLabeling, dbscan
from numcore import EmbeddingMatrix, cosine_sim


def naive_dbscan(points, eps, min_pts):
    """逐对计算距离、递归式扩展的参考实现"""
    n = len(points)
    neighbors = [[j for j in range(n) if 1.0 - cosine_sim(points[i], points[j]) <= eps] for i in range(n)]
    core = [len(nb) >= min_pts for nb in neighbors]
    label = [OUTLIER] * n
    cluster = 0
    for i in range(n):
        if label[i] != OUTLIER or not core[i]:
            continue
        label[i] = cluster
        stack = [i]
        while stack:
            p = stack.pop()
            for q in neighbors[p]:
                if label[q] == OUTLIER:
                    label[q] = cluster
                    if core[q]:
                        stack.append(q)
        cluster += 1
    return label, cluster


def partition(labels):
    groups = {}
    for i, value in enumerate(labels):
        if value != OUTLIER:
            groups.setdefault(value, set()).add(i)
    return {frozenset(g) for g in groups.values()}


def blobs(rng, centers, per_blob, spread):
    rows = [c + spread * rng.standard_normal((per_blob, len(c))) for c in centers]
    return EmbeddingMatrix.from_normalized_rows(np.vstack(rows))


class TestDBSCAN(unittest.TestCase):
    """测试 DBSCAN 聚类"""

    def test_antipodal_blobs(self):
        rng = np.random.default_rng(0)
        v = np.array([1.0, 0.0, 0.0, 0.0])
        embeddings = blobs(rng, [v, -v], 10, 0.02)
        labeling = dbscan(embeddings, eps=0.5, min_pts=4)
        self.assertEqual(labeling.n_clusters, 2)
        self.assertEqual(labeling.n_outliers, 0)
        expected, _ = naive_dbscan(embeddings.data, 0.5, 4)
        self.assertEqual(partition(labeling.label), partition(expected))

    def test_single_point_is_outlier(self):
        labeling = dbscan(EmbeddingMatrix(np.array([[1.0, 0.0]]), normalized=True), eps=0.5, min_pts=2)
        self.assertEqual(labeling.n_clusters, 0)
        np.testing.assert_array_equal(labeling.label, [OUTLIER])

    def test_identical_points_form_one_cluster(self):
        embeddings = EmbeddingMatrix.from_normalized_rows(np.tile([0.0, 3.0, 4.0], (6, 1)))
        labeling = dbscan(embeddings, eps=0.1, min_pts=6)
        self.assertEqual(labeling.n_clusters, 1)
        np.testing.assert_array_equal(labeling.label, np.zeros(6))

    def test_matches_naive_reference(self):
        for seed in range(500):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(1, 41))
            embeddings = EmbeddingMatrix.from_normalized_rows(rng.standard_normal((n, 3)))
            labeling = dbscan(embeddings, eps=0.15, min_pts=3)
            expected, n_clusters = naive_dbscan(embeddings.data, 0.15, 3)
            self.assertEqual(labeling.label.tolist(), expected, f"seed {seed}")
            self.assertEqual(labeling.n_clusters, n_clusters)

    def test_core_neighborhoods_are_clustered(self):
        rng = np.random.default_rng(7)
        embeddings = EmbeddingMatrix.from_normalized_rows(rng.standard_normal((80, 3)))
        eps, min_pts = 0.1, 4
        labeling = dbscan(embeddings, eps=eps, min_pts=min_pts)
        distances = 1.0 - embeddings.data @ embeddings.data.T
        for i in range(embeddings.rows):
            neighborhood = np.flatnonzero(distances[i] <= eps)
            if len(neighborhood) >= min_pts:
                self.assertTrue(np.all(labeling.label[neighborhood] != OUTLIER))
        # 每个簇至少包含一个核心点
        for k in range(labeling.n_clusters):
            members = labeling.members(k)
            self.assertTrue(any(np.sum(distances[m] <= eps) >= min_pts for m in members))

    def test_permutation_gives_same_partition(self):
        rng = np.random.default_rng(2)
        centers = [np.eye(6)[i] for i in range(4)]
        embeddings = blobs(rng, centers, 8, 0.03)
        perm = rng.permutation(embeddings.rows)
        original = dbscan(embeddings, eps=0.2, min_pts=4)
        permuted = dbscan(embeddings.subset(perm), eps=0.2, min_pts=4)
        restored = {frozenset(int(perm[i]) for i in group) for group in partition(permuted.label)}
        self.assertEqual(restored, partition(original.label))

    def test_thread_count_does_not_change_result(self):
        rng = np.random.default_rng(4)
        embeddings = EmbeddingMatrix.from_normalized_rows(rng.standard_normal((600, 3)))
        single = dbscan(embeddings, eps=0.05, min_pts=4, threads=1)
        multi = dbscan(embeddings, eps=0.05, min_pts=4, threads=4)
        np.testing.assert_array_equal(single.label, multi.label)

    def test_invalid_inputs(self):
        unit = EmbeddingMatrix(np.array([[1.0, 0.0]]), normalized=True)
        with self.assertRaises(ValueError):
            dbscan(EmbeddingMatrix.empty(2), eps=0.5)
        with self.assertRaises(ValueError):
            dbscan(unit, eps=0.0)
        with self.assertRaises(ValueError):
            dbscan(unit, eps=0.5, min_pts=0)
        with self.assertRaises(ValueError):
            dbscan(EmbeddingMatrix(np.array([[2.0, 0.0]])), eps=0.5)


class TestPseudoLabeling(unittest.TestCase):
    """测试伪标签"""

    def test_members_and_sizes(self):
        labeling = PseudoLabeling(np.array([0, -1, 1, 0, -1]), 2)
        np.testing.assert_array_equal(labeling.members(0), [0, 3])
        np.testing.assert_array_equal(labeling.outlier_indices, [1, 4])
        np.testing.assert_array_equal(labeling.cluster_sizes(), [2, 1])
        self.assertEqual(labeling.n_outliers, 2)

    def test_empty_cluster_rejected(self):
        with self.assertRaises(ValueError):
            PseudoLabeling(np.array([0, 2, 2]), 3)

    def test_out_of_range_rejected(self):
        with self.assertRaises(ValueError):
            PseudoLabeling(np.array([0, -2]), 1)

    def test_to_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "labels.csv")
            PseudoLabeling(np.array([0, -1, 0]), 1).to_csv(path)
            with open(path, encoding="utf-8") as f:
                self.assertEqual(f.read(), "index,label\n0,0\n1,-1\n2,0\n")


if __name__ == '__main__':
    unittest.main()
