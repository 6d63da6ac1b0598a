"""Tests for SOR, two-stage SOR, ROR and 3D DBSCAN."""
import sys
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.baseline_filters import (
    Dbscan3dParams, RorParams, SorParams, dbscan3d_filter, ror_filter, sor_filter,
    two_stage_sor_filter,
)
from src.cloud_model import LabeledCloud
from src.cluster_filter import DbscanParams, dbscan, threshold_filter
from src.errors import ContractError
from src.eval_metrics import OpCounts


def grid_cloud(n: int = 10, spacing: float = 0.5) -> LabeledCloud:
    points = [[spacing * i, spacing * j, 0.0] for i in range(n) for j in range(n)]
    return LabeledCloud(points=np.array(points))


class TestSor(unittest.TestCase):
    """Statistical outlier removal."""

    def test_far_point_on_a_line(self):
        points = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0], [100, 0, 0]], dtype=float)
        flagged = sor_filter(LabeledCloud(points=points), SorParams(2, 1.0))
        self.assertEqual(flagged.tolist(), [False, False, False, False, True])

    def test_regular_grid_flags_nothing_with_wide_band(self):
        flagged = sor_filter(grid_cloud(), SorParams(4, 5.0))
        self.assertFalse(flagged.any())

    def test_permutation_invariant(self):
        rng = np.random.default_rng(41)
        points = np.vstack((rng.normal(0, 1, (200, 3)), rng.uniform(-20, 20, (10, 3))))
        order = rng.permutation(points.shape[0])
        params = SorParams(10, 1.0)
        flagged = sor_filter(LabeledCloud(points=points), params)
        shuffled = sor_filter(LabeledCloud(points=points[order]), params)
        np.testing.assert_array_equal(shuffled, flagged[order])

    def test_full_scan_flags_what_the_tree_flags(self):
        rng = np.random.default_rng(45)
        points = np.vstack((rng.normal(0, 1, (250, 3)), rng.uniform(-20, 20, (15, 3))))
        cloud = LabeledCloud(points=points)
        counter = OpCounts()
        scanned = sor_filter(cloud, SorParams(8, 1.0), use_grid=False, counter=counter)
        np.testing.assert_array_equal(scanned, sor_filter(cloud, SorParams(8, 1.0)))
        self.assertEqual(counter.multiplications, 3 * 265 * 265)

    def test_needs_more_than_k_points(self):
        with self.assertRaises(ContractError):
            sor_filter(LabeledCloud(points=np.zeros((10, 3))), SorParams(10, 1.0))

    def test_invalid_params(self):
        with self.assertRaises(ContractError):
            SorParams(0, 1.0)
        with self.assertRaises(ContractError):
            SorParams(10, 0.0)


class TestTwoStageSor(unittest.TestCase):
    """Second SOR pass on the survivors of the first."""

    def test_is_superset_of_first_pass(self):
        rng = np.random.default_rng(42)
        points = np.vstack((rng.normal(0, 1, (300, 3)), rng.uniform(-15, 15, (20, 3))))
        cloud = LabeledCloud(points=points)
        first = sor_filter(cloud, SorParams(10, 1.0))
        both = two_stage_sor_filter(cloud, SorParams(10, 1.0), SorParams(10, 2.0))
        self.assertTrue(np.all(both[first]))
        self.assertGreaterEqual(both.sum(), first.sum())

    def test_masked_pair_is_caught_by_second_pass(self):
        rng = np.random.default_rng(43)
        blob = rng.normal(0, 0.5, (200, 3))
        pair = np.array([[12.0, 0.0, 0.0], [12.1, 0.0, 0.0]])
        far = np.array([[300.0, 0.0, 0.0]])
        cloud = LabeledCloud(points=np.vstack((blob, pair, far)))
        params = SorParams(2, 3.0)
        first = sor_filter(cloud, params)
        self.assertTrue(first[-1])
        both = two_stage_sor_filter(cloud, params, SorParams(2, 3.0))
        self.assertTrue(both[-1])
        self.assertTrue(both[200:202].all())

    def test_full_scan_counts_both_passes(self):
        rng = np.random.default_rng(46)
        cloud = LabeledCloud(points=np.vstack((rng.normal(0, 1, (200, 3)),
                                               rng.uniform(-15, 15, (10, 3)))))
        counter = OpCounts()
        both = two_stage_sor_filter(cloud, SorParams(10, 1.0), SorParams(10, 2.0),
                                    use_grid=False, counter=counter)
        first = sor_filter(cloud, SorParams(10, 1.0))
        survivors = int((~first).sum())
        self.assertEqual(counter.multiplications, 3 * (210 * 210 + survivors * survivors))
        np.testing.assert_array_equal(
            both, two_stage_sor_filter(cloud, SorParams(10, 1.0), SorParams(10, 2.0)))

    def test_too_few_survivors(self):
        points = np.array([[0, 0, 0], [0.1, 0, 0], [0.2, 0, 0], [50, 0, 0]], dtype=float)
        with self.assertRaises(ContractError):
            two_stage_sor_filter(LabeledCloud(points=points), SorParams(2, 0.5), SorParams(3, 1.0))


class TestRor(unittest.TestCase):
    """Radius outlier removal."""

    def test_isolated_point(self):
        rng = np.random.default_rng(44)
        blob = rng.normal(0, 0.2, (50, 3))
        points = np.vstack((blob, [[10.0, 10.0, 10.0]]))
        flagged = ror_filter(LabeledCloud(points=points), RorParams(1.0, 10))
        self.assertTrue(flagged[-1])
        self.assertFalse(flagged[:50].any())

    def test_sparse_lamp_column_is_removed(self):
        column = np.array([[0.0, 0.0, 0.5 * i] for i in range(1, 17)])
        flagged = ror_filter(LabeledCloud(points=column), RorParams(1.0, 10))
        self.assertTrue(flagged.all())

    def test_grid_and_scan_agree(self):
        rng = np.random.default_rng(45)
        cloud = LabeledCloud(points=rng.uniform(0, 6, (400, 3)))
        params = RorParams(0.9, 5)
        np.testing.assert_array_equal(ror_filter(cloud, params, use_grid=True),
                                      ror_filter(cloud, params, use_grid=False))

    def test_huge_radius_keeps_everything(self):
        rng = np.random.default_rng(46)
        cloud = LabeledCloud(points=rng.uniform(0, 5, (30, 3)))
        self.assertFalse(ror_filter(cloud, RorParams(1e6, 10)).any())


class TestDbscan3d(unittest.TestCase):
    """DBSCAN with psi thresholding on raw coordinates."""

    def test_planar_cloud_matches_plane_clustering(self):
        rng = np.random.default_rng(47)
        xy = np.vstack((rng.normal(0, 1, (250, 2)), rng.uniform(-30, 30, (40, 2))))
        cloud = LabeledCloud(points=np.column_stack((xy, np.zeros(xy.shape[0]))))
        flagged = dbscan3d_filter(cloud, Dbscan3dParams(1.0, 10, 100))
        expected = threshold_filter(dbscan(xy, DbscanParams(1.0, 10)), 100)
        self.assertEqual(np.flatnonzero(flagged).tolist(), expected.tolist())

    def test_identical_points_form_one_cluster(self):
        cloud = LabeledCloud(points=np.ones((120, 3)))
        self.assertFalse(dbscan3d_filter(cloud, Dbscan3dParams(1.0, 10, 100)).any())
        self.assertTrue(dbscan3d_filter(cloud, Dbscan3dParams(1.0, 10, 121)).all())

    def test_small_dense_ball_is_removed(self):
        rng = np.random.default_rng(48)
        big = rng.normal(0, 0.5, (300, 3))
        ball = rng.normal(0, 0.2, (40, 3)) + [20.0, 0.0, 0.0]
        flagged = dbscan3d_filter(LabeledCloud(points=np.vstack((big, ball))),
                                  Dbscan3dParams(1.0, 10, 100))
        self.assertTrue(flagged[300:].all())

    def test_invalid_params(self):
        with self.assertRaises(ContractError):
            Dbscan3dParams(epsilon=0.0)


if __name__ == '__main__':
    unittest.main()
