"""Tests for confusion metrics, CSV output and operation counting."""
import csv
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cluster_filter import DbscanParams, dbscan
from src.errors import ContractError
from src.eval_metrics import (
    CSV_COLUMNS, ConfusionCounts, MetricsRow, OpCounts, accuracy, confusion, error, f1, f1_from,
    op_counted_run, precision, recall, squared_distance_cost, write_metrics_csv,
)


class TestConfusion(unittest.TestCase):
    """Counting with noise as the positive class."""

    def test_one_of_each(self):
        c = confusion([1, 1, 0, 0], [True, False, True, False])
        self.assertEqual((c.tp, c.fp, c.tn, c.fn), (1, 1, 1, 1))

    def test_any_noise_code_counts_as_noise(self):
        c = confusion([0, 1, 2, 3], [0, 1, 1, 0])
        self.assertEqual((c.tp, c.fp, c.tn, c.fn), (2, 0, 1, 1))

    def test_length_mismatch(self):
        with self.assertRaises(ContractError):
            confusion([0, 1], [True])


class TestRates(unittest.TestCase):
    """Accuracy, error, precision, recall and F1."""

    def test_accuracy_and_error_are_complements(self):
        rng = np.random.default_rng(51)
        for _ in range(1000):
            tp, fp, tn, fn = (int(v) for v in rng.integers(0, 1000, 4))
            c = ConfusionCounts(tp, fp, tn, fn)
            if c.total == 0:
                continue
            self.assertAlmostEqual(accuracy(c) + error(c), 1.0, places=12)

    def test_f1_from_reported_values(self):
        self.assertAlmostEqual(f1_from(0.9727, 0.8600), 0.9128, delta=0.0005)
        self.assertAlmostEqual(f1_from(0.4695, 1.0), 0.639, delta=0.001)

    def test_undefined_values(self):
        nothing_removed = ConfusionCounts(tp=0, fp=0, tn=10, fn=0)
        self.assertIsNone(precision(nothing_removed))
        self.assertIsNone(recall(nothing_removed))
        self.assertIsNone(f1(nothing_removed))
        self.assertIsNone(accuracy(ConfusionCounts(0, 0, 0, 0)))
        self.assertIsNone(f1_from(0.0, 0.0))

    def test_perfect_filter(self):
        c = confusion([0, 0, 1, 2], [False, False, True, True])
        self.assertEqual(f1(c), 1.0)
        self.assertEqual(error(c), 0.0)

    def test_negative_counts_rejected(self):
        with self.assertRaises(ContractError):
            ConfusionCounts(-1, 0, 0, 0)


class TestOpCounts(unittest.TestCase):
    """Arithmetic charged per squared distance."""

    def test_costs(self):
        self.assertEqual(squared_distance_cost(2), (3, 2))
        self.assertEqual(squared_distance_cost(3), (5, 3))

    def test_merge_and_bulk_charges(self):
        counter = OpCounts()
        counter.add_distances(3, 10)
        other = OpCounts(additions=1, multiplications=2)
        counter.merge(other)
        self.assertEqual((counter.additions, counter.multiplications), (51, 32))

    def test_plane_versus_space_ratio(self):
        rng = np.random.default_rng(52)
        points = rng.uniform(0, 20, (500, 3))
        _, ops_3d = op_counted_run(dbscan, points, DbscanParams(1.0, 10), False)
        _, ops_2d = op_counted_run(dbscan, points[:, :2], DbscanParams(1.0, 10), False)
        self.assertEqual(ops_2d.multiplications * 3, ops_3d.multiplications * 2)
        self.assertEqual(ops_3d.multiplications, 3 * 500 * 500)


class TestMetricsCsv(unittest.TestCase):
    """CSV rendering of metric rows."""

    def test_undefined_values_render_as_na(self):
        row = MetricsRow(filter='sor', parameters={'k': 10, 'stddev_mult': 1.0},
                         counts=ConfusionCounts(0, 0, 5, 0))
        record = row.as_record()
        self.assertEqual(record['precision'], 'n/a')
        self.assertEqual(record['f1'], 'n/a')
        self.assertEqual(record['additions'], 'n/a')
        self.assertEqual(record['wall_ms'], '')
        self.assertEqual(record['parameters'], 'k=10;stddev_mult=1.0')

    def test_write_and_read_back(self):
        rows = [
            MetricsRow(filter='pcaac', counts=ConfusionCounts(9, 1, 88, 2),
                       ops=OpCounts(30, 20), wall_ms=12.5),
            MetricsRow(filter='ror', note='failed: boom'),
        ]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "metrics.csv"
            write_metrics_csv(rows, path)
            with open(path, newline='') as f:
                records = list(csv.DictReader(f))
            self.assertEqual(list(records[0].keys()), CSV_COLUMNS)
        self.assertEqual(records[0]['tp'], '9')
        self.assertEqual(records[0]['multiplications'], '20')
        self.assertEqual(records[0]['wall_ms'], '12.500')
        self.assertEqual(records[0]['precision'], '0.900000')
        self.assertEqual(records[1]['tp'], '')
        self.assertEqual(records[1]['note'], 'failed: boom')


if __name__ == '__main__':
    unittest.main()
