"""End-to-end filter quality on the bundled calibration scene."""
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.commands import Algo, cmd_compare, resolve_settings, run_filter, scene_of_size
from src.config_manager import ConfigManager
from src.region_segment import assign_regions, build_shells
from src.scene_gen import describe, generate, load_spec

DEFAULT_SCENE = Path(__file__).parent.parent / "config" / "default_scene.yaml"


def feature_slice(manifest, kind: str) -> slice:
    """Index range of the first feature of ``kind`` in generation order."""
    start = 0
    for feature in manifest.features:
        if feature.kind == kind:
            return slice(start, start + feature.count)
        start += feature.count
    raise KeyError(kind)


class TestDefaultSceneFiltering(unittest.TestCase):
    """PCAAC against the reference filters on the calibrated scene."""

    @classmethod
    def setUpClass(cls):
        spec = load_spec(DEFAULT_SCENE)
        cls.cloud = generate(spec)
        cls.lamp = feature_slice(describe(spec), 'lamp')
        cls.ground = feature_slice(describe(spec), 'ground')
        cls.settings = resolve_settings(ConfigManager())
        cls.tmp = tempfile.TemporaryDirectory()
        cls.rows = {row.filter: row for row in cmd_compare(
            Path(cls.tmp.name) / "compare.csv", spec_path=DEFAULT_SCENE,
            settings=cls.settings, record_timing=False)}

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_lamp_is_sparse_enough_to_matter(self):
        self.assertEqual(self.lamp.stop - self.lamp.start, 16)

    def test_radius_filter_removes_the_lamp(self):
        run = run_filter(self.cloud, Algo.ROR, self.settings)
        removed = np.count_nonzero(run.predicted[self.lamp])
        self.assertGreaterEqual(removed, 0.8 * 16)

    def test_pcaac_keeps_the_lamp(self):
        run = run_filter(self.cloud, Algo.PCAAC, self.settings)
        removed = np.count_nonzero(run.predicted[self.lamp])
        self.assertLessEqual(removed, 0.1 * 16)

    def test_grassland_stays_inside_the_inner_shells(self):
        shells = build_shells(self.cloud, self.settings.pipeline.t)
        regions = assign_regions(shells, self.cloud.points[self.ground])
        self.assertLessEqual(int(regions.max()), 3)

    def test_pcaac_keeps_the_grassland(self):
        run = run_filter(self.cloud, Algo.PCAAC, self.settings)
        self.assertLessEqual(np.count_nonzero(run.predicted[self.ground]), 5)

    def test_pcaac_beats_neighborhood_filters(self):
        pcaac = self.rows['pcaac'].f1
        self.assertGreaterEqual(pcaac, 0.85)
        for name in ('ror', 'sor', 'sor2'):
            self.assertIsNotNone(self.rows[name].f1, name)
            self.assertGreater(pcaac, self.rows[name].f1, name)

    def test_pcaac_ranks_first(self):
        best = max(self.rows.values(), key=lambda row: row.f1 or 0.0)
        self.assertEqual(best.filter, 'pcaac')

    def test_every_filter_produced_a_row(self):
        self.assertEqual(set(self.rows), {a.value for a in Algo})
        for row in self.rows.values():
            self.assertEqual(row.note, "")


if __name__ == '__main__':
    unittest.main()


class TestScaledScene(unittest.TestCase):
    """PCAAC against 3D DBSCAN on tiled copies of the calibrated scene, grid index on."""

    @classmethod
    def setUpClass(cls):
        cls.settings = resolve_settings(ConfigManager())
        cls.base = load_spec(DEFAULT_SCENE)

    def test_pcaac_is_cheaper_than_dbscan3d(self):
        for m in (20000, 100000):
            with self.subTest(m=m):
                cloud = scene_of_size(self.base, m, seed=3)
                pcaac = run_filter(cloud, Algo.PCAAC, self.settings)
                dbscan3d = run_filter(cloud, Algo.DBSCAN3D, self.settings)
                self.assertLess(pcaac.ops.multiplications, dbscan3d.ops.multiplications)
                self.assertLess(pcaac.wall_ms, dbscan3d.wall_ms)
