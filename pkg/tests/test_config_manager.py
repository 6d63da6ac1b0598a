"""Tests for YAML configuration loading and override resolution."""
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cluster_filter import PipelineConfig
from src.config_manager import THREADS_ENV, ConfigManager, thread_cap
from src.errors import SpecParseError


class TestConfigManager(unittest.TestCase):
    """Bundled config and hand-written variants."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.env = patch.dict(os.environ, {}, clear=False)
        self.env.start()
        os.environ.pop(THREADS_ENV, None)

    def tearDown(self):
        self.env.stop()
        self.tmp.cleanup()

    def write_config(self, text: str) -> ConfigManager:
        (self.dir / "pcaac_config.yaml").write_text(text)
        return ConfigManager(config_dir=str(self.dir))

    def test_bundled_config(self):
        config = ConfigManager()
        pipeline = config.get_pipeline_config()
        self.assertEqual(pipeline.t, 8)
        self.assertEqual(pipeline.epsilon_1, 1.0)
        self.assertEqual(pipeline.minpts_search, (4, 30))
        self.assertEqual(pipeline.workers, 4)
        self.assertTrue(config.get_scene_spec_path().exists())
        self.assertEqual(config.get_bench_settings().sizes, (5000, 10000, 20000))

    def test_baselines_follow_pipeline(self):
        config = ConfigManager()
        pipeline = config.get_pipeline_config(epsilon_1=2.5, minpts_default=6, psi_default=80)
        baselines = config.get_baseline_settings(pipeline)
        self.assertEqual((baselines.ror.radius, baselines.ror.min_neighbors), (2.5, 6))
        self.assertEqual((baselines.dbscan3d.epsilon, baselines.dbscan3d.minpts,
                          baselines.dbscan3d.psi), (2.5, 6, 80))
        self.assertEqual(baselines.sor2_pass2.stddev_mult, 2.0)

    def test_none_overrides_are_ignored(self):
        pipeline = ConfigManager().get_pipeline_config(t=None, epsilon_1=None, tune_minpts=True)
        self.assertEqual(pipeline.t, 8)
        self.assertTrue(pipeline.tune_minpts)

    def test_empty_file_gives_defaults(self):
        config = self.write_config("")
        self.assertEqual(config.get_pipeline_config(), PipelineConfig())
        self.assertEqual(config.get_logging_settings().level, "INFO")

    def test_unknown_key(self):
        config = self.write_config("pipeline:\n  tt: 4\n")
        with self.assertRaises(SpecParseError):
            config.get_pipeline_config()

    def test_invalid_value(self):
        config = self.write_config("pipeline:\n  psi_default: 500\n")
        with self.assertRaises(SpecParseError):
            config.get_pipeline_config()

    def test_broken_yaml(self):
        with self.assertRaises(SpecParseError):
            self.write_config("pipeline: [1, 2\n")

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            ConfigManager(config_dir=str(self.dir))

    def test_thread_cap(self):
        os.environ[THREADS_ENV] = "2"
        self.assertEqual(thread_cap(), 2)
        self.assertEqual(ConfigManager().get_pipeline_config().workers, 2)
        self.assertEqual(ConfigManager().get_pipeline_config(workers=1).workers, 1)

    def test_bad_thread_cap(self):
        os.environ[THREADS_ENV] = "many"
        with self.assertRaises(SpecParseError):
            thread_cap()
        os.environ[THREADS_ENV] = "0"
        with self.assertRaises(SpecParseError):
            thread_cap()

    def test_summary_lists_resolved_values(self):
        rows = dict(ConfigManager().summary())
        self.assertEqual(rows["pipeline.t"], "8")
        self.assertEqual(rows["baselines.ror.radius"], "1.0")


if __name__ == '__main__':
    unittest.main()
