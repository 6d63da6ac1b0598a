"""Configuration management for the PCAAC toolkit."""
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv

from .baseline_filters import Dbscan3dParams, RorParams, SorParams
from .cluster_filter import PipelineConfig
from .errors import ContractError, SpecParseError
from .logger import get_logger

logger = get_logger(__name__)

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
CONFIG_FILE = "pcaac_config.yaml"
THREADS_ENV = "PCAAC_THREADS"


@dataclass(frozen=True)
class BaselineSettings:
    """Parameters of every reference filter, resolved against the pipeline defaults."""

    sor: SorParams = field(default_factory=SorParams)
    sor2_pass1: SorParams = field(default_factory=SorParams)
    sor2_pass2: SorParams = field(default_factory=lambda: SorParams(stddev_mult=2.0))
    ror: RorParams = field(default_factory=RorParams)
    dbscan3d: Dbscan3dParams = field(default_factory=Dbscan3dParams)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LoggingSettings:
    level: str = "INFO"
    log_dir: Optional[str] = None


@dataclass(frozen=True)
class BenchSettings:
    sizes: Tuple[int, ...] = (5000, 10000, 20000)
    algos: Tuple[str, ...] = ("pcaac", "ror", "dbscan3d", "sor", "sor2")
    seed: int = 7


def _build(cls, section: Dict[str, Any], name: str):
    """Instantiate a config dataclass, turning bad keys/values into SpecParseError."""
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise SpecParseError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
    try:
        return cls(**section)
    except (TypeError, ContractError) as e:
        raise SpecParseError(f"invalid '{name}' settings: {e}")


def thread_cap() -> Optional[int]:
    """Worker cap from PCAAC_THREADS, None when unset."""
    raw = os.getenv(THREADS_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        value = int(raw)
    except ValueError:
        raise SpecParseError(f"{THREADS_ENV} must be an integer, got '{raw}'")
    if value < 1:
        raise SpecParseError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


class ConfigManager:
    """Loads config/pcaac_config.yaml and builds typed settings from it."""

    def __init__(self, config_dir: Optional[str] = None, config_file: str = CONFIG_FILE):
        load_dotenv()
        self.config_dir = Path(config_dir) if config_dir else DEFAULT_CONFIG_DIR
        self.config = self._load_yaml(config_file) or {}
        if not isinstance(self.config, dict):
            raise SpecParseError(f"{self.config_dir / config_file} must hold a mapping")

    def _load_yaml(self, filename: str) -> Dict[str, Any]:
        """Load YAML configuration file."""
        config_path = self.config_dir / filename
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                return yaml.safe_load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"Configuration file not found: {config_path}")
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            raise SpecParseError(f"Error parsing YAML file {config_path}: {e}",
                                 None if mark is None else mark.line + 1)

    def _section(self, name: str) -> Dict[str, Any]:
        return dict(self.config.get(name) or {})

    def get_pipeline_config(self, **overrides: Any) -> PipelineConfig:
        """
        Pipeline settings from YAML with CLI overrides applied.

        Overrides set to None are ignored. The worker count is capped by
        PCAAC_THREADS when that variable is set.
        """
        section = self._section('pipeline')
        if 'minpts_search' in section:
            section['minpts_search'] = tuple(section['minpts_search'])
        section.update({k: v for k, v in overrides.items() if v is not None})
        config = _build(PipelineConfig, section, 'pipeline')
        cap = thread_cap()
        if cap is not None and config.workers > cap:
            logger.debug(f"{THREADS_ENV}={cap} caps workers (configured {config.workers})")
            config = replace(config, workers=cap)
        return config

    def get_baseline_settings(self, pipeline: PipelineConfig) -> BaselineSettings:
        """Baseline parameters; nulls fall back to epsilon_1 / minpts_default / psi_default."""
        section = self._section('baselines')
        sor2 = dict(section.get('sor2') or {})

        ror = {k: v for k, v in dict(section.get('ror') or {}).items() if v is not None}
        ror.setdefault('radius', pipeline.epsilon_1)
        ror.setdefault('min_neighbors', pipeline.minpts_default)

        dbscan3d = {k: v for k, v in dict(section.get('dbscan3d') or {}).items() if v is not None}
        dbscan3d.setdefault('epsilon', pipeline.epsilon_1)
        dbscan3d.setdefault('minpts', pipeline.minpts_default)
        dbscan3d.setdefault('psi', pipeline.psi_default)

        return BaselineSettings(
            sor=_build(SorParams, dict(section.get('sor') or {}), 'baselines.sor'),
            sor2_pass1=_build(SorParams, dict(sor2.get('pass1') or {}), 'baselines.sor2.pass1'),
            sor2_pass2=_build(SorParams, dict(sor2.get('pass2') or {'stddev_mult': 2.0}),
                              'baselines.sor2.pass2'),
            ror=_build(RorParams, ror, 'baselines.ror'),
            dbscan3d=_build(Dbscan3dParams, dbscan3d, 'baselines.dbscan3d'),
        )

    def get_scene_spec_path(self) -> Path:
        """Default scene spec, relative to the config directory."""
        spec = self._section('scene').get('spec', 'default_scene.yaml')
        path = Path(spec)
        return path if path.is_absolute() else self.config_dir / path

    def get_bench_settings(self) -> BenchSettings:
        section = self._section('bench')
        for key in ('sizes', 'algos'):
            if key in section:
                section[key] = tuple(section[key])
        return _build(BenchSettings, section, 'bench')

    def get_logging_settings(self) -> LoggingSettings:
        return _build(LoggingSettings, self._section('logging'), 'logging')

    def summary(self) -> List[Tuple[str, str]]:
        """(section.key, value) pairs of the resolved configuration, for display."""
        pipeline = self.get_pipeline_config()
        rows = [(f"pipeline.{k}", str(v)) for k, v in asdict(pipeline).items()]
        baselines = self.get_baseline_settings(pipeline).as_dict()
        for name, params in baselines.items():
            rows.extend((f"baselines.{name}.{k}", str(v)) for k, v in params.items())
        rows.append(("scene.spec", str(self.get_scene_spec_path())))
        return rows
