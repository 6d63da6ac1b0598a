"""CLI operations as plain functions: gen, filter, eval, compare and bench."""
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import yaml

from . import __version__
from .baseline_filters import dbscan3d_filter, ror_filter, sor_filter, two_stage_sor_filter
from .cloud_model import (
    ORIGIN, LabeledCloud, NoiseLabel, Point3, load_cloud, load_labels, save_cloud, save_labels,
)
from .cluster_filter import PipelineConfig, RegionReport, run_pcaac
from .config_manager import BaselineSettings, ConfigManager
from .errors import ContractError, PcaacError
from .eval_metrics import (
    CSV_COLUMNS, MetricsRow, OpCounts, Stopwatch, confusion, op_counted_run, write_csv,
    write_metrics_csv,
)
from .logger import get_logger
from .scene_gen import SceneSpec, describe, generate, load_spec, spec_to_dict, tile
from .utils import sidecar_path, write_text_atomic

logger = get_logger(__name__)

PathLike = Union[str, Path]

MANIFEST_SUFFIX = ".manifest.yaml"
LABELS_SUFFIX = ".labels"
BENCH_COLUMNS = ['m'] + CSV_COLUMNS


class Algo(str, Enum):
    PCAAC = "pcaac"
    SOR = "sor"
    SOR2 = "sor2"
    ROR = "ror"
    DBSCAN3D = "dbscan3d"


DEFAULT_ROSTER = (Algo.PCAAC, Algo.SOR, Algo.SOR2, Algo.ROR, Algo.DBSCAN3D)


def parse_algos(text: Optional[str]) -> List[Algo]:
    """``"pcaac,ror"`` -> [Algo.PCAAC, Algo.ROR]; None or empty gives the full roster."""
    if not text:
        return list(DEFAULT_ROSTER)
    algos = []
    for name in text.split(','):
        name = name.strip().lower()
        if not name:
            continue
        try:
            algos.append(Algo(name))
        except ValueError:
            known = ', '.join(a.value for a in Algo)
            raise ContractError(f"unknown algorithm '{name}' (known: {known})")
    return algos


def _plain(value: Any) -> Any:
    """Convert dataclass dumps to types yaml.safe_dump accepts."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass(frozen=True)
class RunSettings:
    """Fully resolved filter configuration of one command."""

    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    baselines: BaselineSettings = field(default_factory=BaselineSettings)

    def as_dict(self) -> Dict[str, Any]:
        return _plain({'pipeline': asdict(self.pipeline), 'baselines': self.baselines.as_dict()})


def resolve_settings(config: ConfigManager, **overrides: Any) -> RunSettings:
    """Pipeline YAML + CLI overrides, then baselines derived from the resulting pipeline."""
    pipeline = config.get_pipeline_config(**overrides)
    return RunSettings(pipeline=pipeline, baselines=config.get_baseline_settings(pipeline))


@dataclass
class RunManifest:
    """What a command read, wrote and ran with; written next to its outputs."""

    command: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    configuration: Dict[str, Any] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    version: str = __version__
    wall_ms: Optional[float] = None

    def write(self, path: PathLike) -> Path:
        path = Path(path)
        write_text_atomic(path, yaml.safe_dump(_plain(asdict(self)), sort_keys=False))
        return path


def manifest_path(output: PathLike) -> Path:
    return sidecar_path(output, MANIFEST_SUFFIX)


def labels_path(output: PathLike) -> Path:
    return sidecar_path(output, LABELS_SUFFIX)


def label_histogram(cloud: LabeledCloud) -> Dict[str, int]:
    if cloud.truth is None:
        return {}
    counts = np.bincount(cloud.truth.astype(np.int64), minlength=len(NoiseLabel))
    return {label.name.lower(): int(counts[label]) for label in NoiseLabel}


# ---------------------------------------------------------------- filters

@dataclass
class FilterRun:
    algo: Algo
    parameters: Dict[str, Any]
    predicted: np.ndarray
    filtered: LabeledCloud
    ops: Optional[OpCounts]
    wall_ms: float
    report: List[RegionReport] = field(default_factory=list)


def filter_parameters(algo: Algo, settings: RunSettings) -> Dict[str, Any]:
    """Exact parameters a filter runs with, for the CSV parameters column."""
    p, b = settings.pipeline, settings.baselines
    if algo is Algo.PCAAC:
        params = {'t': p.t, 'epsilon_1': p.epsilon_1, 'minpts': p.minpts_default,
                  'psi': p.psi_default, 'grid': p.use_grid}
        if p.tune_minpts:
            params['minpts'] = f"tuned{list(p.minpts_search)}"
        if p.psi_ramp:
            params['psi'] = f"ramp[{p.psi_min},{p.psi_max}]x{p.psi_ramp_factor}"
        return params
    if algo is Algo.SOR:
        return {'k': b.sor.k_neighbors, 'std_mult': b.sor.stddev_mult}
    if algo is Algo.SOR2:
        return {'k1': b.sor2_pass1.k_neighbors, 'std_mult1': b.sor2_pass1.stddev_mult,
                'k2': b.sor2_pass2.k_neighbors, 'std_mult2': b.sor2_pass2.stddev_mult}
    if algo is Algo.ROR:
        return {'radius': b.ror.radius, 'min_neighbors': b.ror.min_neighbors,
                'grid': p.use_grid}
    return {'epsilon': b.dbscan3d.epsilon, 'minpts': b.dbscan3d.minpts,
            'psi': b.dbscan3d.psi, 'grid': p.use_grid}


def run_filter(cloud: LabeledCloud, algo: Algo, settings: RunSettings) -> FilterRun:
    """
    Run one filter and count its distance arithmetic.

    SOR variants on the grid path use a kd-tree and report no op counts;
    with the grid off they scan all pairs and are counted like the rest.
    """
    b, use_grid = settings.baselines, settings.pipeline.use_grid
    filtered, report, ops = None, [], None
    with Stopwatch() as watch:
        if algo is Algo.PCAAC:
            result, ops = op_counted_run(run_pcaac, cloud, settings.pipeline)
            predicted, filtered, report = result.predicted, result.filtered, result.report
        elif algo is Algo.SOR:
            predicted, ops = op_counted_run(sor_filter, cloud, b.sor, use_grid)
        elif algo is Algo.SOR2:
            predicted, ops = op_counted_run(two_stage_sor_filter, cloud, b.sor2_pass1,
                                            b.sor2_pass2, use_grid)
        elif algo is Algo.ROR:
            predicted, ops = op_counted_run(ror_filter, cloud, b.ror, use_grid)
        else:
            predicted, ops = op_counted_run(dbscan3d_filter, cloud, b.dbscan3d, use_grid)
    if use_grid and algo in (Algo.SOR, Algo.SOR2):
        ops = None
    if filtered is None:
        keep = np.flatnonzero(~predicted)
        filtered = cloud.subset(keep).with_predicted(np.zeros(keep.shape[0], dtype=bool))
    logger.info(f"{algo.value}: removed {int(predicted.sum())} of {len(cloud)} points "
                f"in {watch.elapsed_ms:.1f} ms")
    return FilterRun(algo=algo, parameters=filter_parameters(algo, settings),
                     predicted=predicted, filtered=filtered, ops=ops,
                     wall_ms=watch.elapsed_ms, report=report)


def metrics_row(cloud: LabeledCloud, run: FilterRun, record_timing: bool = True) -> MetricsRow:
    counts = confusion(cloud.truth, run.predicted) if cloud.truth is not None else None
    return MetricsRow(filter=run.algo.value, parameters=run.parameters, counts=counts,
                      ops=run.ops, wall_ms=run.wall_ms if record_timing else None)


def _sort_by_f1(rows: List[MetricsRow]) -> List[MetricsRow]:
    """Highest F1 first; undefined F1 and failed filters last, ties in roster order."""
    return sorted(rows, key=lambda row: (row.f1 is None, -(row.f1 or 0.0)))


# ---------------------------------------------------------------- commands

def cmd_gen(out_path: PathLike, spec_path: Optional[PathLike] = None, seed: Optional[int] = None,
            config: Optional[ConfigManager] = None, record_timing: bool = True) -> LabeledCloud:
    """Generate a labeled scene and write it (labels in the last column) plus a manifest."""
    config = config or ConfigManager()
    spec_path = Path(spec_path) if spec_path else config.get_scene_spec_path()
    with Stopwatch() as watch:
        spec = load_spec(spec_path, seed)
        cloud = generate(spec)
        save_cloud(cloud, out_path, include_labels=True)
    manifest = RunManifest(
        command='gen',
        inputs={'spec': str(spec_path)},
        outputs={'cloud': str(out_path)},
        configuration={'scene': spec_to_dict(spec)},
        summary={'points': len(cloud), 'labels': label_histogram(cloud)},
        wall_ms=watch.elapsed_ms if record_timing else None,
    )
    manifest.write(manifest_path(out_path))
    return cloud


def cmd_filter(in_path: PathLike, out_path: PathLike, algo: Algo = Algo.PCAAC,
               settings: Optional[RunSettings] = None, record_timing: bool = True,
               origin: Point3 = ORIGIN) -> FilterRun:
    """
    Filter a cloud; writes survivors, a predicted-label sidecar and a manifest.

    ``origin`` is the sensor position the cylinder shells are centred on.
    """
    settings = settings or RunSettings()
    cloud = load_cloud(in_path, origin)
    run = run_filter(cloud, algo, settings)
    save_cloud(run.filtered, out_path, include_labels=run.filtered.truth is not None)
    save_labels(run.predicted, labels_path(out_path))

    summary: Dict[str, Any] = {'points_in': len(cloud), 'points_out': len(run.filtered),
                               'removed': int(run.predicted.sum())}
    if run.ops is not None:
        summary['ops'] = asdict(run.ops)
    if run.report:
        summary['regions'] = [asdict(r) for r in run.report]
    RunManifest(
        command='filter',
        inputs={'cloud': str(in_path), 'sensor_origin': [origin.x, origin.y, origin.z]},
        outputs={'cloud': str(out_path), 'labels': str(labels_path(out_path))},
        configuration={'algo': algo.value, 'parameters': run.parameters, **settings.as_dict()},
        summary=summary,
        wall_ms=run.wall_ms if record_timing else None,
    ).write(manifest_path(out_path))
    return run


def cmd_eval(cloud_path: PathLike, predicted_path: PathLike, out_path: PathLike,
             filter_name: str = "predicted") -> MetricsRow:
    """Score a predicted-label file against the truth labels of a cloud."""
    cloud = load_cloud(cloud_path)
    if cloud.truth is None:
        raise ContractError(f"{cloud_path} has no ground-truth labels")
    predicted = load_labels(predicted_path)
    row = MetricsRow(filter=filter_name, counts=confusion(cloud.truth, predicted))
    write_metrics_csv([row], out_path)
    RunManifest(
        command='eval',
        inputs={'cloud': str(cloud_path), 'labels': str(predicted_path)},
        outputs={'metrics': str(out_path)},
        summary={'counts': asdict(row.counts)},
    ).write(manifest_path(out_path))
    return row


def _scene(in_path: Optional[PathLike], spec_path: Optional[PathLike], seed: Optional[int],
           config: ConfigManager) -> LabeledCloud:
    if in_path:
        return load_cloud(in_path)
    return generate(load_spec(spec_path or config.get_scene_spec_path(), seed))


def cmd_compare(out_path: PathLike, in_path: Optional[PathLike] = None,
                algos: Sequence[Algo] = DEFAULT_ROSTER, settings: Optional[RunSettings] = None,
                spec_path: Optional[PathLike] = None, seed: Optional[int] = None,
                config: Optional[ConfigManager] = None,
                record_timing: bool = True) -> List[MetricsRow]:
    """
    Run every filter on one labeled scene and write one metrics row each.

    The scene is read from ``in_path`` or generated from a spec. A filter
    that fails gets a row with its error in the note column; the table is
    sorted by F1.
    """
    config = config or ConfigManager()
    settings = settings or resolve_settings(config)
    cloud = _scene(in_path, spec_path, seed, config)
    if cloud.truth is None:
        raise ContractError("compare needs a cloud with ground-truth labels")

    rows = []
    for algo in algos:
        try:
            rows.append(metrics_row(cloud, run_filter(cloud, algo, settings), record_timing))
        except PcaacError as e:
            logger.error(f"{algo.value} failed: {e}")
            rows.append(MetricsRow(filter=algo.value, parameters=filter_parameters(algo, settings),
                                   note=str(e)))
    rows = _sort_by_f1(rows)
    write_metrics_csv(rows, out_path)
    RunManifest(
        command='compare',
        inputs={'cloud': str(in_path) if in_path else None,
                'spec': None if in_path else str(spec_path or config.get_scene_spec_path()),
                'seed': seed},
        outputs={'metrics': str(out_path)},
        configuration={'algos': [a.value for a in algos], **settings.as_dict()},
        summary={'points': len(cloud), 'labels': label_histogram(cloud)},
    ).write(manifest_path(out_path))
    return rows


def scene_of_size(base: SceneSpec, m: int, seed: int = 0,
                  base_count: Optional[int] = None) -> LabeledCloud:
    """
    A scene with exactly m points: tile the base scene until it holds at
    least m points, then keep a seeded random subset in original order.
    """
    if m < 1:
        raise ContractError(f"scene size must be >= 1, got {m}")
    base_count = base_count or describe(base).total
    if base_count == 0:
        raise ContractError("base scene is empty")
    tiles = math.ceil(m / base_count)
    nx = math.ceil(math.sqrt(tiles))
    ny = math.ceil(tiles / nx)
    cloud = generate(tile(base, nx, ny) if tiles > 1 else base)
    if len(cloud) > m:
        rng = np.random.default_rng(seed)
        cloud = cloud.subset(np.sort(rng.choice(len(cloud), m, replace=False)))
    return cloud


def cmd_bench(out_path: PathLike, sizes: Sequence[int], algos: Sequence[Algo] = DEFAULT_ROSTER,
              settings: Optional[RunSettings] = None, spec_path: Optional[PathLike] = None,
              seed: Optional[int] = None, use_grid: Optional[bool] = None,
              config: Optional[ConfigManager] = None,
              record_timing: bool = True) -> List[Dict[str, str]]:
    """Time each filter and count its distance arithmetic across scene sizes."""
    config = config or ConfigManager()
    settings = settings or resolve_settings(config)
    if use_grid is not None:
        settings = replace(settings, pipeline=replace(settings.pipeline, use_grid=use_grid))
    spec_path = Path(spec_path) if spec_path else config.get_scene_spec_path()
    base = load_spec(spec_path, seed)
    base_count = describe(base).total

    records = []
    for m in sizes:
        cloud = scene_of_size(base, m, base.seed, base_count)
        logger.info(f"Bench scene m={len(cloud)}")
        for algo in algos:
            try:
                row = metrics_row(cloud, run_filter(cloud, algo, settings), record_timing)
            except PcaacError as e:
                logger.error(f"{algo.value} failed at m={m}: {e}")
                row = MetricsRow(filter=algo.value, parameters=filter_parameters(algo, settings),
                                 note=str(e))
            records.append({'m': str(m), **row.as_record()})

    write_csv(records, out_path, BENCH_COLUMNS)
    RunManifest(
        command='bench',
        inputs={'spec': str(spec_path), 'seed': base.seed},
        outputs={'metrics': str(out_path)},
        configuration={'sizes': list(sizes), 'algos': [a.value for a in algos],
                       **settings.as_dict()},
    ).write(manifest_path(out_path))
    return records
