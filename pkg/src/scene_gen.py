"""Deterministic synthetic LiDAR scenes with ground-truth noise labels."""
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml
from scipy.spatial import cKDTree

from .cloud_model import LabeledCloud, NoiseLabel, Point3
from .errors import ContractError, GenerationError, SpecParseError
from .logger import get_logger

logger = get_logger(__name__)

Range = Tuple[float, float]
Vec3 = Tuple[float, float, float]

# Candidates drawn per requested outlier before giving up.
OUTLIER_ATTEMPTS_PER_POINT = 1000
_EPS = 1e-9


def _check_range(name: str, value: Range) -> Range:
    lo, hi = (float(v) for v in value)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ContractError(f"{name} must be a finite [low, high] interval, got {value}")
    return lo, hi


def _inside(value: Range, outer: Range) -> bool:
    return outer[0] - _EPS <= value[0] and value[1] <= outer[1] + _EPS


@dataclass(frozen=True)
class Box:
    x: Range
    y: Range
    z: Range = (-math.inf, math.inf)

    def __post_init__(self):
        object.__setattr__(self, 'x', _check_range('box x', self.x))
        object.__setattr__(self, 'y', _check_range('box y', self.y))
        lo, hi = (float(v) for v in self.z)
        object.__setattr__(self, 'z', (lo, hi))

    @property
    def volume(self) -> float:
        return ((self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
                * (self.z[1] - self.z[0]))


@dataclass(frozen=True)
class GroundPatch:
    """Rough grid of points, clipped to a disc around ``center`` and/or an XY box."""

    spacing: float = 1.0
    roughness: float = 0.0
    radius: Optional[float] = None
    center: Tuple[float, float] = (0.0, 0.0)
    box: Optional[Box] = None
    name: str = "ground"

    def __post_init__(self):
        if not self.spacing > 0:
            raise ContractError(f"ground spacing must be positive, got {self.spacing}")
        if self.roughness < 0:
            raise ContractError(f"ground roughness must be >= 0, got {self.roughness}")
        if self.radius is not None and not self.radius > 0:
            raise ContractError(f"ground radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Building:
    """Axis-aligned box shell (four walls and a roof) standing on the ground."""

    x: Range
    y: Range
    height: float
    spacing: float = 0.2
    name: str = "building"

    def __post_init__(self):
        object.__setattr__(self, 'x', _check_range(f'{self.name} x', self.x))
        object.__setattr__(self, 'y', _check_range(f'{self.name} y', self.y))
        if not self.height > 0 or not self.spacing > 0:
            raise ContractError(f"{self.name}: height and spacing must be positive")


@dataclass(frozen=True)
class Lamp:
    """Sparse vertical line of points."""

    x: float
    y: float
    height: float
    spacing: float = 0.5
    name: str = "lamp"

    def __post_init__(self):
        if not self.height > 0 or not self.spacing > 0:
            raise ContractError(f"{self.name}: height and spacing must be positive")


@dataclass(frozen=True)
class Tree:
    """Crown as ``count`` points uniform in an ellipsoid."""

    center: Vec3
    radii: Vec3
    count: int
    name: str = "tree"

    def __post_init__(self):
        if self.count < 0 or min(self.radii) <= 0:
            raise ContractError(f"{self.name}: count must be >= 0 and radii positive")


@dataclass(frozen=True)
class NoiseBall:
    center: Vec3
    radius: float
    count: int

    def __post_init__(self):
        if self.count < 0 or not self.radius > 0:
            raise ContractError("noise ball needs count >= 0 and a positive radius")


@dataclass(frozen=True)
class SceneSpec:
    """
    Scene description; the generated cloud is a pure function of it.

    Extent defaults to [-80, 80] m x [-80, 80] m x [0, 20] m. Every feature
    must lie inside the extent.
    """

    seed: int = 0
    extent_x: Range = (-80.0, 80.0)
    extent_y: Range = (-80.0, 80.0)
    extent_z: Range = (0.0, 20.0)
    sensor_origin: Vec3 = (0.0, 0.0, 0.0)
    ground: Tuple[GroundPatch, ...] = ()
    buildings: Tuple[Building, ...] = ()
    lamps: Tuple[Lamp, ...] = ()
    trees: Tuple[Tree, ...] = ()
    outlier_count: int = 0
    outlier_clearance: float = 5.0
    outlier_box: Optional[Box] = None
    cluster_noise: Tuple[NoiseBall, ...] = ()
    near_signal_stddev: float = 0.5
    near_signal_count: int = 0

    def __post_init__(self):
        for axis in ('extent_x', 'extent_y', 'extent_z'):
            object.__setattr__(self, axis, _check_range(axis, getattr(self, axis)))
        for name in ('ground', 'buildings', 'lamps', 'trees', 'cluster_noise'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.outlier_count < 0 or self.near_signal_count < 0:
            raise ContractError("noise counts must be non-negative")
        if not self.outlier_clearance >= 0 or not self.near_signal_stddev >= 0:
            raise ContractError("outlier clearance and near-signal stddev must be >= 0")
        self._check_within_extent()

    def _check_within_extent(self) -> None:
        ex, ey, ez = self.extent_x, self.extent_y, self.extent_z
        for b in self.buildings:
            if not (_inside(b.x, ex) and _inside(b.y, ey) and ez[0] + b.height <= ez[1] + _EPS):
                raise ContractError(f"{b.name} lies outside the scene extent")
        for lamp in self.lamps:
            if not (_inside((lamp.x, lamp.x), ex) and _inside((lamp.y, lamp.y), ey)
                    and ez[0] + lamp.height <= ez[1] + _EPS):
                raise ContractError(f"{lamp.name} lies outside the scene extent")
        for tree in self.trees:
            if not self._ball_inside(tree.center, tree.radii):
                raise ContractError(f"{tree.name} lies outside the scene extent")
        for ball in self.cluster_noise:
            if not self._ball_inside(ball.center, (ball.radius,) * 3):
                raise ContractError(f"noise ball at {ball.center} lies outside the scene extent")
        if self.outlier_box is not None:
            box = self.outlier_box
            if not (_inside(box.x, ex) and _inside(box.y, ey) and _inside(box.z, ez)):
                raise ContractError("outlier box lies outside the scene extent")

    def _ball_inside(self, center: Vec3, radii: Vec3) -> bool:
        return all(_inside((c - r, c + r), extent) for c, r, extent in
                   zip(center, radii, (self.extent_x, self.extent_y, self.extent_z)))

    @property
    def extent_box(self) -> Box:
        return Box(self.extent_x, self.extent_y, self.extent_z)


@dataclass(frozen=True)
class FeatureCount:
    name: str
    kind: str
    label: NoiseLabel
    count: int


@dataclass(frozen=True)
class SceneManifest:
    """Per-feature point counts and per-label totals of a generated scene."""

    features: Tuple[FeatureCount, ...] = ()

    @property
    def label_totals(self) -> Dict[NoiseLabel, int]:
        totals: Dict[NoiseLabel, int] = {}
        for feature in self.features:
            totals[feature.label] = totals.get(feature.label, 0) + feature.count
        return totals

    @property
    def total(self) -> int:
        return sum(f.count for f in self.features)

    def is_empty(self) -> bool:
        return not self.features


@dataclass
class _Part:
    feature: FeatureCount
    points: np.ndarray


# ---------------------------------------------------------------- feature samplers

def _axis_samples(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / spacing + _EPS)) + 1
    return lo + spacing * np.arange(n)


def _sample_ground(patch: GroundPatch, spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    xs = _axis_samples(*spec.extent_x, patch.spacing)
    ys = _axis_samples(*spec.extent_y, patch.spacing)
    gx, gy = np.meshgrid(xs, ys, indexing='xy')
    gx, gy = gx.ravel(), gy.ravel()
    keep = np.ones(gx.shape[0], dtype=bool)
    if patch.radius is not None:
        keep &= np.hypot(gx - patch.center[0], gy - patch.center[1]) <= patch.radius
    if patch.box is not None:
        keep &= ((gx >= patch.box.x[0]) & (gx <= patch.box.x[1])
                 & (gy >= patch.box.y[0]) & (gy <= patch.box.y[1]))
    for b in spec.buildings:
        keep &= ~((gx >= b.x[0]) & (gx <= b.x[1]) & (gy >= b.y[0]) & (gy <= b.y[1]))
    gx, gy = gx[keep], gy[keep]
    gz = spec.extent_z[0] + patch.roughness * rng.uniform(0.0, 1.0, gx.shape[0])
    return np.column_stack((gx, gy, gz))


def _edge(start: Tuple[float, float], end: Tuple[float, float], spacing: float) -> np.ndarray:
    length = math.hypot(end[0] - start[0], end[1] - start[1])
    n = max(1, int(round(length / spacing)))
    t = np.arange(n) / n
    return np.column_stack((start[0] + t * (end[0] - start[0]), start[1] + t * (end[1] - start[1])))


def _sample_building(b: Building, z0: float) -> np.ndarray:
    (x0, x1), (y0, y1) = b.x, b.y
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    footprint = np.vstack([_edge(corners[i], corners[(i + 1) % 4], b.spacing) for i in range(4)])
    levels = z0 + b.spacing * np.arange(1, int(math.floor(b.height / b.spacing + _EPS)) + 1)
    walls = np.column_stack((np.tile(footprint, (levels.shape[0], 1)),
                             np.repeat(levels, footprint.shape[0])))
    rx = _axis_samples(x0, x1, b.spacing)[1:-1]
    ry = _axis_samples(y0, y1, b.spacing)[1:-1]
    gx, gy = np.meshgrid(rx, ry, indexing='xy')
    roof = np.column_stack((gx.ravel(), gy.ravel(), np.full(gx.size, z0 + b.height)))
    return np.vstack((walls, roof))


def _sample_lamp(lamp: Lamp, z0: float) -> np.ndarray:
    levels = z0 + lamp.spacing * np.arange(1, int(math.floor(lamp.height / lamp.spacing + _EPS)) + 1)
    return np.column_stack((np.full(levels.shape[0], lamp.x), np.full(levels.shape[0], lamp.y), levels))


def _uniform_in_ellipsoid(center: Vec3, radii: Vec3, count: int,
                          rng: np.random.Generator) -> np.ndarray:
    directions = rng.normal(size=(count, 3))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    scale = rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / 3.0)
    return np.asarray(center) + directions / norms * scale * np.asarray(radii)


def _sample_outliers(spec: SceneSpec, signal: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    count = spec.outlier_count
    if count == 0:
        return np.empty((0, 3))
    box = spec.outlier_box or spec.extent_box
    tree = cKDTree(signal) if signal.shape[0] else None
    lo = np.array([box.x[0], box.y[0], box.z[0]])
    hi = np.array([box.x[1], box.y[1], box.z[1]])
    accepted: List[np.ndarray] = []
    found, drawn = 0, 0
    budget = OUTLIER_ATTEMPTS_PER_POINT * count
    while found < count:
        if drawn >= budget:
            raise GenerationError(
                f"placed only {found} of {count} outliers {spec.outlier_clearance} m away "
                f"from signal after {drawn} candidates")
        batch = min(max(64, 2 * (count - found)), budget - drawn)
        candidates = rng.uniform(lo, hi, (batch, 3))
        drawn += batch
        if tree is not None:
            distances, _ = tree.query(candidates, k=1)
            candidates = candidates[distances >= spec.outlier_clearance]
        take = candidates[:count - found]
        accepted.append(take)
        found += take.shape[0]
    return np.vstack(accepted)


def _build(spec: SceneSpec) -> List[_Part]:
    rng = np.random.default_rng(spec.seed)
    z0 = spec.extent_z[0]
    parts: List[_Part] = []

    def add(name: str, kind: str, label: NoiseLabel, points: np.ndarray) -> None:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        parts.append(_Part(FeatureCount(name, kind, label, points.shape[0]), points))

    for patch in spec.ground:
        add(patch.name, 'ground', NoiseLabel.SIGNAL, _sample_ground(patch, spec, rng))
    for b in spec.buildings:
        add(b.name, 'building', NoiseLabel.SIGNAL, _sample_building(b, z0))
    for lamp in spec.lamps:
        add(lamp.name, 'lamp', NoiseLabel.SIGNAL, _sample_lamp(lamp, z0))
    for tree in spec.trees:
        add(tree.name, 'tree', NoiseLabel.SIGNAL,
            _uniform_in_ellipsoid(tree.center, tree.radii, tree.count, rng))

    signal = np.vstack([p.points for p in parts]) if parts else np.empty((0, 3))

    if spec.near_signal_count:
        if signal.shape[0] == 0:
            raise GenerationError("near-signal noise requested but the scene has no signal points")
        picks = rng.choice(signal.shape[0], spec.near_signal_count,
                           replace=spec.near_signal_count > signal.shape[0])
        displaced = signal[picks] + rng.normal(0.0, spec.near_signal_stddev,
                                               (spec.near_signal_count, 3))
        lo = np.array([spec.extent_x[0], spec.extent_y[0], spec.extent_z[0]])
        hi = np.array([spec.extent_x[1], spec.extent_y[1], spec.extent_z[1]])
        add('near_signal_noise', 'near_signal_noise', NoiseLabel.NEAR_SIGNAL_NOISE,
            np.clip(displaced, lo, hi))

    for n, ball in enumerate(spec.cluster_noise, start=1):
        add(f'noise_cluster_{n}', 'cluster_noise', NoiseLabel.CLUSTERED_NOISE,
            _uniform_in_ellipsoid(ball.center, (ball.radius,) * 3, ball.count, rng))

    if spec.outlier_count:
        add('outliers', 'outliers', NoiseLabel.ISOLATED_OUTLIER, _sample_outliers(spec, signal, rng))
    return parts


def generate(spec: SceneSpec) -> LabeledCloud:
    """Sample every feature, then inject the three noise classes, in a fixed order."""
    parts = _build(spec)
    if parts:
        points = np.vstack([p.points for p in parts])
        truth = np.concatenate([np.full(p.points.shape[0], p.feature.label, dtype=np.int8)
                                for p in parts])
    else:
        points, truth = np.empty((0, 3)), np.empty(0, dtype=np.int8)
    logger.info(f"Generated scene with {points.shape[0]} points "
                f"({int(np.count_nonzero(truth))} noise), seed {spec.seed}")
    return LabeledCloud(points=points, truth=truth, sensor_origin=Point3.of(spec.sensor_origin))


def describe(spec: SceneSpec) -> SceneManifest:
    """Feature manifest of the scene ``generate(spec)`` produces."""
    return SceneManifest(tuple(p.feature for p in _build(spec)))


def tile(spec: SceneSpec, nx: int, ny: int) -> SceneSpec:
    """
    Repeat the scene on an nx x ny grid of extents.

    The sensor moves to the middle of the tiled extent, the outlier count is
    multiplied by the tile count and outliers are drawn over the whole
    extent.
    """
    if nx < 1 or ny < 1:
        raise ContractError("tile counts must be >= 1")
    width = spec.extent_x[1] - spec.extent_x[0]
    depth = spec.extent_y[1] - spec.extent_y[0]
    shifts = [(i * width, j * depth) for j in range(ny) for i in range(nx)]

    def moved(value: Range, offset: float) -> Range:
        return value[0] + offset, value[1] + offset

    def moved_box(box: Optional[Box], dx: float, dy: float) -> Optional[Box]:
        return None if box is None else Box(moved(box.x, dx), moved(box.y, dy), box.z)

    extent_x = (spec.extent_x[0], spec.extent_x[0] + nx * width)
    extent_y = (spec.extent_y[0], spec.extent_y[0] + ny * depth)
    return replace(
        spec,
        extent_x=extent_x,
        extent_y=extent_y,
        sensor_origin=((extent_x[0] + extent_x[1]) / 2, (extent_y[0] + extent_y[1]) / 2,
                       spec.sensor_origin[2]),
        ground=tuple(replace(g, center=(g.center[0] + dx, g.center[1] + dy),
                             box=moved_box(g.box, dx, dy)) for dx, dy in shifts for g in spec.ground),
        buildings=tuple(replace(b, x=moved(b.x, dx), y=moved(b.y, dy))
                        for dx, dy in shifts for b in spec.buildings),
        lamps=tuple(replace(lamp, x=lamp.x + dx, y=lamp.y + dy)
                    for dx, dy in shifts for lamp in spec.lamps),
        trees=tuple(replace(t, center=(t.center[0] + dx, t.center[1] + dy, t.center[2]))
                    for dx, dy in shifts for t in spec.trees),
        cluster_noise=tuple(replace(c, center=(c.center[0] + dx, c.center[1] + dy, c.center[2]))
                            for dx, dy in shifts for c in spec.cluster_noise),
        outlier_count=spec.outlier_count * len(shifts),
        outlier_box=None,
        near_signal_count=spec.near_signal_count * len(shifts),
    )


# ---------------------------------------------------------------- spec files

_TOP_KEYS = {'seed', 'extent', 'sensor_origin', 'ground', 'buildings', 'lamps', 'trees',
             'outliers', 'cluster_noise', 'near_signal_noise'}
_SECTION_KEYS = {
    'extent': {'x', 'y', 'z'},
    'ground': {'name', 'spacing', 'roughness', 'radius', 'center', 'box'},
    'buildings': {'name', 'x', 'y', 'height', 'spacing'},
    'lamps': {'name', 'x', 'y', 'height', 'spacing'},
    'trees': {'name', 'center', 'radii', 'count'},
    'outliers': {'count', 'clearance', 'box'},
    'cluster_noise': {'center', 'radius', 'count'},
    'near_signal_noise': {'stddev', 'count'},
    'box': {'x', 'y', 'z'},
}
_LIST_SECTIONS = {'ground', 'buildings', 'lamps', 'trees', 'cluster_noise'}


def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


def _check_keys(node: yaml.Node, allowed: set, context: str) -> None:
    if not isinstance(node, yaml.MappingNode):
        raise SpecParseError(f"'{context}' must be a mapping", _line(node))
    for key_node, value_node in node.value:
        key = key_node.value
        if key not in allowed:
            raise SpecParseError(f"unknown key '{key}' in {context}", _line(key_node))
        if key == 'box':
            _check_keys(value_node, _SECTION_KEYS['box'], f"{context}.box")


def _validate_tree(root: yaml.Node) -> Dict[str, int]:
    """Reject unknown keys; return the line of every list entry for later errors."""
    lines: Dict[str, int] = {}
    if root is None:
        return lines
    _check_keys(root, _TOP_KEYS, 'scene spec')
    for key_node, value_node in root.value:
        key = key_node.value
        lines[key] = _line(key_node)
        if key not in _SECTION_KEYS:
            continue
        if key in _LIST_SECTIONS:
            if not isinstance(value_node, yaml.SequenceNode):
                raise SpecParseError(f"'{key}' must be a list", _line(value_node))
            for n, item in enumerate(value_node.value):
                _check_keys(item, _SECTION_KEYS[key], f"{key}[{n}]")
                lines[f"{key}[{n}]"] = _line(item)
        else:
            _check_keys(value_node, _SECTION_KEYS[key], key)
    return lines


def _box(raw: Optional[Dict[str, Any]]) -> Optional[Box]:
    if raw is None:
        return None
    return Box(tuple(raw['x']), tuple(raw['y']), tuple(raw.get('z', (-math.inf, math.inf))))


def spec_from_dict(raw: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> SceneSpec:
    """Build a SceneSpec from parsed YAML, naming the offending entry on errors."""
    lines = lines or {}
    current = 'scene spec'
    try:
        extent = raw.get('extent', {}) or {}
        outliers = raw.get('outliers', {}) or {}
        near = raw.get('near_signal_noise', {}) or {}
        items = {}
        for section in _LIST_SECTIONS:
            items[section] = raw.get(section, []) or []

        def build(section: str, factory):
            nonlocal current
            built = []
            for n, item in enumerate(items[section]):
                current = f"{section}[{n}]"
                built.append(factory(item))
            return tuple(built)

        ground = build('ground', lambda g: GroundPatch(
            spacing=float(g.get('spacing', 1.0)), roughness=float(g.get('roughness', 0.0)),
            radius=None if g.get('radius') is None else float(g['radius']),
            center=tuple(g.get('center', (0.0, 0.0))), box=_box(g.get('box')),
            name=str(g.get('name', 'ground'))))
        buildings = build('buildings', lambda b: Building(
            x=tuple(b['x']), y=tuple(b['y']), height=float(b['height']),
            spacing=float(b.get('spacing', 0.2)), name=str(b.get('name', 'building'))))
        lamps = build('lamps', lambda lp: Lamp(
            x=float(lp['x']), y=float(lp['y']), height=float(lp['height']),
            spacing=float(lp.get('spacing', 0.5)), name=str(lp.get('name', 'lamp'))))
        trees = build('trees', lambda t: Tree(
            center=tuple(t['center']), radii=tuple(t['radii']), count=int(t['count']),
            name=str(t.get('name', 'tree'))))
        balls = build('cluster_noise', lambda c: NoiseBall(
            center=tuple(c['center']), radius=float(c['radius']), count=int(c['count'])))

        current = 'scene spec'
        return SceneSpec(
            seed=int(raw.get('seed', 0)),
            extent_x=tuple(extent.get('x', (-80.0, 80.0))),
            extent_y=tuple(extent.get('y', (-80.0, 80.0))),
            extent_z=tuple(extent.get('z', (0.0, 20.0))),
            sensor_origin=tuple(raw.get('sensor_origin', (0.0, 0.0, 0.0))),
            ground=ground, buildings=buildings, lamps=lamps, trees=trees,
            outlier_count=int(outliers.get('count', 0)),
            outlier_clearance=float(outliers.get('clearance', 5.0)),
            outlier_box=_box(outliers.get('box')),
            cluster_noise=balls,
            near_signal_stddev=float(near.get('stddev', 0.5)),
            near_signal_count=int(near.get('count', 0)),
        )
    except KeyError as e:
        raise SpecParseError(f"{current}: missing key {e}", lines.get(current))
    except (TypeError, ValueError) as e:
        raise SpecParseError(f"{current}: {e}", lines.get(current))


def load_spec(path: Union[str, Path], seed: Optional[int] = None) -> SceneSpec:
    """Read a YAML scene spec; ``seed`` overrides the file's seed."""
    path = Path(path)
    text = path.read_text(encoding='utf-8')
    try:
        lines = _validate_tree(yaml.compose(text))
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise SpecParseError(f"invalid YAML in {path}: {e}",
                             None if mark is None else mark.line + 1)
    spec = spec_from_dict(raw, lines)
    if seed is not None:
        spec = replace(spec, seed=seed)
    return spec


def spec_to_dict(spec: SceneSpec) -> Dict[str, Any]:
    """Plain-data form of a spec, for run manifests."""
    def box(b: Optional[Box]) -> Optional[Dict[str, List[float]]]:
        return None if b is None else {'x': list(b.x), 'y': list(b.y), 'z': list(b.z)}

    return {
        'seed': spec.seed,
        'extent': {'x': list(spec.extent_x), 'y': list(spec.extent_y), 'z': list(spec.extent_z)},
        'sensor_origin': list(spec.sensor_origin),
        'ground': [{'name': g.name, 'spacing': g.spacing, 'roughness': g.roughness,
                    'radius': g.radius, 'center': list(g.center), 'box': box(g.box)}
                   for g in spec.ground],
        'buildings': [{'name': b.name, 'x': list(b.x), 'y': list(b.y), 'height': b.height,
                       'spacing': b.spacing} for b in spec.buildings],
        'lamps': [{'name': lp.name, 'x': lp.x, 'y': lp.y, 'height': lp.height,
                   'spacing': lp.spacing} for lp in spec.lamps],
        'trees': [{'name': t.name, 'center': list(t.center), 'radii': list(t.radii),
                   'count': t.count} for t in spec.trees],
        'outliers': {'count': spec.outlier_count, 'clearance': spec.outlier_clearance,
                     'box': box(spec.outlier_box)},
        'cluster_noise': [{'center': list(c.center), 'radius': c.radius, 'count': c.count}
                          for c in spec.cluster_noise],
        'near_signal_noise': {'stddev': spec.near_signal_stddev, 'count': spec.near_signal_count},
    }
