"""Point cloud data types, ground-truth / predicted labels and XYZ / PLY file I/O."""
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from plyfile import PlyData, PlyElement, PlyParseError

from .errors import CloudFormatError, ContractError, UnsupportedFormatError
from .logger import get_logger
from .utils import atomic_write

logger = get_logger(__name__)

PathLike = Union[str, Path]


class NoiseLabel(IntEnum):
    """Ground-truth class of a point; codes are the on-disk label values."""

    SIGNAL = 0
    ISOLATED_OUTLIER = 1
    CLUSTERED_NOISE = 2
    NEAR_SIGNAL_NOISE = 3


@dataclass(frozen=True)
class Point3:
    """A finite 3D position in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for axis in ('x', 'y', 'z'):
            value = float(getattr(self, axis))
            if not math.isfinite(value):
                raise ContractError(f"non-finite {axis} coordinate: {value}")
            object.__setattr__(self, axis, value)

    @classmethod
    def of(cls, values: Iterable[float]) -> "Point3":
        x, y, z = values
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


ORIGIN = Point3(0.0, 0.0, 0.0)


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    """
    An ordered point set with optional labels.

    ``points`` is an (m, 3) float64 array. ``truth`` holds NoiseLabel codes,
    ``predicted`` is a boolean array where True means the point was removed
    as noise. Arrays are copied on construction and made read-only.
    """

    points: np.ndarray
    truth: Optional[np.ndarray] = None
    predicted: Optional[np.ndarray] = None
    sensor_origin: Point3 = ORIGIN

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.size == 0:
            points = points.reshape(0, 3)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ContractError(f"points must have shape (m, 3), got {points.shape}")
        if not np.isfinite(points).all():
            raise ContractError("points contain NaN or infinite coordinates")
        object.__setattr__(self, 'points', _read_only(points))

        m = points.shape[0]
        if self.truth is not None:
            truth = np.array(self.truth, dtype=np.int8).reshape(-1)
            if truth.shape[0] != m:
                raise ContractError(f"truth has {truth.shape[0]} labels for {m} points")
            if truth.size and (truth.min() < 0 or truth.max() > max(NoiseLabel)):
                raise ContractError("truth labels must be NoiseLabel codes 0-3")
            object.__setattr__(self, 'truth', _read_only(truth))
        if self.predicted is not None:
            predicted = np.array(self.predicted, dtype=bool).reshape(-1)
            if predicted.shape[0] != m:
                raise ContractError(f"predicted has {predicted.shape[0]} labels for {m} points")
            object.__setattr__(self, 'predicted', _read_only(predicted))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def truth_noise(self) -> np.ndarray:
        """Binary ground truth: True for any of the three noise classes."""
        if self.truth is None:
            raise ContractError("cloud has no ground-truth labels")
        return self.truth != NoiseLabel.SIGNAL

    def subset(self, indices: np.ndarray) -> "LabeledCloud":
        """Points at ``indices`` (in the given order) with their labels."""
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledCloud(
            points=self.points[indices],
            truth=None if self.truth is None else self.truth[indices],
            predicted=None if self.predicted is None else self.predicted[indices],
            sensor_origin=self.sensor_origin,
        )

    def with_predicted(self, predicted: np.ndarray) -> "LabeledCloud":
        return LabeledCloud(self.points, self.truth, predicted, self.sensor_origin)

    def with_points(self, points: np.ndarray) -> "LabeledCloud":
        return LabeledCloud(points, self.truth, self.predicted, self.sensor_origin)


@dataclass(frozen=True)
class BoundingStats:
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    z_range: Tuple[float, float]
    density: float


def bounding_stats(cloud: LabeledCloud) -> BoundingStats:
    """Axis ranges and points per cubic meter; axis extents under 1 m count as 1 m."""
    if len(cloud) == 0:
        raise ContractError("bounding_stats needs a non-empty cloud")
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    extents = np.maximum(hi - lo, 1.0)
    density = len(cloud) / float(np.prod(extents))
    return BoundingStats(
        x_range=(float(lo[0]), float(hi[0])),
        y_range=(float(lo[1]), float(hi[1])),
        z_range=(float(lo[2]), float(hi[2])),
        density=density,
    )


# ---------------------------------------------------------------- XYZ

def _parse_label(token: str, line_no: int) -> int:
    try:
        code = int(token)
    except ValueError:
        raise CloudFormatError(f"label '{token}' is not an integer code", line_no)
    try:
        return NoiseLabel(code).value
    except ValueError:
        raise CloudFormatError(f"label code {code} outside 0-3", line_no)


def load_xyz(path: PathLike, sensor_origin: Point3 = ORIGIN) -> LabeledCloud:
    """
    Read ``x y z [label]`` lines.

    Blank lines and lines starting with '#' are skipped. The label column
    must be present on every data line or on none.
    """
    path = Path(path)
    points: List[Tuple[float, float, float]] = []
    labels: List[int] = []
    labeled: Optional[bool] = None

    with open(path, 'r', encoding='utf-8') as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            fields = line.split()
            if len(fields) not in (3, 4):
                raise CloudFormatError(f"expected 3 or 4 fields, got {len(fields)}", line_no)
            try:
                coords = tuple(float(v) for v in fields[:3])
            except ValueError:
                raise CloudFormatError(f"non-numeric coordinate in '{line}'", line_no)
            if not all(math.isfinite(v) for v in coords):
                raise CloudFormatError(f"non-finite coordinate in '{line}'", line_no)

            has_label = len(fields) == 4
            if labeled is None:
                labeled = has_label
            elif labeled != has_label:
                raise CloudFormatError("mixed labeled and unlabeled lines", line_no)
            if has_label:
                labels.append(_parse_label(fields[3], line_no))
            points.append(coords)

    logger.debug(f"Loaded {len(points)} points from {path}")
    return LabeledCloud(
        points=np.array(points, dtype=np.float64).reshape(-1, 3),
        truth=np.array(labels, dtype=np.int8) if labeled else None,
        sensor_origin=sensor_origin,
    )


def save_xyz(cloud: LabeledCloud, path: PathLike, include_labels: bool = False) -> None:
    """Write one point per line with 17 significant digits, optionally with truth codes."""
    if include_labels and cloud.truth is None:
        raise ContractError("include_labels requires ground-truth labels")
    lines = []
    for i, (x, y, z) in enumerate(cloud.points):
        row = f"{x:.17g} {y:.17g} {z:.17g}"
        if include_labels:
            row += f" {int(cloud.truth[i])}"
        lines.append(row + "\n")
    with atomic_write(path) as tmp:
        with open(tmp, 'w', encoding='utf-8') as f:
            f.writelines(lines)
    logger.debug(f"Wrote {len(cloud)} points to {path}")


# ---------------------------------------------------------------- PLY

def _check_ascii_header(path: Path) -> None:
    with open(path, 'rb') as f:
        magic = f.readline().strip()
        if magic != b'ply':
            raise CloudFormatError("missing 'ply' magic line", 1)
        for line_no, raw in enumerate(f, start=2):
            line = raw.strip()
            if line.startswith(b'format'):
                if not line.startswith(b'format ascii'):
                    fmt = line.decode('ascii', errors='replace')
                    raise UnsupportedFormatError(f"only ASCII PLY is supported ({fmt})", line_no)
                return
            if line == b'end_header':
                break
    raise CloudFormatError("PLY header has no format line")


def load_ply(path: PathLike, sensor_origin: Point3 = ORIGIN) -> LabeledCloud:
    """Read an ASCII PLY file with vertex properties x, y, z and optional label."""
    path = Path(path)
    _check_ascii_header(path)
    try:
        ply = PlyData.read(str(path))
    except (PlyParseError, ValueError, IndexError) as e:
        raise CloudFormatError(f"cannot parse PLY {path}: {e}")

    names = [element.name for element in ply.elements]
    if 'vertex' not in names:
        raise CloudFormatError("PLY has no 'vertex' element")
    vertex = ply['vertex'].data
    fields = vertex.dtype.names or ()
    missing = [axis for axis in ('x', 'y', 'z') if axis not in fields]
    if missing:
        raise CloudFormatError(f"vertex element lacks properties {', '.join(missing)}")

    points = np.column_stack([np.asarray(vertex[axis], dtype=np.float64)
                              for axis in ('x', 'y', 'z')]).reshape(-1, 3)
    if not np.isfinite(points).all():
        raise CloudFormatError("PLY contains non-finite coordinates")

    truth = None
    if 'label' in fields:
        truth = np.asarray(vertex['label'], dtype=np.int64)
        if truth.size and (truth.min() < 0 or truth.max() > max(NoiseLabel)):
            raise CloudFormatError("label codes must be within 0-3")

    logger.debug(f"Loaded {points.shape[0]} points from {path}")
    return LabeledCloud(points=points, truth=truth, sensor_origin=sensor_origin)


def save_ply(cloud: LabeledCloud, path: PathLike, include_labels: bool = False) -> None:
    """
    Write ASCII PLY.

    Coordinates are stored as ``double`` so the file round-trips bit-identically.
    """
    if include_labels and cloud.truth is None:
        raise ContractError("include_labels requires ground-truth labels")
    dtype = [('x', 'f8'), ('y', 'f8'), ('z', 'f8')]
    if include_labels:
        dtype.append(('label', 'u1'))
    vertex = np.empty(len(cloud), dtype=dtype)
    vertex['x'] = cloud.points[:, 0]
    vertex['y'] = cloud.points[:, 1]
    vertex['z'] = cloud.points[:, 2]
    if include_labels:
        vertex['label'] = cloud.truth

    element = PlyElement.describe(vertex, 'vertex')
    with atomic_write(path) as tmp:
        PlyData([element], text=True).write(str(tmp))
    logger.debug(f"Wrote {len(cloud)} points to {path}")


# ---------------------------------------------------------------- dispatch + sidecars

def load_cloud(path: PathLike, sensor_origin: Point3 = ORIGIN) -> LabeledCloud:
    """Load by extension: ``.ply`` as PLY, anything else as XYZ."""
    if Path(path).suffix.lower() == '.ply':
        return load_ply(path, sensor_origin)
    return load_xyz(path, sensor_origin)


def save_cloud(cloud: LabeledCloud, path: PathLike, include_labels: bool = False) -> None:
    if Path(path).suffix.lower() == '.ply':
        save_ply(cloud, path, include_labels)
    else:
        save_xyz(cloud, path, include_labels)


def save_labels(predicted: np.ndarray, path: PathLike) -> None:
    """Write predicted labels as one code per line (0 = signal, 1 = noise)."""
    codes = np.asarray(predicted, dtype=bool).astype(np.int8)
    with atomic_write(path) as tmp:
        tmp.write_text(''.join(f"{c}\n" for c in codes), encoding='utf-8')


def load_labels(path: PathLike) -> np.ndarray:
    """Read a predicted-label file; truth codes 1-3 are accepted and collapse to noise."""
    codes = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            codes.append(_parse_label(line, line_no))
    return np.array(codes, dtype=np.int8) != NoiseLabel.SIGNAL
