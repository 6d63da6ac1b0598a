"""Equal-volume cylinder-shell segmentation around the sensor."""
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .cloud_model import LabeledCloud, Point3
from .errors import ContractError, DegenerateGeometryError, OutOfDomainError
from .logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CylinderShells:
    """
    t concentric vertical cylinders with r_i = sqrt(i) * r_1.

    Shell i is the ring r_{i-1} < d <= r_i (r_0 = 0) in horizontal distance
    from ``center``; all shells have the same footprint area.
    """

    t: int
    r_1: float
    r_max: float
    height_interval: Tuple[float, float]
    center: Point3

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.arange(1, self.t + 1, dtype=np.float64)) * self.r_1

    @property
    def height(self) -> float:
        return self.height_interval[1] - self.height_interval[0]

    def volumes(self) -> np.ndarray:
        """Volume of every shell, with heights floored at 1 m like bounding_stats."""
        r = np.concatenate(([0.0], self.radii))
        return math.pi * np.diff(r ** 2) * max(self.height, 1.0)


@dataclass(frozen=True, eq=False)
class Region:
    """Points of one shell and their indices into the source cloud."""

    index: int
    points: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return self.indices.shape[0]


def horizontal_distances(points: np.ndarray, center: Point3) -> np.ndarray:
    offsets = np.asarray(points, dtype=np.float64)[:, :2] - (center.x, center.y)
    return np.hypot(offsets[:, 0], offsets[:, 1])


def build_shells(cloud: LabeledCloud, t: int) -> CylinderShells:
    """r_1 = r_max / sqrt(t), r_max being the farthest horizontal point distance."""
    if len(cloud) == 0:
        raise ContractError("cannot build shells for an empty cloud")
    if t < 1:
        raise ContractError(f"shell count must be >= 1, got {t}")
    r_max = float(horizontal_distances(cloud.points, cloud.sensor_origin).max())
    if r_max == 0.0:
        raise DegenerateGeometryError("every point lies on the sensor axis (r_max = 0)")
    z = cloud.points[:, 2]
    shells = CylinderShells(
        t=t,
        r_1=r_max / math.sqrt(t),
        r_max=r_max,
        height_interval=(float(z.min()), float(z.max())),
        center=cloud.sensor_origin,
    )
    logger.debug(f"Built {t} shells, r_1={shells.r_1:.3f} m, r_max={r_max:.3f} m")
    return shells


def _regions_for(shells: CylinderShells, distances: np.ndarray) -> np.ndarray:
    # r_t can round just below r_max; the farthest point still belongs to shell t
    limit = max(shells.radii[-1], shells.r_max)
    if distances.size and distances.max() > limit:
        raise OutOfDomainError(f"horizontal distance {distances.max():.6g} m exceeds r_t = {limit:.6g} m")
    regions = np.searchsorted(shells.radii, distances, side='left') + 1
    return np.minimum(regions, shells.t)


def assign_region(shells: CylinderShells, p: Point3) -> int:
    """Smallest i with horizontal distance <= r_i (1-based)."""
    distance = horizontal_distances(p.as_array().reshape(1, 3), shells.center)
    return int(_regions_for(shells, distance)[0])


def assign_regions(shells: CylinderShells, points: np.ndarray) -> np.ndarray:
    """Vectorized assign_region for an (m, 3) array."""
    return _regions_for(shells, horizontal_distances(points, shells.center))


def split(cloud: LabeledCloud, shells: CylinderShells) -> List[Region]:
    """Partition the cloud into t regions; empty regions are kept."""
    labels = assign_regions(shells, cloud.points)
    regions = []
    for i in range(1, shells.t + 1):
        indices = np.flatnonzero(labels == i)
        regions.append(Region(index=i, points=cloud.points[indices], indices=indices))
    logger.debug("Region sizes: " + ", ".join(str(len(r)) for r in regions))
    return regions
