"""Reference filters: statistical, two-stage statistical and radius outlier removal, 3D DBSCAN."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud_model import LabeledCloud
from .cluster_filter import DbscanParams, dbscan, threshold_filter
from .errors import ContractError
from .eval_metrics import OpCounts
from .logger import get_logger
from .spatial_index import knn_mean_distances, neighbor_query

logger = get_logger(__name__)


@dataclass(frozen=True)
class SorParams:
    k_neighbors: int = 10
    stddev_mult: float = 1.0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ContractError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if not self.stddev_mult > 0:
            raise ContractError(f"stddev_mult must be positive, got {self.stddev_mult}")


@dataclass(frozen=True)
class RorParams:
    radius: float = 1.0
    min_neighbors: int = 10

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractError(f"radius must be positive, got {self.radius}")
        if self.min_neighbors < 1:
            raise ContractError(f"min_neighbors must be >= 1, got {self.min_neighbors}")


@dataclass(frozen=True)
class Dbscan3dParams:
    epsilon: float = 1.0
    minpts: int = 10
    psi: int = 100

    def __post_init__(self):
        DbscanParams(self.epsilon, self.minpts)


def sor_filter(cloud: LabeledCloud, params: SorParams, use_grid: bool = True,
               counter: Optional[OpCounts] = None) -> np.ndarray:
    """
    Statistical outlier removal.

    Flags points whose mean distance to their k nearest neighbors exceeds
    mu + stddev_mult * sigma over the whole cloud. With ``use_grid`` the
    neighbors come from a kd-tree (uncounted); otherwise from a counted
    all-pairs scan.

    Returns:
        Boolean noise mask, True for removed points
    """
    if len(cloud) <= params.k_neighbors:
        raise ContractError(
            f"SOR needs more than k={params.k_neighbors} points, got {len(cloud)}")
    mean_distances = knn_mean_distances(cloud.points, params.k_neighbors, use_grid, counter)
    mu = mean_distances.mean()
    sigma = mean_distances.std()
    flagged = mean_distances > mu + params.stddev_mult * sigma
    logger.debug(f"SOR k={params.k_neighbors}: mu={mu:.4f}, sigma={sigma:.4f}, "
                 f"flagged {int(flagged.sum())}")
    return flagged


def two_stage_sor_filter(cloud: LabeledCloud, params_pass1: SorParams,
                         params_pass2: SorParams, use_grid: bool = True,
                         counter: Optional[OpCounts] = None) -> np.ndarray:
    """Run SOR, drop what it flags, run SOR again on the survivors; union of both passes."""
    flagged = sor_filter(cloud, params_pass1, use_grid, counter)
    survivors = np.flatnonzero(~flagged)
    if survivors.shape[0] <= params_pass2.k_neighbors:
        raise ContractError(
            f"second SOR pass has only {survivors.shape[0]} surviving points "
            f"(needs more than k={params_pass2.k_neighbors})")
    second = sor_filter(cloud.subset(survivors), params_pass2, use_grid, counter)
    flagged = flagged.copy()
    flagged[survivors[second]] = True
    return flagged


def ror_filter(cloud: LabeledCloud, params: RorParams, use_grid: bool = True,
               counter: Optional[OpCounts] = None) -> np.ndarray:
    """Flag points with fewer than min_neighbors other points within radius."""
    if len(cloud) == 0:
        raise ContractError("ROR needs at least one point")
    neighbors = neighbor_query(cloud.points, params.radius, use_grid, counter)
    counts = np.fromiter((neighbors(i).shape[0] - 1 for i in range(len(cloud))),
                         dtype=np.int64, count=len(cloud))
    return counts < params.min_neighbors


def dbscan3d_filter(cloud: LabeledCloud, params: Dbscan3dParams, use_grid: bool = True,
                    counter: Optional[OpCounts] = None) -> np.ndarray:
    """DBSCAN on raw 3D points, then drop noise and clusters smaller than psi."""
    labeling = dbscan(cloud.points, DbscanParams(params.epsilon, params.minpts), use_grid, counter)
    flagged = np.zeros(len(cloud), dtype=bool)
    flagged[threshold_filter(labeling, params.psi)] = True
    return flagged
