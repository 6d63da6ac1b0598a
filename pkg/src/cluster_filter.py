"""2D-DBSCAN clustering, cluster-size thresholding and the end-to-end PCAAC pipeline."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from sklearn.metrics import silhouette_score

from .cloud_model import LabeledCloud
from .errors import ContractError
from .eval_metrics import OpCounts
from .logger import get_logger
from .pca_reduce import PlaneData, reduce_region, restore, variance_ratio
from .region_segment import Region, build_shells, split
from .spatial_index import (
    DenseCellGrid, GridIndex, any_within, neighbor_query, pairwise_squared_distances,
)

logger = get_logger(__name__)

NOISE = -1
_UNVISITED = 0
MIN_REGION_POINTS = 3


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float
    minpts: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ContractError(f"epsilon must be positive, got {self.epsilon}")
        if self.minpts < 1:
            raise ContractError(f"minpts must be >= 1, got {self.minpts}")


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """
    DBSCAN result: ``labels`` holds a cluster id in 1..k or NOISE per point,
    ``core`` marks points whose neighborhood reached minpts.
    """

    labels: np.ndarray
    core: np.ndarray
    k: int

    def sizes(self) -> np.ndarray:
        """Member count of clusters 1..k (index 0 is cluster 1)."""
        clustered = self.labels[self.labels != NOISE]
        return np.bincount(clustered, minlength=self.k + 1)[1:]

    @property
    def noise_mask(self) -> np.ndarray:
        return self.labels == NOISE


@dataclass(frozen=True)
class RegionParams:
    epsilon_i: float
    minpts_i: int
    psi_i: int


@dataclass(frozen=True)
class PipelineConfig:
    """
    PCAAC settings.

    Defaults follow the method description: epsilon_1 = 1, minpts = 10,
    psi = 100 within [50, 200].
    """

    t: int = 8
    epsilon_1: float = 1.0
    minpts_default: int = 10
    psi_default: int = 100
    psi_min: int = 50
    psi_max: int = 200
    tune_minpts: bool = False
    minpts_search: Tuple[int, int] = (4, 30)
    variance_warn_threshold: float = 0.95
    psi_ramp: bool = False
    psi_ramp_factor: float = 1.0
    use_grid: bool = True
    keep_original_coordinates: bool = False
    workers: int = 1
    silhouette_sample: int = 2000
    silhouette_seed: int = 0

    def __post_init__(self):
        positive = {
            't': self.t, 'epsilon_1': self.epsilon_1, 'minpts_default': self.minpts_default,
            'psi_default': self.psi_default, 'psi_min': self.psi_min, 'psi_max': self.psi_max,
            'variance_warn_threshold': self.variance_warn_threshold,
            'psi_ramp_factor': self.psi_ramp_factor, 'workers': self.workers,
            'silhouette_sample': self.silhouette_sample,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ContractError(f"{name} must be positive, got {value}")
        if not self.psi_min <= self.psi_default <= self.psi_max:
            raise ContractError(
                f"need psi_min <= psi_default <= psi_max, got {self.psi_min}, "
                f"{self.psi_default}, {self.psi_max}")
        low, high = self.minpts_search
        if not 1 <= low <= high:
            raise ContractError(f"invalid minpts search interval {self.minpts_search}")

    def region_params(self, i: int, minpts: Optional[int] = None) -> RegionParams:
        return RegionParams(
            epsilon_i=epsilon_for_region(i, self.epsilon_1),
            minpts_i=self.minpts_default if minpts is None else minpts,
            psi_i=psi_for_region(i, self),
        )


@dataclass
class RegionReport:
    """Diagnostics of one shell."""

    index: int
    m: int
    k: int = 0
    variance_ratio: Optional[float] = None
    eigenvalues: Optional[Tuple[float, float, float]] = None
    epsilon: Optional[float] = None
    minpts: Optional[int] = None
    psi: Optional[int] = None
    removed: int = 0
    passed_through: bool = False
    notes: List[str] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class PcaacResult:
    """
    ``filtered`` holds the survivors; ``predicted`` is the full-length noise
    mask on the input cloud.
    """

    filtered: LabeledCloud
    predicted: np.ndarray
    report: List[RegionReport]

    @property
    def removed(self) -> int:
        return int(np.count_nonzero(self.predicted))


# ---------------------------------------------------------------- clustering

def range_query(data: PlaneData, p_index: int, epsilon: float,
                counter: Optional[OpCounts] = None,
                index: Optional[GridIndex] = None) -> np.ndarray:
    """
    Sorted indices j (p_index included) with 2D distance <= epsilon.

    Pass an ``index`` built with cell size >= epsilon to reuse it across
    queries; otherwise one is built for this call.
    """
    if not epsilon > 0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    if not 0 <= p_index < data.count:
        raise ContractError(f"point index {p_index} out of range for {data.count} points")
    if index is None:
        index = GridIndex(data.coords, epsilon)
    return index.query(p_index, epsilon, counter)


def _renumber(labels: np.ndarray, k: int) -> np.ndarray:
    """Renumber clusters 1..k by ascending smallest member index."""
    if k == 0:
        return labels
    first = np.full(k + 1, labels.shape[0], dtype=np.int64)
    clustered = np.flatnonzero(labels != NOISE)
    np.minimum.at(first, labels[clustered], clustered)
    order = np.argsort(first[1:], kind='stable') + 1
    mapping = np.empty(k + 1, dtype=np.int64)
    mapping[order] = np.arange(1, k + 1)
    renumbered = labels.copy()
    renumbered[clustered] = mapping[labels[clustered]]
    return renumbered


def _absorb(found: np.ndarray, labels: np.ndarray, cluster: int) -> List[int]:
    """Label unclaimed neighbors with ``cluster``; return the ones still to be expanded."""
    free = found[(labels[found] == _UNVISITED) | (labels[found] == NOISE)]
    pending = free[labels[free] == _UNVISITED]
    labels[free] = cluster
    return pending.tolist()


def _dbscan_scan(coords: np.ndarray, params: DbscanParams,
                 counter: Optional[OpCounts]) -> ClusterLabeling:
    """Point-by-point expansion; every point is compared with all m points exactly once."""
    m = coords.shape[0]
    labels = np.full(m, _UNVISITED, dtype=np.int64)
    core = np.zeros(m, dtype=bool)
    neighbors = neighbor_query(coords, params.epsilon, use_grid=False, counter=counter)
    k = 0
    for i in range(m):
        if labels[i] != _UNVISITED:
            continue
        found = neighbors(i)
        if found.shape[0] < params.minpts:
            labels[i] = NOISE
            continue

        k += 1
        core[i] = True
        labels[i] = k
        seeds = _absorb(found, labels, k)
        while seeds:
            q = seeds.pop()
            found = neighbors(q)
            if found.shape[0] >= params.minpts:
                core[q] = True
                seeds.extend(_absorb(found, labels, k))

    return ClusterLabeling(labels=_renumber(labels, k), core=core, k=k)


class _DisjointCells:
    """Union-find over cell keys."""

    def __init__(self):
        self.parent: Dict[tuple, tuple] = {}

    def add(self, key: tuple) -> None:
        self.parent[key] = key

    def find(self, key: tuple) -> tuple:
        root = key
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[key] != root:
            self.parent[key], key = root, self.parent[key]
        return root

    def union(self, a: tuple, b: tuple) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _dbscan_cells(coords: np.ndarray, params: DbscanParams,
                  counter: Optional[OpCounts]) -> ClusterLabeling:
    """
    Cell-based DBSCAN with the same result as the point-by-point scan.

    Cells have a diagonal shorter than epsilon, so a cell holding minpts
    points makes all of them core without a distance evaluation. Points
    of sparser cells are counted against their 5^d block. Core cells are
    joined when any pair of their core points is within epsilon. A border
    point joins the adjacent cluster with the smallest core index, which
    is the cluster the index-order scan reaches it from first.
    """
    m = coords.shape[0]
    grid = DenseCellGrid(coords, params.epsilon)
    eps2 = params.epsilon * params.epsilon
    core = np.zeros(m, dtype=bool)
    sparse_neighbors: Dict[int, np.ndarray] = {}

    for key, members in grid:
        if members.shape[0] >= params.minpts:
            core[members] = True
            continue
        candidates = grid.block(key)
        within = pairwise_squared_distances(coords, members, candidates, counter) <= eps2
        counts = within.sum(axis=1)
        core[members] = counts >= params.minpts
        for row in np.flatnonzero(counts < params.minpts):
            sparse_neighbors[int(members[row])] = candidates[within[row]]

    cores = _DisjointCells()
    core_members: Dict[tuple, np.ndarray] = {}
    for key, members in grid:
        inside = members[core[members]]
        if inside.shape[0]:
            core_members[key] = inside
            cores.add(key)
    for key, inside in core_members.items():
        for offset in grid.forward_offsets:
            other = grid.shifted(key, offset)
            if other not in core_members or cores.find(key) == cores.find(other):
                continue
            if any_within(coords, inside, core_members[other], params.epsilon, counter):
                cores.union(key, other)

    # clusters in order of their smallest core index
    root_of = np.full(m, -1, dtype=np.int64)
    roots: Dict[tuple, int] = {}
    first_core: List[int] = []
    for key, inside in core_members.items():
        root = cores.find(key)
        if root not in roots:
            roots[root] = len(first_core)
            first_core.append(m)
        r = roots[root]
        root_of[inside] = r
        first_core[r] = min(first_core[r], int(inside[0]))
    order = np.argsort(np.array(first_core, dtype=np.int64), kind='stable')
    rank = np.empty(len(first_core), dtype=np.int64)
    rank[order] = np.arange(1, len(first_core) + 1)

    labels = np.full(m, NOISE, dtype=np.int64)
    labels[core] = rank[root_of[core]]
    for i, found in sparse_neighbors.items():
        reached = found[core[found]]
        if reached.shape[0]:
            labels[i] = labels[reached].min()
    k = len(first_core)
    return ClusterLabeling(labels=_renumber(labels, k), core=core, k=k)


def dbscan(coords: np.ndarray, params: DbscanParams, use_grid: bool = True,
           counter: Optional[OpCounts] = None) -> ClusterLabeling:
    """
    Density-based clustering of an (m, d) array.

    Points are scanned in index order. A core point founds a cluster and the
    seed set grows through every core point reached; non-core points in a
    core neighborhood become border members of the first cluster that
    reaches them. Everything else is NOISE.

    With ``use_grid`` the same labeling is computed cell by cell; without
    it every point is compared with every other point.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if coords.shape[0] == 0:
        return ClusterLabeling(labels=np.empty(0, dtype=np.int64),
                               core=np.zeros(0, dtype=bool), k=0)
    if use_grid:
        return _dbscan_cells(coords, params, counter)
    return _dbscan_scan(coords, params, counter)


def dbscan_2d(data: PlaneData, params: DbscanParams, use_grid: bool = True,
              counter: Optional[OpCounts] = None) -> ClusterLabeling:
    """DBSCAN on principal-plane coordinates (Euclidean distance in (f, s))."""
    return dbscan(data.coords, params, use_grid, counter)


def threshold_filter(labeling: ClusterLabeling, psi: int) -> np.ndarray:
    """Sorted indices of DBSCAN noise plus every member of a cluster smaller than psi."""
    sizes = labeling.sizes()
    small = np.flatnonzero(sizes < psi) + 1
    flagged = labeling.noise_mask | np.isin(labeling.labels, small)
    return np.flatnonzero(flagged)


def epsilon_for_region(i: int, epsilon_1: float) -> float:
    """epsilon_i = sqrt(i) * epsilon_1."""
    if i < 1:
        raise ContractError(f"region index must be >= 1, got {i}")
    return math.sqrt(i) * epsilon_1


def psi_for_region(i: int, config: PipelineConfig) -> int:
    """Constant psi_default, or the clamped sqrt(i) ramp when psi_ramp is set."""
    if not config.psi_ramp:
        return config.psi_default
    ramp = config.psi_default * math.sqrt(i) * config.psi_ramp_factor
    return int(round(min(max(ramp, config.psi_min), config.psi_max)))


def silhouette(data: PlaneData, labeling: ClusterLabeling, sample_size: Optional[int] = 2000,
               seed: int = 0) -> Optional[float]:
    """
    Mean silhouette over clustered points, DBSCAN noise excluded.

    Returns None (undefined) with fewer than two clusters or when every
    cluster is a singleton. Large inputs are scored on a fixed-seed sample.
    """
    clustered = np.flatnonzero(labeling.labels != NOISE)
    labels = labeling.labels[clustered]
    n_labels = np.unique(labels).shape[0]
    if n_labels < 2 or n_labels >= clustered.shape[0]:
        return None
    coords = data.coords[clustered]
    if sample_size is not None and clustered.shape[0] <= sample_size:
        sample_size = None
    try:
        return float(silhouette_score(coords, labels, sample_size=sample_size, random_state=seed))
    except ValueError:
        # the sample drew fewer than two clusters
        return None


def tune_minpts(data: PlaneData, epsilon: float, search: Tuple[int, int] = (4, 30),
                default: int = 10, use_grid: bool = True, sample_size: Optional[int] = 2000,
                seed: int = 0) -> int:
    """minpts in ``search`` (inclusive) with the best silhouette; ties go to the smaller value."""
    if data.count == 0:
        raise ContractError("cannot tune minpts on empty data")
    best: Optional[Tuple[float, int]] = None
    for minpts in range(search[0], search[1] + 1):
        labeling = dbscan_2d(data, DbscanParams(epsilon, minpts), use_grid)
        score = silhouette(data, labeling, sample_size, seed)
        logger.debug(f"minpts={minpts}: k={labeling.k}, silhouette={score}")
        if score is None:
            continue
        if best is None or score > best[0]:
            best = (score, minpts)
    if best is None:
        logger.warning(f"No minpts candidate gave a defined silhouette; using default {default}")
        return default
    return best[1]


# ---------------------------------------------------------------- pipeline

@dataclass
class _RegionOutcome:
    report: RegionReport
    removed: np.ndarray
    survivors: np.ndarray
    points: np.ndarray
    ops: OpCounts


def _process_region(region: Region, config: PipelineConfig) -> _RegionOutcome:
    ops = OpCounts()
    report = RegionReport(index=region.index, m=len(region))
    if len(region) < MIN_REGION_POINTS:
        report.passed_through = True
        if len(region):
            report.notes.append(f"fewer than {MIN_REGION_POINTS} points, passed through unfiltered")
            logger.warning(f"Region {region.index}: {len(region)} point(s), passed through unfiltered")
        return _RegionOutcome(report, np.empty(0, dtype=np.int64), region.indices,
                              region.points, ops)

    data, basis, plane = reduce_region(region.points)
    report.eigenvalues = tuple(float(v) for v in basis.eigenvalues)
    report.variance_ratio = variance_ratio(basis)
    if report.variance_ratio < config.variance_warn_threshold:
        report.notes.append(f"variance ratio {report.variance_ratio:.4f} below "
                            f"{config.variance_warn_threshold}")
        logger.warning(f"Region {region.index}: first two components keep only "
                       f"{report.variance_ratio:.2%} of the variance")

    minpts = None
    epsilon = epsilon_for_region(region.index, config.epsilon_1)
    if config.tune_minpts:
        minpts = tune_minpts(plane, epsilon, config.minpts_search, config.minpts_default,
                             config.use_grid, config.silhouette_sample, config.silhouette_seed)
    params = config.region_params(region.index, minpts)
    report.epsilon, report.minpts, report.psi = params.epsilon_i, params.minpts_i, params.psi_i

    labeling = dbscan_2d(plane, DbscanParams(params.epsilon_i, params.minpts_i),
                         config.use_grid, ops)
    removed_local = threshold_filter(labeling, params.psi_i)
    keep_mask = np.ones(len(region), dtype=bool)
    keep_mask[removed_local] = False
    keep_local = np.flatnonzero(keep_mask)

    if config.keep_original_coordinates:
        points = region.points[keep_local]
    else:
        points = restore(basis, plane.subset(keep_local), data.means)

    report.k = labeling.k
    report.removed = int(removed_local.shape[0])
    logger.debug(f"Region {region.index}: m={report.m}, k={report.k}, eps={params.epsilon_i:.3f}, "
                 f"minpts={params.minpts_i}, psi={params.psi_i}, removed={report.removed}")
    return _RegionOutcome(report, region.indices[removed_local], region.indices[keep_local],
                          points, ops)


def run_pcaac(cloud: LabeledCloud, config: Optional[PipelineConfig] = None,
              counter: Optional[OpCounts] = None) -> PcaacResult:
    """
    Segment -> per-region PCA -> 2D-DBSCAN -> psi thresholding -> restore -> stitch.

    Regions run on up to ``config.workers`` threads; results are stitched in
    region order, survivors keep their original relative order.
    """
    config = config or PipelineConfig()
    if len(cloud) == 0:
        raise ContractError("run_pcaac needs a non-empty cloud")

    shells = build_shells(cloud, config.t)
    regions = split(cloud, shells)
    logger.info(f"PCAAC on {len(cloud)} points in {config.t} shells "
                f"(r_1={shells.r_1:.2f} m, eps_1={config.epsilon_1})")

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(lambda r: _process_region(r, config), regions))
    else:
        outcomes = [_process_region(region, config) for region in regions]

    predicted = np.zeros(len(cloud), dtype=bool)
    survivor_points = np.empty((len(cloud), 3), dtype=np.float64)
    for outcome in outcomes:
        predicted[outcome.removed] = True
        survivor_points[outcome.survivors] = outcome.points
        if counter is not None:
            counter.merge(outcome.ops)

    keep = np.flatnonzero(~predicted)
    filtered = cloud.subset(keep).with_points(survivor_points[keep]).with_predicted(
        np.zeros(keep.shape[0], dtype=bool))
    logger.info(f"PCAAC removed {int(predicted.sum())} of {len(cloud)} points")
    return PcaacResult(filtered=filtered, predicted=predicted,
                       report=[outcome.report for outcome in outcomes])
