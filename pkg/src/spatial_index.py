"""Fixed-radius neighbor search on uniform grids, with brute-force fallbacks."""
import itertools
import math
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError
from .eval_metrics import OpCounts

# Cells are a hair wider than the query radius so floor() rounding can never
# push a true neighbor two cells away.
CELL_MARGIN = 1.0 + 1e-9
# Dense-cell grids shrink their cells by the same margin so a cell diagonal
# stays strictly inside the radius.
DIAGONAL_MARGIN = 1.0 - 1e-9
# Rows of the full distance matrix evaluated at once by the brute-force kNN.
KNN_CHUNK = 128

NeighborQuery = Callable[[int], np.ndarray]
CellKey = Tuple[int, ...]


def _squared_distances(coords: np.ndarray, candidates: np.ndarray, query: np.ndarray,
                       counter: Optional[OpCounts]) -> np.ndarray:
    diff = coords[candidates] - query
    if counter is not None:
        counter.add_distances(coords.shape[1], candidates.shape[0])
    return np.einsum('ij,ij->i', diff, diff)


def pairwise_squared_distances(coords: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                               counter: Optional[OpCounts] = None) -> np.ndarray:
    """(len(rows), len(cols)) squared distances, charged one evaluation per pair."""
    if counter is not None:
        counter.add_distances(coords.shape[1], rows.shape[0] * cols.shape[0])
    d2 = np.zeros((rows.shape[0], cols.shape[0]))
    for axis in range(coords.shape[1]):
        diff = coords[cols, axis][None, :] - coords[rows, axis][:, None]
        d2 += diff * diff
    return d2


def brute_force_query(coords: np.ndarray, i: int, radius: float,
                      counter: Optional[OpCounts] = None) -> np.ndarray:
    """All indices j with |coords[j] - coords[i]| <= radius, scanning every point."""
    everything = np.arange(coords.shape[0])
    d2 = _squared_distances(coords, everything, coords[i], counter)
    return everything[d2 <= radius * radius]


def _check_coords(coords: np.ndarray, size: float) -> np.ndarray:
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] not in (2, 3):
        raise ContractError(f"grid index needs (m, 2) or (m, 3) coordinates, got {coords.shape}")
    if not size > 0:
        raise ContractError(f"cell size must be positive, got {size}")
    return coords


def _bucket(coords: np.ndarray, width: float) -> Tuple[np.ndarray, Dict[CellKey, np.ndarray]]:
    """Integer cell keys per point and the sorted member indices of every occupied cell."""
    dim = coords.shape[1]
    origin = coords.min(axis=0) if coords.shape[0] else np.zeros(dim)
    keys = np.floor((coords - origin) / width).astype(np.int64)
    if keys.shape[0] == 0:
        return keys, {}
    order = np.lexsort(keys.T[::-1])
    sorted_keys = keys[order]
    change = np.any(np.diff(sorted_keys, axis=0) != 0, axis=1)
    starts = np.concatenate(([0], np.flatnonzero(change) + 1))
    ends = np.concatenate((starts[1:], [keys.shape[0]]))
    cells = {tuple(sorted_keys[s].tolist()): np.sort(order[s:e]) for s, e in zip(starts, ends)}
    return keys, cells


class GridIndex:
    """
    Uniform grid over 2D or 3D coordinates.

    Points are bucketed by ``floor((x - min) / cell_size)``. A query of
    radius <= cell_size only has to look at the 3^d cells around the
    query point's own cell.
    """

    def __init__(self, coords: np.ndarray, cell_size: float):
        self.coords = _check_coords(coords, cell_size)
        self.dim = self.coords.shape[1]
        self.cell_size = float(cell_size)
        self._keys, self._cells = _bucket(self.coords, self.cell_size * CELL_MARGIN)
        self._offsets = [np.array(o, dtype=np.int64)
                         for o in itertools.product((-1, 0, 1), repeat=self.dim)]

    def __len__(self) -> int:
        return self.coords.shape[0]

    def candidates(self, i: int) -> np.ndarray:
        """Indices stored in the 3^d cells around point i."""
        key = self._keys[i]
        found = [self._cells.get(tuple((key + offset).tolist())) for offset in self._offsets]
        found = [cell for cell in found if cell is not None]
        return np.concatenate(found)

    def query(self, i: int, radius: float, counter: Optional[OpCounts] = None) -> np.ndarray:
        """Sorted indices within ``radius`` of point i (inclusive, i itself included)."""
        if radius > self.cell_size:
            raise ContractError(f"query radius {radius} exceeds cell size {self.cell_size}")
        candidates = self.candidates(i)
        d2 = _squared_distances(self.coords, candidates, self.coords[i], counter)
        return np.sort(candidates[d2 <= radius * radius])


class DenseCellGrid:
    """
    Grid whose cell diagonal is shorter than ``radius``.

    Any two points sharing a cell are within ``radius`` of each other, and
    a neighbor of a point can only sit in the 5^d block of cells around
    its own cell (two cell widths already exceed the radius for d <= 3).
    """

    REACH = 2

    def __init__(self, coords: np.ndarray, radius: float):
        self.coords = _check_coords(coords, radius)
        self.dim = self.coords.shape[1]
        self.radius = float(radius)
        self.width = self.radius / math.sqrt(self.dim) * DIAGONAL_MARGIN
        _, self.cells = _bucket(self.coords, self.width)
        span = range(-self.REACH, self.REACH + 1)
        self.offsets: List[CellKey] = list(itertools.product(span, repeat=self.dim))
        # each unordered pair of distinct cells is visited once through these
        self.forward_offsets: List[CellKey] = [o for o in self.offsets if o > (0,) * self.dim]

    def __iter__(self) -> Iterator[Tuple[CellKey, np.ndarray]]:
        """Occupied cells in ascending key order."""
        return iter(sorted(self.cells.items()))

    def shifted(self, key: CellKey, offset: CellKey) -> CellKey:
        return tuple(k + o for k, o in zip(key, offset))

    def block(self, key: CellKey) -> np.ndarray:
        """Indices in the 5^d cells around ``key``, the cell itself included."""
        found = [self.cells.get(self.shifted(key, offset)) for offset in self.offsets]
        return np.concatenate([cell for cell in found if cell is not None])


def any_within(coords: np.ndarray, rows: np.ndarray, cols: np.ndarray, radius: float,
               counter: Optional[OpCounts] = None, chunk: int = 16) -> bool:
    """True when some (row, col) pair lies within ``radius``; stops at the first chunk that has one."""
    r2 = radius * radius
    for start in range(0, rows.shape[0], chunk):
        d2 = pairwise_squared_distances(coords, rows[start:start + chunk], cols, counter)
        if np.any(d2 <= r2):
            return True
    return False


def neighbor_query(coords: np.ndarray, radius: float, use_grid: bool = True,
                   counter: Optional[OpCounts] = None) -> NeighborQuery:
    """Return ``i -> neighbor indices`` backed by a grid or by the full scan."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if use_grid and coords.shape[0]:
        index = GridIndex(coords, radius)
        return lambda i: index.query(i, radius, counter)
    return lambda i: brute_force_query(coords, i, radius, counter)


def _brute_force_knn(coords: np.ndarray, k: int, counter: Optional[OpCounts]) -> np.ndarray:
    m = coords.shape[0]
    everything = np.arange(m)
    nearest = np.empty((m, k + 1))
    for start in range(0, m, KNN_CHUNK):
        rows = everything[start:start + KNN_CHUNK]
        d2 = pairwise_squared_distances(coords, rows, everything, counter)
        nearest[rows] = np.sort(np.partition(d2, k, axis=1)[:, :k + 1], axis=1)
    return np.sqrt(nearest)


def knn_mean_distances(coords: np.ndarray, k: int, use_tree: bool = True,
                       counter: Optional[OpCounts] = None) -> np.ndarray:
    """
    Mean distance of every point to its k nearest other points.

    The kd-tree path does its own distance arithmetic and charges nothing;
    ``use_tree=False`` scans all pairs and charges the counter for each.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] <= k:
        raise ContractError(f"need more than k={k} points, got {coords.shape[0]}")
    if use_tree:
        distances, _ = cKDTree(coords).query(coords, k=k + 1)
    else:
        distances = _brute_force_knn(coords, k, counter)
    # column 0 is the point itself (or a coincident twin, also at distance 0)
    return distances[:, 1:].mean(axis=1)
