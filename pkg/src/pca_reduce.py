"""PCA reduction of one region to its principal plane, and restoration back to 3D."""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .cloud_model import Point3
from .errors import ContractError, NumericalError

# Jacobi stops once every off-diagonal entry is below this fraction of ||C||_inf.
JACOBI_TOLERANCE = 1e-12
MAX_SWEEPS = 50
SYMMETRY_TOLERANCE = 1e-9
CLAMP_TOLERANCE = 1e-10

_PAIRS = ((0, 1), (0, 2), (1, 2))

PointsLike = Union[np.ndarray, Sequence[Point3]]


@dataclass(frozen=True, eq=False)
class CenteredData:
    """Zero-mean coordinates as a 3 x m matrix plus the subtracted means."""

    matrix: np.ndarray
    means: np.ndarray

    @property
    def count(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class PcaBasis:
    """
    Eigen decomposition of a region covariance.

    ``basis`` holds the eigenvectors as columns, ordered by decreasing
    eigenvalue; ``projection`` is the 2 x 3 matrix of the first two.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def projection(self) -> np.ndarray:
        return self.basis.T[:2]

    @property
    def normal(self) -> np.ndarray:
        """Eigenvector of the smallest eigenvalue (the discarded direction)."""
        return self.basis[:, 2]


@dataclass(frozen=True, eq=False)
class PlaneData:
    """Principal-plane coordinates: row 0 first component, row 1 second."""

    matrix: np.ndarray
    basis: PcaBasis

    @property
    def count(self) -> int:
        return self.matrix.shape[1]

    @property
    def coords(self) -> np.ndarray:
        """(n, 2) view, the layout the neighbor index works on."""
        return self.matrix.T

    def subset(self, indices: np.ndarray) -> "PlaneData":
        return PlaneData(self.matrix[:, np.asarray(indices, dtype=np.int64)], self.basis)


def _as_points(points: PointsLike) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return np.array([p.as_array() for p in points], dtype=np.float64).reshape(-1, 3)


def center(points: PointsLike) -> CenteredData:
    """Subtract the per-axis mean from every point."""
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise ContractError("cannot center an empty point set")
    means = pts.mean(axis=0)
    return CenteredData(matrix=(pts - means).T, means=means)


def covariance(data: CenteredData) -> np.ndarray:
    """C = (1/m) * xi * xi^T, population divisor."""
    m = data.count
    if m < 1:
        raise ContractError("covariance needs at least one point")
    c = data.matrix @ data.matrix.T / m
    return (c + c.T) / 2.0


def _rotation(a: np.ndarray, p: int, q: int) -> np.ndarray:
    """Jacobi rotation that zeroes a[p, q]."""
    theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    rot = np.eye(3)
    rot[p, p] = c
    rot[q, q] = c
    rot[p, q] = s
    rot[q, p] = -s
    return rot


def _off_diagonal(a: np.ndarray) -> float:
    return max(abs(a[p, q]) for p, q in _PAIRS)


def eigen_sym3(c: np.ndarray) -> PcaBasis:
    """
    Eigen decomposition of a symmetric positive semidefinite 3 x 3 matrix.

    Uses cyclic Jacobi rotations. Eigenvalues are sorted non-increasing
    (exact ties keep the original column order), small negative values are
    clamped to zero and each eigenvector is flipped so that its
    largest-magnitude entry is positive.

    Raises:
        ContractError: matrix not 3 x 3, not symmetric or clearly indefinite
        NumericalError: no convergence within MAX_SWEEPS
    """
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (3, 3) or not np.isfinite(c).all():
        raise ContractError(f"expected a finite 3x3 matrix, got shape {c.shape}")
    if np.abs(c - c.T).max() > SYMMETRY_TOLERANCE:
        raise ContractError("matrix is not symmetric")

    a = (c + c.T) / 2.0
    v = np.eye(3)
    threshold = JACOBI_TOLERANCE * np.abs(a).sum(axis=1).max()

    for sweep in range(MAX_SWEEPS + 1):
        if _off_diagonal(a) <= threshold:
            break
        if sweep == MAX_SWEEPS:
            raise NumericalError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
        for p, q in _PAIRS:
            if a[p, q] == 0.0:
                continue
            rot = _rotation(a, p, q)
            a = rot.T @ a @ rot
            a[p, q] = a[q, p] = 0.0
            v = v @ rot

    values = np.diag(a).copy()
    order = sorted(range(3), key=lambda i: (-values[i], i))
    values = values[order]
    vectors = v[:, order]

    tolerance = CLAMP_TOLERANCE * max(1.0, abs(values[0]))
    if values[-1] < -tolerance:
        raise ContractError(f"matrix is not positive semidefinite (eigenvalue {values[-1]:.3e})")
    values = np.maximum(values, 0.0)

    for j in range(3):
        column = vectors[:, j]
        if column[int(np.argmax(np.abs(column)))] < 0:
            vectors[:, j] = -column

    return PcaBasis(eigenvalues=values, basis=vectors)


def project(basis: PcaBasis, data: CenteredData) -> PlaneData:
    """Y = P * xi: each centered column mapped to (first, second) component."""
    if data.matrix.ndim != 2 or data.matrix.shape[0] != 3:
        raise ContractError(f"centered data must be 3 x m, got {data.matrix.shape}")
    return PlaneData(matrix=basis.projection @ data.matrix, basis=basis)


def restore(basis: PcaBasis, filtered: PlaneData, means: np.ndarray) -> np.ndarray:
    """xi' = P^T * Y' + mean; returns an (n, 3) array of points."""
    means = np.asarray(means, dtype=np.float64).reshape(-1)
    if filtered.matrix.ndim != 2 or filtered.matrix.shape[0] != 2:
        raise ContractError(f"plane data must be 2 x n, got {filtered.matrix.shape}")
    if means.shape != (3,):
        raise ContractError(f"means must be a 3-vector, got shape {means.shape}")
    if filtered.count == 0:
        return np.empty((0, 3), dtype=np.float64)
    return (basis.projection.T @ filtered.matrix).T + means


def variance_ratio(basis: PcaBasis) -> float:
    """Share of the total variance kept by the first two components."""
    total = float(basis.eigenvalues.sum())
    if total <= 0.0:
        return 1.0
    return float(basis.eigenvalues[0] + basis.eigenvalues[1]) / total


def reduce_region(points: PointsLike) -> Tuple[CenteredData, PcaBasis, PlaneData]:
    """center -> covariance -> eigen_sym3 -> project in one call."""
    data = center(points)
    basis = eigen_sym3(covariance(data))
    return data, basis, project(basis, data)
