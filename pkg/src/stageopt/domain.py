"""Finite grid domains, index masks, and tabulated functions.

All algorithms in this package operate over a fixed finite set of points.
A ``GridDomain`` owns the point coordinates and the pairwise metric; values
of a function tabulated on the domain are plain 1-D float arrays in grid
index order ("grid functions"), and subsets are boolean masks over indices.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

# Guard against accidentally materializing an enormous lattice (the pairwise
# distance matrix is O(N^2) memory).
DEFAULT_POINT_BUDGET = 200_000

Metric = Callable[[np.ndarray, np.ndarray], np.ndarray]


def euclidean_metric(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between two point arrays."""
    return cdist(np.atleast_2d(a), np.atleast_2d(b))


class GridDomain:
    """A finite set of points in [0, 1]^dim with a pairwise metric.

    Immutable after construction; the full distance matrix is computed
    lazily and cached, so instances can be shared across parallel runs.

    Parameters
    ----------
    points : array of shape (n, dim)
        Distinct coordinate vectors.
    metric : callable, optional
        ``metric(a, b)`` returning pairwise distances; defaults to Euclidean.
    """

    def __init__(self, points: np.ndarray, metric: Optional[Metric] = None):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, dim) array")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        if len(np.unique(points, axis=0)) != points.shape[0]:
            raise ValueError("points must be distinct")
        self._points = points
        self._points.setflags(write=False)
        self._metric = metric if metric is not None else euclidean_metric
        self._dist: Optional[np.ndarray] = None

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self.n

    def distances(self) -> np.ndarray:
        """Full (n, n) pairwise distance matrix, cached."""
        if self._dist is None:
            d = np.asarray(self._metric(self._points, self._points), dtype=float)
            d.setflags(write=False)
            self._dist = d
        return self._dist

    def distance(self, i: int, j: int) -> float:
        return float(self.distances()[i, j])

    def empty_mask(self) -> np.ndarray:
        return np.zeros(self.n, dtype=bool)

    def full_mask(self) -> np.ndarray:
        return np.ones(self.n, dtype=bool)

    def mask_from_indices(self, indices) -> np.ndarray:
        mask = self.empty_mask()
        mask[np.asarray(indices, dtype=int)] = True
        return mask


def make_uniform_grid(dim: int, points_per_axis: int,
                      point_budget: int = DEFAULT_POINT_BUDGET) -> GridDomain:
    """Regular lattice over [0, 1]^dim with Euclidean metric.

    Raises ``ValueError`` for non-positive arguments or if the lattice
    would exceed ``point_budget`` points.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if points_per_axis < 2:
        raise ValueError("points_per_axis must be >= 2")
    if dim * np.log(points_per_axis) > np.log(point_budget):
        raise ValueError(
            f"grid of {points_per_axis}^{dim} points exceeds the point "
            f"budget of {point_budget}")
    axis = np.linspace(0.0, 1.0, points_per_axis)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    return GridDomain(points)


def lipschitz_constant(domain: GridDomain, values: np.ndarray) -> float:
    """Tightest empirical Lipschitz constant of a tabulated function.

    max over distinct pairs of |v(x) - v(x')| / d(x, x').
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (domain.n,):
        raise ValueError("values must have one entry per domain point")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    dist = domain.distances()
    dv = np.abs(values[:, None] - values[None, :])
    off_diag = ~np.eye(domain.n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(off_diag, dv / dist, 0.0)
    return float(np.max(ratios)) if domain.n > 1 else 0.0


def _format_floats(row) -> str:
    return " ".join(repr(float(v)) for v in np.atleast_1d(row))


def save_grid(domain: GridDomain, path) -> None:
    """Plain-text grid table: one point per row, whitespace-separated."""
    with open(path, "w") as fh:
        for row in domain.points:
            fh.write(_format_floats(row) + "\n")


def load_grid(path, metric: Optional[Metric] = None) -> GridDomain:
    points = np.loadtxt(path, ndmin=2)
    return GridDomain(points, metric=metric)


def save_values(values: np.ndarray, path) -> None:
    """Grid function table: one value per row in grid index order."""
    with open(path, "w") as fh:
        for v in np.asarray(values, dtype=float):
            fh.write(repr(float(v)) + "\n")


def load_values(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=1)
