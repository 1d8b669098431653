"""Uniform-grid fixed-radius neighbor search and rest-neighborhood capture."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel

SURFACE_NEIGHBOR_THRESHOLD = 10


class NonFinitePosition(ValueError):
    """A particle position is NaN or infinite."""


class AlreadyCaptured(RuntimeError):
    """A rest neighborhood was already captured for this group."""


@dataclass
class NeighborList:
    """Directed neighbor pairs in CSR layout.

    ``i`` is sorted and, within each row, ``j`` is sorted, so ``indptr[a]:indptr[a+1]``
    slices the neighbors of query point ``a``.
    """

    i: np.ndarray
    j: np.ndarray
    indptr: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.i)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row(self, a: int) -> np.ndarray:
        return self.j[self.indptr[a]:self.indptr[a + 1]]


class SpatialGrid:
    """Particles bucketed into cubic cells of edge ``cell_size``.

    The cell of a particle is ``floor(x / cell_size)`` componentwise. Very
    sparse sets get coarser cells (``cell_size`` doubles) so the dense cell
    table stays bounded; ``search_radius`` keeps the requested size. Storage
    is a counting sort: ``order`` lists particle indices grouped by cell and
    ``cell_keys``/``cell_start``/``cell_count`` describe the occupied cells.
    """

    def __init__(self, positions, cell_size: float):
        if not cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(positions)):
            bad = np.flatnonzero(~np.all(np.isfinite(positions), axis=1))
            raise NonFinitePosition(f"non-finite position for particle(s) {bad[:10].tolist()}")
        self.search_radius = float(cell_size)
        self.positions = positions.copy()
        limit = max(64 * len(positions), 1 << 22)
        size = float(cell_size)
        while True:
            coords = np.floor(positions / size).astype(np.int64)
            if len(positions):
                lo = coords.min(axis=0) - 1
                dims = coords.max(axis=0) - lo + 2
            else:
                lo, dims = np.zeros(3, dtype=np.int64), np.ones(3, dtype=np.int64)
            if float(np.prod(dims.astype(float))) <= limit:
                break
            # widely spread particles: coarser cells keep the dense table small, queries stay exact
            size *= 2.0
        self.cell_size = size
        self.coords, self._lo, self._dims = coords, lo, dims
        keys = self._encode(self.coords - self._lo)
        self.order = np.argsort(keys, kind="stable").astype(np.int64)
        sorted_keys = keys[self.order]
        self.cell_keys, self.cell_start, self.cell_count = np.unique(
            sorted_keys, return_index=True, return_counts=True)
        n_cells = int(np.prod(self._dims))
        # dense CSR over every cell key: members of key k are order[cell_ptr[k]:cell_ptr[k+1]]
        self.cell_ptr = np.searchsorted(sorted_keys, np.arange(n_cells + 1)).astype(np.int64)

    @property
    def n_particles(self) -> int:
        return len(self.positions)

    def _encode(self, c):
        return (c[..., 0] * self._dims[1] + c[..., 1]) * self._dims[2] + c[..., 2]

    def cell(self, coord) -> np.ndarray:
        """Sorted particle indices stored in integer cell ``coord``."""
        c = np.asarray(coord, dtype=np.int64) - self._lo
        if np.any(c < 0) or np.any(c >= self._dims):
            return np.empty(0, dtype=np.int64)
        key = self._encode(c)
        pos = np.searchsorted(self.cell_keys, key)
        if pos >= len(self.cell_keys) or self.cell_keys[pos] != key:
            return np.empty(0, dtype=np.int64)
        s = self.cell_start[pos]
        return np.sort(self.order[s:s + self.cell_count[pos]])

    @property
    def cells(self) -> dict:
        """Mapping from occupied cell coordinate to its particle indices."""
        out = {}
        for key, s, n in zip(self.cell_keys, self.cell_start, self.cell_count):
            members = np.sort(self.order[s:s + n])
            out[tuple(self.coords[members[0]].tolist())] = members
        return out


def build_grid(positions, cell_size: float) -> SpatialGrid:
    return SpatialGrid(positions, cell_size)


def query_pairs(grid: SpatialGrid, points, radius: float, exclude_self: bool = False) -> NeighborList:
    """All pairs (a, b) with ``|points[a] - grid.positions[b]| < radius``.

    ``exclude_self`` drops ``a == b``; use it when ``points`` are the grid's own
    positions. ``radius`` must not exceed the cell size.
    """
    if radius > grid.cell_size * (1.0 + 1e-12):
        raise ValueError("query radius exceeds the grid cell size")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    m = len(points)
    if m == 0 or grid.n_particles == 0:
        empty = np.empty(0, dtype=np.int64)
        return NeighborList(empty, empty.copy(), np.zeros(m + 1, dtype=np.int64))
    indptr, pj = _accel.grid_query(points, grid.positions, grid.order, grid._lo, grid._dims, grid.cell_ptr,
                                   grid.cell_size, radius * radius, bool(exclude_self))
    pi = np.repeat(np.arange(m, dtype=np.int64), np.diff(indptr))
    return NeighborList(pi, pj, indptr)


def neighbor_list(grid: SpatialGrid, radius: float | None = None) -> NeighborList:
    """Neighbor pairs among the grid's own particles, self excluded."""
    radius = grid.search_radius if radius is None else radius
    return query_pairs(grid, grid.positions, radius, exclude_self=True)


def query_neighbors(grid: SpatialGrid, i: int, radius: float) -> list:
    """Indices j != i with |x_i - x_j| < radius, sorted ascending."""
    nl = query_pairs(grid, grid.positions[i:i + 1], radius)
    return [int(j) for j in nl.j if j != i]


def surface_mask(neighbor_counts, threshold: int = SURFACE_NEIGHBOR_THRESHOLD):
    """Particles with ``threshold`` or fewer current neighbors."""
    return np.asarray(neighbor_counts) <= threshold


@dataclass(frozen=True)
class RestNeighborhood:
    """Neighbor lists and offsets frozen in the rest configuration.

    ``offsets[k]`` is ``x0[j] - x0[i]`` for pair ``k = (i[k], j[k])``. Arrays are
    read-only.
    """

    i: np.ndarray
    j: np.ndarray
    indptr: np.ndarray
    offsets: np.ndarray
    rest_positions: np.ndarray
    volumes: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.i)

    def row(self, a: int) -> np.ndarray:
        return self.j[self.indptr[a]:self.indptr[a + 1]]


def capture_rest_neighborhood(grid: SpatialGrid, positions, volumes, *, radius=None,
                              labels=None, registry=None, group="default") -> RestNeighborhood:
    """Freeze the current neighbor structure as the rest configuration.

    Pairs are limited to particles sharing the same ``labels`` entry when
    labels are given (so separate bodies do not bond). When a ``registry``
    dict is passed the result is stored under ``group`` and a second capture
    for the same group raises :class:`AlreadyCaptured`.
    """
    if registry is not None and group in registry:
        raise AlreadyCaptured(f"rest neighborhood already captured for group {group!r}")
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    volumes = np.asarray(volumes, dtype=float).reshape(-1)
    nl = query_pairs(grid, positions, grid.search_radius if radius is None else radius, exclude_self=True)
    i, j = nl.i, nl.j
    if labels is not None:
        labels = np.asarray(labels)
        same = labels[i] == labels[j]
        i, j = i[same], j[same]
    indptr = np.zeros(len(positions) + 1, dtype=np.int64)
    np.cumsum(np.bincount(i, minlength=len(positions)), out=indptr[1:])
    arrays = [i.copy(), j.copy(), indptr, positions[j] - positions[i], positions.copy(), volumes.copy()]
    for a in arrays:
        a.setflags(write=False)
    rest = RestNeighborhood(*arrays)
    if registry is not None:
        registry[group] = rest
    return rest
