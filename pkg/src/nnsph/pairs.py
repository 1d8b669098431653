"""Per-step pair geometry shared by the density, pressure, viscosity and heat stages."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .kernels import KernelSpec
from .neighbors import NeighborList


def scatter_add(index, values, n: int):
    """Sum rows of ``values`` into ``n`` slots by ``index``; ordered, hence deterministic."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=n)
    flat = values.reshape(len(values), int(np.prod(values.shape[1:])))
    out = np.empty((n, flat.shape[1]))
    for c in range(flat.shape[1]):
        out[:, c] = np.bincount(index, weights=flat[:, c], minlength=n)
    return out.reshape((n,) + values.shape[1:])


@dataclass
class PairGeometry:
    """Offsets, distances, kernel values and gradients for a neighbor list.

    ``xij = x_i - x_j`` and ``gradw = grad W(x_ij)``.
    """

    i: np.ndarray
    j: np.ndarray
    xij: np.ndarray
    r: np.ndarray
    w: np.ndarray
    gradw: np.ndarray
    n: int
    indptr: np.ndarray

    @property
    def counts(self):
        return np.diff(self.indptr)

    def sum(self, values):
        """Per-row sums of a per-pair array, rows in ``i`` order."""
        values = np.asarray(values, dtype=float)
        flat = np.ascontiguousarray(values.reshape(len(values), int(np.prod(values.shape[1:]))))
        return _accel.segment_sum(self.indptr, flat).reshape((self.n,) + values.shape[1:])


def pair_geometry(x_query, x_source, nl: NeighborList, spec: KernelSpec) -> PairGeometry:
    xq = np.ascontiguousarray(x_query, dtype=float)
    xs = np.ascontiguousarray(x_source, dtype=float)
    xij, r, w, gradw = _accel.pair_geometry(xq, xs, nl.i, nl.j, float(spec.sigma), float(spec.h))
    return PairGeometry(nl.i, nl.j, xij, r, w, gradw, len(xq), nl.indptr)


def empty_geometry(n: int) -> PairGeometry:
    e = np.empty(0, dtype=np.int64)
    return PairGeometry(e, e.copy(), np.empty((0, 3)), np.empty(0), np.empty(0), np.empty((0, 3)), n,
                        np.zeros(n + 1, dtype=np.int64))


@dataclass
class SphContext:
    """Everything a solver stage needs about the current configuration.

    ``ff`` pairs dynamic particles with each other, ``fb`` pairs dynamic
    particles (``i``) with boundary samples (``j``). Boundary samples carry a
    pseudo-mass ``psi = rho0 * volume`` and a prescribed velocity ``vb``.
    """

    spec: KernelSpec
    masses: np.ndarray
    ff: PairGeometry
    fb: PairGeometry
    psi: np.ndarray
    vb: np.ndarray
    rho0: float
    rho: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def n_boundary(self) -> int:
        return len(self.psi)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def neighbor_counts(self):
        return self.ff.counts + self.fb.counts


def make_context(x, masses, spec: KernelSpec, ff: NeighborList, xb=None, fb: NeighborList | None = None,
                 psi=None, vb=None, rho0: float = 1000.0) -> SphContext:
    x = np.asarray(x, dtype=float)
    masses = np.asarray(masses, dtype=float)
    ffg = pair_geometry(x, x, ff, spec)
    if fb is None or xb is None or len(xb) == 0:
        fbg = empty_geometry(len(x))
        psi = np.empty(0)
        vb = np.empty((0, 3))
    else:
        fbg = pair_geometry(x, xb, fb, spec)
        psi = np.asarray(psi, dtype=float)
        vb = np.zeros((len(xb), 3)) if vb is None else np.asarray(vb, dtype=float)
    return SphContext(spec, masses, ffg, fbg, psi, vb, float(rho0))
