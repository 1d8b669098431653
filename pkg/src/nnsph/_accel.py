"""Compiled row-wise loops for the per-pair hot paths.

Every routine walks CSR rows independently and sums each row in a fixed
order, so results are bitwise identical for any thread count.
"""
from __future__ import annotations

import numba as nb
import numpy as np
from numba import prange

if nb.config.THREADING_LAYER == "default":
    nb.config.THREADING_LAYER = "workqueue"

_OPTS = dict(cache=True, fastmath=False)


@nb.njit(parallel=True, **_OPTS)
def grid_query(points, positions, order, lo, dims, cell_ptr, cell_size, r2, exclude_self):
    """CSR neighbor rows for ``points`` against a dense cell table; rows sorted by index."""
    m = points.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    empty = np.empty(0, dtype=np.int64)
    for a in prange(m):
        counts[a] = _visit(a, points, positions, order, lo, dims, cell_ptr, cell_size, r2, exclude_self, empty, 0)
    indptr = np.zeros(m + 1, dtype=np.int64)
    for a in range(m):
        indptr[a + 1] = indptr[a] + counts[a]
    out = np.empty(indptr[m], dtype=np.int64)
    for a in prange(m):
        s = indptr[a]
        e = indptr[a + 1]
        _visit(a, points, positions, order, lo, dims, cell_ptr, cell_size, r2, exclude_self, out, s)
        for p in range(s + 1, e):
            key = out[p]
            q = p - 1
            while q >= s and out[q] > key:
                out[q + 1] = out[q]
                q -= 1
            out[q + 1] = key
    return indptr, out


@nb.njit(**_OPTS)
def _visit(a, points, positions, order, lo, dims, cell_ptr, cell_size, r2, exclude_self, out, base):
    px, py, pz = points[a, 0], points[a, 1], points[a, 2]
    cx = np.int64(np.floor(px / cell_size)) - lo[0]
    cy = np.int64(np.floor(py / cell_size)) - lo[1]
    cz = np.int64(np.floor(pz / cell_size)) - lo[2]
    write = out.shape[0] > 0
    n = 0
    for dx in range(-1, 2):
        x = cx + dx
        if x < 0 or x >= dims[0]:
            continue
        for dy in range(-1, 2):
            y = cy + dy
            if y < 0 or y >= dims[1]:
                continue
            z0 = max(cz - 1, 0)
            z1 = min(cz + 1, dims[2] - 1)
            if z0 > z1:
                continue
            # cells (x, y, z0..z1) are contiguous in the key order
            first = (x * dims[1] + y) * dims[2]
            for t in range(cell_ptr[first + z0], cell_ptr[first + z1 + 1]):
                b = order[t]
                if exclude_self and b == a:
                    continue
                ex = px - positions[b, 0]
                ey = py - positions[b, 1]
                ez = pz - positions[b, 2]
                if ex * ex + ey * ey + ez * ez < r2:
                    if write:
                        out[base + n] = b
                    n += 1
    return n


@nb.njit(parallel=True, **_OPTS)
def segment_sum(indptr, values):
    n = indptr.shape[0] - 1
    k = values.shape[1]
    out = np.zeros((n, k))
    for a in prange(n):
        for p in range(indptr[a], indptr[a + 1]):
            for c in range(k):
                out[a, c] += values[p, c]
    return out


@nb.njit(parallel=True, **_OPTS)
def density_rate(indptr, j, gradw, masses, v, bindptr, bj, bgradw, psi, vb):
    n = indptr.shape[0] - 1
    out = np.zeros(n)
    for a in prange(n):
        acc = 0.0
        for p in range(indptr[a], indptr[a + 1]):
            b = j[p]
            acc += masses[b] * ((v[a, 0] - v[b, 0]) * gradw[p, 0] + (v[a, 1] - v[b, 1]) * gradw[p, 1]
                                + (v[a, 2] - v[b, 2]) * gradw[p, 2])
        for p in range(bindptr[a], bindptr[a + 1]):
            b = bj[p]
            acc += psi[b] * ((v[a, 0] - vb[b, 0]) * bgradw[p, 0] + (v[a, 1] - vb[b, 1]) * bgradw[p, 1]
                             + (v[a, 2] - vb[b, 2]) * bgradw[p, 2])
        out[a] = acc
    return out


@nb.njit(parallel=True, **_OPTS)
def pressure_dv(indptr, j, gradw, masses, k, bindptr, bj, bgradw, psi, dt):
    n = indptr.shape[0] - 1
    out = np.zeros((n, 3))
    for a in prange(n):
        ax = ay = az = 0.0
        for p in range(indptr[a], indptr[a + 1]):
            c = masses[j[p]] * (k[a] + k[j[p]])
            ax += c * gradw[p, 0]
            ay += c * gradw[p, 1]
            az += c * gradw[p, 2]
        for p in range(bindptr[a], bindptr[a + 1]):
            c = psi[bj[p]] * k[a]
            ax += c * bgradw[p, 0]
            ay += c * bgradw[p, 1]
            az += c * bgradw[p, 2]
        out[a, 0] = -dt * ax
        out[a, 1] = -dt * ay
        out[a, 2] = -dt * az
    return out


@nb.njit(parallel=True, **_OPTS)
def viscous_accel(indptr, j, c, xij, gradw, v, bindptr, bj, cb, bxij, bgradw, vb, use_vb):
    n = indptr.shape[0] - 1
    out = np.zeros((n, 3))
    for a in prange(n):
        ax = ay = az = 0.0
        for p in range(indptr[a], indptr[a + 1]):
            b = j[p]
            s = c[p] * ((v[a, 0] - v[b, 0]) * xij[p, 0] + (v[a, 1] - v[b, 1]) * xij[p, 1]
                        + (v[a, 2] - v[b, 2]) * xij[p, 2])
            ax += s * gradw[p, 0]
            ay += s * gradw[p, 1]
            az += s * gradw[p, 2]
        for p in range(bindptr[a], bindptr[a + 1]):
            b = bj[p]
            wx, wy, wz = v[a, 0], v[a, 1], v[a, 2]
            if use_vb:
                wx -= vb[b, 0]
                wy -= vb[b, 1]
                wz -= vb[b, 2]
            s = cb[p] * (wx * bxij[p, 0] + wy * bxij[p, 1] + wz * bxij[p, 2])
            ax += s * bgradw[p, 0]
            ay += s * bgradw[p, 1]
            az += s * bgradw[p, 2]
        out[a, 0] = ax
        out[a, 1] = ay
        out[a, 2] = az
    return out


@nb.njit(parallel=True, **_OPTS)
def outer_rows(indptr, coef, u, w):
    """Per-row sum of coef_p * u_p w_p^T, shape (n, 3, 3)."""
    n = indptr.shape[0] - 1
    out = np.zeros((n, 3, 3))
    for a in prange(n):
        for p in range(indptr[a], indptr[a + 1]):
            for r in range(3):
                cu = coef[p] * u[p, r]
                for c in range(3):
                    out[a, r, c] += cu * w[p, c]
    return out


@nb.njit(parallel=True, **_OPTS)
def pair_geometry(xq, xs, i, j, sigma, h):
    """Offsets x_i - x_j, distances, cubic-spline values and gradients per pair."""
    m = i.shape[0]
    xij = np.empty((m, 3))
    r = np.empty(m)
    w = np.empty(m)
    g = np.empty((m, 3))
    for p in prange(m):
        dx = xq[i[p], 0] - xs[j[p], 0]
        dy = xq[i[p], 1] - xs[j[p], 1]
        dz = xq[i[p], 2] - xs[j[p], 2]
        d = np.sqrt(dx * dx + dy * dy + dz * dz)
        q = d / h
        if q <= 0.5:
            wv = 6.0 * q**3 - 6.0 * q**2 + 1.0
            dv = 3.0 * q**2 - 2.0 * q
        elif q < 1.0:
            wv = 2.0 * (1.0 - q) ** 3
            dv = -((1.0 - q) ** 2)
        else:
            wv = 0.0
            dv = 0.0
        scale = sigma * 6.0 / h * dv / d if d > 0.0 else 0.0
        xij[p, 0], xij[p, 1], xij[p, 2] = dx, dy, dz
        r[p] = d
        w[p] = sigma * wv
        g[p, 0], g[p, 1], g[p, 2] = dx * scale, dy * scale, dz * scale
    return xij, r, w, g


def set_threads(k: int | None):
    """Use ``k`` worker threads for compiled loops (``None`` keeps the default)."""
    if k is not None:
        nb.set_num_threads(max(1, min(int(k), nb.config.NUMBA_NUM_THREADS)))
