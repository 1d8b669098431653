"""SPH kernel functions and small 3x3 tensor helpers.

All routines are vectorized: distances may be scalars or arrays, vectors are
``(..., 3)`` arrays and matrices are ``(..., 3, 3)`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateDeformation(ValueError):
    """Raised when a deformation matrix is too close to singular to extract a rotation."""


@dataclass(frozen=True)
class KernelSpec:
    """Cubic spline kernel with support radius ``h`` in ``dim`` dimensions."""

    h: float
    dim: int = 3

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"support radius must be positive, got {self.h}")
        if self.dim not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dim}")

    @property
    def sigma(self) -> float:
        if self.dim == 3:
            return 8.0 / (np.pi * self.h**3)
        return 40.0 / (7.0 * np.pi * self.h**2)


def kernel_value(r, spec: KernelSpec):
    """Cubic spline W(r); zero for r >= h."""
    r = np.asarray(r, dtype=float)
    q = r / spec.h
    inner = 6.0 * q**3 - 6.0 * q**2 + 1.0
    outer = 2.0 * (1.0 - q) ** 3
    w = np.where(q <= 0.5, inner, np.where(q < 1.0, outer, 0.0))
    return spec.sigma * w


def kernel_derivative(r, spec: KernelSpec):
    """Radial derivative dW/dr."""
    r = np.asarray(r, dtype=float)
    q = r / spec.h
    inner = 3.0 * q**2 - 2.0 * q
    outer = -((1.0 - q) ** 2)
    dw = np.where(q <= 0.5, inner, np.where(q < 1.0, outer, 0.0))
    return spec.sigma * 6.0 / spec.h * dw


def kernel_gradient(x_ij, spec: KernelSpec):
    """Gradient of W evaluated at offset ``x_ij`` (shape ``(..., 3)``).

    Returns the zero vector at ``x_ij = 0`` and outside the support.
    """
    x_ij = np.asarray(x_ij, dtype=float)
    r = np.linalg.norm(x_ij, axis=-1)
    dw = kernel_derivative(r, spec)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 0.0, dw / np.where(r > 0.0, r, 1.0), 0.0)
    return x_ij * scale[..., None]


def frobenius_norm(t):
    """sqrt(sum of squared entries) over the last two axes."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(np.sum(t * t, axis=(-2, -1)))


def sym(a):
    """Symmetric part 0.5 (A + A^T) of a batch of matrices."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def polar_rotation(a, floor: float = 1e-8, return_mask: bool = False):
    """Rotation factor R of the polar decomposition A = R S.

    Computed through the SVD A = U diag(s) V^T, R = U V^T with a reflection fix
    so that det(R) = +1. Works on a single matrix or a batch.

    A matrix whose smallest singular value is below ``floor`` times its
    largest is degenerate. For a single matrix this raises
    :class:`DegenerateDeformation`; for a batch pass ``return_mask=True`` to
    receive ``(R, ok)`` where ``R`` is the identity wherever ``ok`` is False.
    """
    a = np.asarray(a, dtype=float)
    single = a.ndim == 2
    batch = a[None] if single else a
    u, s, vt = np.linalg.svd(batch)
    det = np.linalg.det(u @ vt)
    flip = det < 0.0
    if np.any(flip):
        u = u.copy()
        u[flip, :, 2] *= -1.0
    rot = u @ vt
    smax = s[:, 0]
    ok = (smax > 0.0) & (s[:, 2] >= floor * smax) & np.all(np.isfinite(batch), axis=(1, 2))
    if return_mask:
        rot = np.where(ok[:, None, None], rot, np.eye(3))
        return (rot[0], bool(ok[0])) if single else (rot, ok)
    if not np.all(ok):
        raise DegenerateDeformation("deformation matrix is singular within tolerance")
    return rot[0] if single else rot
