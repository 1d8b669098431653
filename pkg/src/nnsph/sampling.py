"""Lattice filling of primitive shapes and surface sampling of boundaries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class EmptyBody(ValueError):
    """A shape admits no lattice points at the requested spacing."""


def rotation_z(deg: float):
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Shape:
    """Primitive solid: ``box``, ``sphere``, ``cylinder`` (y axis), ``union`` or ``point_cloud``."""

    kind: str
    min: tuple = (0.0, 0.0, 0.0)
    max: tuple = (0.0, 0.0, 0.0)
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.0
    height: float = 0.0
    parts: tuple = ()
    points: np.ndarray | None = field(default=None, compare=False, repr=False)

    def bounds(self):
        if self.kind == "box":
            return np.asarray(self.min, float), np.asarray(self.max, float)
        c = np.asarray(self.center, float)
        if self.kind == "sphere":
            return c - self.radius, c + self.radius
        if self.kind == "cylinder":
            half = np.array([self.radius, self.height / 2, self.radius])
            return c - half, c + half
        if self.kind == "union":
            lo, hi = zip(*(p.bounds() for p in self.parts))
            return np.min(lo, axis=0), np.max(hi, axis=0)
        pts = np.asarray(self.points, float)
        return pts.min(axis=0), pts.max(axis=0)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "box":
            return np.all((p >= np.asarray(self.min)) & (p <= np.asarray(self.max)), axis=1)
        d = p - np.asarray(self.center, float)
        if self.kind == "sphere":
            return np.einsum("ij,ij->i", d, d) <= self.radius**2
        if self.kind == "cylinder":
            return (d[:, 0] ** 2 + d[:, 2] ** 2 <= self.radius**2) & (np.abs(d[:, 1]) <= self.height / 2)
        if self.kind == "union":
            out = np.zeros(len(p), dtype=bool)
            for part in self.parts:
                out |= part.contains(p)
            return out
        raise ValueError(f"{self.kind} has no interior test")


def lattice(lo, hi, spacing: float):
    """Cell centers of the largest whole-cell grid that fits in ``[lo, hi]``, centered in it."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = np.floor((hi - lo) / spacing + 1e-9).astype(int)
    if np.any(n <= 0):
        return np.zeros((0, 3))
    start = lo + 0.5 * ((hi - lo) - n * spacing) + 0.5 * spacing
    axes = [start[a] + spacing * np.arange(n[a]) for a in range(3)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def sample_body(shape: Shape, spacing: float):
    """Fill ``shape`` with a regular lattice; returns ``(positions, volumes)``.

    Point clouds pass through verbatim. Every particle gets ``spacing**3``.
    """
    if not spacing > 0:
        raise ValueError("spacing must be > 0")
    if shape.kind == "point_cloud":
        pts = np.asarray(shape.points, dtype=float).reshape(-1, 3)
    else:
        lo, hi = shape.bounds()
        pts = lattice(lo, hi, spacing)
        pts = pts[shape.contains(pts)] if len(pts) else pts
    if len(pts) == 0:
        raise EmptyBody(f"{shape.kind} admits no lattice points at spacing {spacing}")
    return pts, np.full(len(pts), spacing**3)


def load_point_cloud(path):
    """Read ``.npy`` or whitespace-separated ``x y z`` text."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path).reshape(-1, 3).astype(float)
    return np.loadtxt(path, dtype=float, ndmin=2)[:, :3]


def box_surface(lo, hi, spacing: float, open_top: bool = False):
    """Points on the faces of an axis-aligned box, roughly ``spacing`` apart."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = np.maximum(np.round((hi - lo) / spacing).astype(int), 1) + 1
    axes = [np.linspace(lo[a], hi[a], n[a]) for a in range(3)]
    idx = np.stack(np.meshgrid(*[np.arange(k) for k in n], indexing="ij"), axis=-1).reshape(-1, 3)
    on_face = np.any((idx == 0) | (idx == n - 1), axis=1)
    if open_top:
        on_face &= ~((idx[:, 1] == n[1] - 1) & np.all((idx[:, [0, 2]] > 0) & (idx[:, [0, 2]] < n[[0, 2]] - 1), axis=1))
    idx = idx[on_face]
    return np.stack([axes[a][idx[:, a]] for a in range(3)], axis=1)


def oriented_box_surface(lo, hi, spacing: float, rotation_deg: float = 0.0, open_top: bool = False):
    """Box surface rotated about the z axis through the box center."""
    pts = box_surface(lo, hi, spacing, open_top)
    if rotation_deg:
        c = 0.5 * (np.asarray(lo, float) + np.asarray(hi, float))
        pts = (pts - c) @ rotation_z(rotation_deg).T + c
    return pts


def sphere_surface(center, radius: float, spacing: float):
    """Fibonacci-lattice points on a sphere, roughly ``spacing`` apart."""
    n = max(12, int(round(4.0 * math.pi * radius**2 / spacing**2)))
    k = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * k / n)
    theta = math.pi * (1.0 + 5.0**0.5) * k
    pts = np.stack([np.cos(theta) * np.sin(phi), np.cos(phi), np.sin(theta) * np.sin(phi)], axis=1)
    return np.asarray(center, dtype=float) + radius * pts
