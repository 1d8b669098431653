"""Heat diffusion between particles and the temperature-to-viscosity law."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .neighbors import surface_mask
from .pairs import SphContext

STABILITY_LIMIT = 0.5
MU_FLOOR = 1e-3


class ThermalInstability(RuntimeWarning):
    """A temperature change in one step exceeded the configured bound."""


@dataclass(frozen=True)
class SourceRegion:
    """Where the heat source acts: ``surface``, ``box`` or ``none``."""

    kind: str = "none"
    box_min: tuple = (0.0, 0.0, 0.0)
    box_max: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("none", "surface", "box"):
            raise ValueError(f"unknown source region {self.kind!r}")
        if self.kind == "box" and any(lo > hi for lo, hi in zip(self.box_min, self.box_max)):
            raise ValueError("source box min must not exceed max")

    def mask(self, x, neighbor_counts=None):
        x = np.asarray(x, dtype=float)
        if self.kind == "none":
            return np.zeros(len(x), dtype=bool)
        if self.kind == "surface":
            if neighbor_counts is None:
                raise ValueError("surface source needs current neighbor counts")
            return surface_mask(neighbor_counts)
        lo, hi = np.asarray(self.box_min), np.asarray(self.box_max)
        return np.all((x >= lo) & (x <= hi), axis=1)


@dataclass(frozen=True)
class ThermalParams:
    diffusivity: float = 0.0
    source: float = 0.0
    decay: float = 0.0
    mu0: float = 1.0
    region: SourceRegion = field(default_factory=SourceRegion)
    mu_floor: float = MU_FLOOR

    def __post_init__(self):
        errors = self.problems()
        if errors:
            raise ValueError("; ".join(errors))

    def problems(self) -> list:
        out = []
        if not self.diffusivity >= 0:
            out.append("diffusivity must be >= 0")
        if not self.decay >= 0:
            out.append("decay must be >= 0")
        if not self.mu0 > 0:
            out.append("mu0 must be > 0")
        return out


def exchange_coefficients(ctx: SphContext, diffusivity, rho=None):
    """Per-pair D_ij m_j / (rho_j rho_i) |gradW_ij| over dynamic pairs.

    ``D_ij`` is the harmonic mean of the two particles' diffusivities.
    """
    rho = ctx.rho if rho is None else rho
    ff = ctx.ff
    d = np.broadcast_to(np.asarray(diffusivity, dtype=float), (ctx.n,))
    s = d[ff.i] + d[ff.j]
    dij = np.zeros(len(ff.i))
    np.divide(2.0 * d[ff.i] * d[ff.j], s, out=dij, where=s > 0)
    return dij * ctx.masses[ff.j] / (rho[ff.j] * rho[ff.i]) * np.linalg.norm(ff.gradw, axis=1)


def diffuse_step(T, ctx: SphContext, diffusivity, dt: float, max_delta: float | None = None, rho=None):
    """Explicit Euler update of the diffusion term.

    The step is split into equal sub-steps whenever ``dt`` times the largest
    row sum of exchange coefficients exceeds ``STABILITY_LIMIT``.
    """
    T = np.asarray(T, dtype=float)
    if ctx.n == 0:
        return T.copy()
    coef = exchange_coefficients(ctx, diffusivity, rho)
    ff = ctx.ff
    row = np.bincount(ff.i, weights=coef, minlength=ctx.n)
    worst = dt * float(np.max(row, initial=0.0))
    substeps = max(1, math.ceil(worst / STABILITY_LIMIT))
    h = dt / substeps
    out = T.copy()
    for _ in range(substeps):
        flux = coef * (out[ff.j] - out[ff.i])
        out = out + h * np.bincount(ff.i, weights=flux, minlength=ctx.n)
    if max_delta is not None:
        big = float(np.max(np.abs(out - T), initial=0.0))
        if big > max_delta:
            warnings.warn(f"temperature changed by {big:.3g} in one step (bound {max_delta:.3g})",
                          ThermalInstability, stacklevel=2)
    return out


def apply_sources(T, source, mask, dt: float):
    """T + source * dt on masked particles; ``source`` may be per particle."""
    T = np.asarray(T, dtype=float)
    rate = np.broadcast_to(np.asarray(source, dtype=float), T.shape)
    return np.where(mask, T + rate * dt, T)


def temperature_to_viscosity(T, mu0, decay, floor: float = MU_FLOOR):
    """mu0 * exp(-decay * T), floored."""
    return np.maximum(np.asarray(mu0, dtype=float) * np.exp(-np.asarray(decay) * np.asarray(T, dtype=float)), floor)
