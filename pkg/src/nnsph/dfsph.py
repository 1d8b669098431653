"""Divergence-free SPH pressure projection.

Two Jacobi-style solves share the per-particle stiffness factor alpha:
the divergence solve drives the density rate to zero, the constant-density
solve drives the predicted density to the rest density. Both only react to
compression, so free surfaces are not pulled together.

Static and moving boundaries are particle shells with pseudo-mass
``psi = rho0 * V_b`` (volume-corrected, ``V_b = 1 / sum_b' W_bb'``).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .kernels import KernelSpec, kernel_value
from .pairs import SphContext, scatter_add

log = logging.getLogger(__name__)


class NoConvergence(RuntimeWarning):
    """A pressure solve hit its iteration cap; the step continues."""


@dataclass
class DfsphSettings:
    density_tol: float = 1e-3       # average relative density error
    divergence_tol: float = 1e-3    # average relative density change per step
    density_max_iter: int = 100
    divergence_max_iter: int = 100
    density_min_iter: int = 0


@dataclass
class SolveReport:
    iterations: int = 0
    error: float = 0.0
    converged: bool = True
    boundary_force: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))


@dataclass
class DfsphState:
    rho: np.ndarray
    alpha: np.ndarray
    rho0: float
    density_error: float = 0.0
    divergence_error: float = 0.0


def boundary_volumes(xb, spec: KernelSpec, grid_pairs=None):
    """Per-sample volume 1 / sum_b' W(x_b - x_b') of a boundary shell (self included)."""
    from .neighbors import build_grid, neighbor_list

    xb = np.asarray(xb, dtype=float).reshape(-1, 3)
    if len(xb) == 0:
        return np.empty(0)
    nl = grid_pairs if grid_pairs is not None else neighbor_list(build_grid(xb, spec.h))
    r = np.linalg.norm(xb[nl.i] - xb[nl.j], axis=1)
    total = kernel_value(0.0, spec) + np.bincount(nl.i, weights=kernel_value(r, spec), minlength=len(xb))
    return 1.0 / total


def compute_density(ctx: SphContext):
    """rho_i = m_i W(0) + sum_j m_j W_ij + sum_b psi_b W_ib."""
    rho = ctx.masses * kernel_value(0.0, ctx.spec)
    rho = rho + ctx.ff.sum(ctx.masses[ctx.ff.j] * ctx.ff.w)
    if ctx.fb.i.size:
        rho = rho + ctx.fb.sum(ctx.psi[ctx.fb.j] * ctx.fb.w)
    return rho


def compute_alpha(ctx: SphContext, rho):
    """Stiffness factor rho_i / (|sum_j m_j gradW|^2 + sum_j |m_j gradW|^2)."""
    mg = ctx.masses[ctx.ff.j, None] * ctx.ff.gradw
    grad_sum = ctx.ff.sum(mg)
    sq_sum = ctx.ff.sum(np.einsum("ij,ij->i", mg, mg))
    if ctx.fb.i.size:
        grad_sum = grad_sum + ctx.fb.sum(ctx.psi[ctx.fb.j, None] * ctx.fb.gradw)
    denom = np.einsum("ij,ij->i", grad_sum, grad_sum) + sq_sum
    alpha = np.zeros_like(rho)
    ok = denom > 1e-9 * np.max(denom, initial=0.0)
    alpha[ok] = rho[ok] / denom[ok]
    return alpha


def density_rate(ctx: SphContext, v):
    """D rho_i / Dt = sum_j m_j (v_i - v_j) . gradW_ij + boundary terms."""
    ff, fb = ctx.ff, ctx.fb
    return _accel.density_rate(ff.indptr, ff.j, ff.gradw, ctx.masses, np.ascontiguousarray(v, dtype=float),
                               fb.indptr, fb.j, fb.gradw, ctx.psi, ctx.vb)


def pressure_velocity_change(ctx: SphContext, k, dt: float):
    """Velocity change -dt sum_j m_j (k_i + k_j) gradW_ij for k = kappa / rho."""
    ff, fb = ctx.ff, ctx.fb
    return _accel.pressure_dv(ff.indptr, ff.j, ff.gradw, ctx.masses, k, fb.indptr, fb.j, fb.gradw, ctx.psi,
                              float(dt))


def pressure_boundary_force(ctx: SphContext, k):
    """Reaction force on each boundary sample for accumulated ``k`` (linear in ``k``)."""
    fb = ctx.fb
    if not fb.i.size:
        return np.zeros((ctx.n_boundary, 3))
    term = (ctx.masses[fb.i] * ctx.psi[fb.j] * k[fb.i])[:, None] * fb.gradw
    return scatter_add(fb.j, term, ctx.n_boundary)


def init_state(ctx: SphContext) -> DfsphState:
    rho = compute_density(ctx)
    ctx.rho = rho
    return DfsphState(rho=rho, alpha=compute_alpha(ctx, rho), rho0=ctx.rho0)


def solve_divergence_free(ctx: SphContext, state: DfsphState, v, dt: float,
                          settings: DfsphSettings | None = None):
    """Correct ``v`` so the compressive density rate vanishes.

    Returns ``(dv, report)``; ``v + dv`` is the corrected field.
    """
    settings = settings or DfsphSettings()
    v = np.array(v, dtype=float)
    v0 = v.copy()
    report = SolveReport(boundary_force=np.zeros((ctx.n_boundary, 3)))
    if ctx.n == 0:
        return np.zeros_like(v), report
    k_total = np.zeros(ctx.n)
    for it in range(settings.divergence_max_iter + 1):
        rate = np.maximum(density_rate(ctx, v), 0.0)
        err = float(np.mean(rate)) * dt / ctx.rho0
        report.error = err
        if err <= settings.divergence_tol:
            break
        if it == settings.divergence_max_iter:
            report.converged = False
            warnings.warn(f"divergence solve stopped at {it} iterations (error {err:.3e})",
                          NoConvergence, stacklevel=2)
            break
        k = rate / dt * state.alpha / state.rho
        v += pressure_velocity_change(ctx, k, dt)
        k_total += k
        report.iterations = it + 1
    report.boundary_force = pressure_boundary_force(ctx, k_total)
    state.divergence_error = report.error
    return v - v0, report


def solve_constant_density(ctx: SphContext, state: DfsphState, v, dt: float,
                           settings: DfsphSettings | None = None):
    """Correct ``v`` so the density predicted after ``dt`` matches ``rho0``.

    Returns ``(dv, report)``; ``report.error`` is the average relative
    compression left after the last correction.
    """
    settings = settings or DfsphSettings()
    v = np.array(v, dtype=float)
    v0 = v.copy()
    report = SolveReport(boundary_force=np.zeros((ctx.n_boundary, 3)))
    if ctx.n == 0:
        return np.zeros_like(v), report
    k_total = np.zeros(ctx.n)
    for it in range(settings.density_max_iter + 1):
        rho_star = state.rho + dt * density_rate(ctx, v)
        excess = np.maximum(rho_star - ctx.rho0, 0.0)
        err = float(np.mean(excess)) / ctx.rho0
        report.error = err
        if err <= settings.density_tol and it >= settings.density_min_iter:
            break
        if it == settings.density_max_iter:
            report.converged = False
            warnings.warn(f"density solve stopped at {it} iterations (error {err:.3e})",
                          NoConvergence, stacklevel=2)
            break
        k = excess / dt**2 * state.alpha / state.rho
        v += pressure_velocity_change(ctx, k, dt)
        k_total += k
        report.iterations = it + 1
    report.boundary_force = pressure_boundary_force(ctx, k_total)
    state.density_error = report.error
    return v - v0, report
