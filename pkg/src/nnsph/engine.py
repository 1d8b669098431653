"""Time stepping: one operator-split step over the whole particle world.

Phase order per step::

    neighbors -> density -> thermal -> external + elastic forces
    -> divergence solve -> implicit viscosity -> density solve
    -> integrate positions -> rigid / scripted boundary update
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import dfsph
from .elastoplastic import ElasticParams, SolidState, elastoplastic_step
from .kernels import KernelSpec, frobenius_norm, kernel_value
from .neighbors import NonFinitePosition, build_grid, capture_rest_neighborhood, neighbor_list, query_pairs
from .pairs import SphContext, make_context
from .thermal import ThermalParams, apply_sources, diffuse_step, temperature_to_viscosity
from .viscosity import (RATE_FLOOR, Newtonian, ViscosityModel, ViscousSolveConfig, solve_implicit_viscosity,
                        strain_rate, velocity_gradient)

log = logging.getLogger(__name__)

DT_CEILING = 5e-3
DIAGNOSTIC_COLUMNS = ("frame", "time", "dt", "max_mu", "max_strain_rate", "density_err", "cg_iters",
                      "kinetic_energy")


class SimulationDiverged(RuntimeError):
    def __init__(self, message, last_good_frame=None):
        super().__init__(message)
        self.last_good_frame = last_good_frame


@dataclass
class Material:
    name: str
    viscosity: ViscosityModel = field(default_factory=Newtonian)
    elastic: ElasticParams | None = None
    thermal: ThermalParams | None = None


@dataclass
class SolverSettings:
    dt_max: float = DT_CEILING
    cfl: float = 0.4
    elastic_cfl: float = 0.4
    gravity: tuple = (0.0, -9.81, 0.0)
    rest_density: float = 1000.0
    strain_rate_floor: float = RATE_FLOOR
    dfsph: dfsph.DfsphSettings = field(default_factory=dfsph.DfsphSettings)
    viscous: ViscousSolveConfig = field(default_factory=ViscousSolveConfig)
    thermal_max_delta: float | None = None


@dataclass
class Motion:
    """Constant-velocity translation active on ``[start, end]``."""

    velocity: tuple = (0.0, 0.0, 0.0)
    start: float = 0.0
    end: float = math.inf

    def velocity_at(self, t: float):
        return np.asarray(self.velocity, dtype=float) if self.start <= t < self.end else np.zeros(3)

    def displacement(self, t0: float, t1: float):
        lo, hi = max(t0, self.start), min(t1, self.end)
        return np.asarray(self.velocity, dtype=float) * max(hi - lo, 0.0)


@dataclass
class BoundaryObject:
    """A group of boundary samples; static unless it has a motion script."""

    name: str
    indices: np.ndarray
    motion: Motion | None = None


@dataclass
class RigidSphere:
    """Translating sphere coupled to the fluid through its surface samples.

    ``dynamic`` spheres integrate gravity plus the fluid reaction on their
    samples; ``kinematic`` ones keep their velocity regardless of the fluid.
    """

    center: np.ndarray
    radius: float
    mass: float
    velocity: np.ndarray
    mode: str = "dynamic"
    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    fluid_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    in_contact: bool = False

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")
        if self.mode not in ("dynamic", "kinematic"):
            raise ValueError(f"unknown sphere mode {self.mode!r}")
        if self.mode == "dynamic" and not self.mass > 0:
            raise ValueError("dynamic sphere needs a positive mass")


def lattice_volume(spacing: float, spec: KernelSpec) -> float:
    """1 / sum W over an infinite cubic lattice; the volume that makes a rest lattice hit rho0."""
    k = int(math.ceil(spec.h / spacing))
    g = np.arange(-k, k + 1) * spacing
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    return 1.0 / float(np.sum(kernel_value(np.linalg.norm(pts, axis=1), spec)))


class World:
    """Particle state plus boundaries, materials and solver settings.

    Dynamic particles live in ``x``, ``v`` (structure of arrays). Boundary
    samples live in ``xb``/``vb`` with pseudo-masses ``psi``.
    """

    def __init__(self, x, v, material_ids, materials, spacing: float, *, body_ids=None,
                 settings: SolverSettings | None = None, support_factor: float = 2.0,
                 xb=None, boundary_objects=None, spheres=None, temperature=None):
        self.settings = settings or SolverSettings()
        self.spacing = float(spacing)
        self.spec = KernelSpec(support_factor * self.spacing, 3)
        self.materials = list(materials)
        self.x = np.array(x, dtype=float).reshape(-1, 3)
        n = len(self.x)
        self.v = np.zeros((n, 3)) if v is None else np.array(v, dtype=float).reshape(n, 3)
        self.material_ids = np.asarray(material_ids, dtype=np.int64).reshape(n)
        self.body_ids = np.zeros(n, dtype=np.int64) if body_ids is None else np.asarray(body_ids, np.int64)
        rho0 = self.settings.rest_density
        self.masses = np.full(n, rho0 * lattice_volume(self.spacing, self.spec))
        self.rest_volumes = np.full(n, self.spacing**3)
        self.T = np.zeros(n) if temperature is None else np.array(temperature, dtype=float)
        self.mu = np.zeros(n)
        self.rate_norm = np.zeros(n)

        self.xb = np.zeros((0, 3)) if xb is None else np.array(xb, dtype=float).reshape(-1, 3)
        self.vb = np.zeros_like(self.xb)
        self.boundary_objects = list(boundary_objects or [])
        self.spheres = list(spheres or [])
        for s in self.spheres:
            self.vb[s.indices] = s.velocity
        self.psi = rho0 * dfsph.boundary_volumes(self.xb, self.spec) if len(self.xb) else np.empty(0)

        self.time = 0.0
        self.step_index = 0
        self.frame = 0
        self.last_good_frame = 0
        self.diagnostics = []
        self.rest_registry = {}
        self.ctx: SphContext | None = None
        self._init_materials()
        self.mu = self._viscosities(self.rate_norm)

    # -- setup ---------------------------------------------------------------

    def _init_materials(self):
        mats, ids = self.materials, self.material_ids
        if len(ids) and (ids.min() < 0 or ids.max() >= len(mats)):
            raise ValueError("material id out of range")
        self.solid_mask = np.array([mats[k].elastic is not None for k in ids], dtype=bool)
        self.thermal_mask = np.array([mats[k].thermal is not None for k in ids], dtype=bool)
        self.solid_index = np.flatnonzero(self.solid_mask)
        self.solid = None
        if self.solid_index.size:
            el = [mats[k].elastic for k in ids[self.solid_index]]
            self._E = np.array([e.E for e in el])
            self._nu = np.array([e.poisson for e in el])
            self._g1 = np.array([e.gamma1 for e in el])
            self._g2 = np.array([e.gamma2 for e in el])
            xs = self.x[self.solid_index]
            grid = build_grid(xs, self.spec.h)
            rest = capture_rest_neighborhood(grid, xs, self.rest_volumes[self.solid_index],
                                             labels=self.body_ids[self.solid_index],
                                             registry=self.rest_registry, group="solid")
            self.solid = SolidState.initial(rest)
        if self.thermal_mask.any():
            th = [mats[k].thermal for k in ids]
            self._D = np.array([t.diffusivity if t else 0.0 for t in th])
            self._R = np.array([t.source if t else 0.0 for t in th])
            self._decay = np.array([t.decay if t else 0.0 for t in th])
            self._mu0T = np.array([t.mu0 if t else 1.0 for t in th])
            self._muFloor = np.array([t.mu_floor if t else 0.0 for t in th])

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def plastic_norm(self):
        out = np.zeros(self.n)
        if self.solid is not None:
            out[self.solid_index] = self.solid.plastic_norm
        return out

    def kinetic_energy(self) -> float:
        return 0.5 * float(np.sum(self.masses * np.einsum("ij,ij->i", self.v, self.v)))

    # -- step pieces ---------------------------------------------------------

    def build_context(self) -> SphContext:
        try:
            grid = build_grid(self.x, self.spec.h)
        except NonFinitePosition as exc:
            raise SimulationDiverged(str(exc), self.last_good_frame) from None
        ff = neighbor_list(grid)
        fb = None
        if len(self.xb):
            fb = query_pairs(build_grid(self.xb, self.spec.h), self.x, self.spec.h)
        ctx = make_context(self.x, self.masses, self.spec, ff, self.xb, fb, self.psi, self.vb,
                           self.settings.rest_density)
        self.ctx = ctx
        return ctx

    def stable_dt(self) -> float:
        s = self.settings
        vmax = float(np.max(np.linalg.norm(self.v, axis=1), initial=0.0))
        if len(self.vb):
            vmax = max(vmax, float(np.max(np.linalg.norm(self.vb, axis=1))))
        dt = s.dt_max
        if vmax > 0:
            dt = min(dt, s.cfl * self.spec.h / vmax)
        if self.solid is not None:
            c = math.sqrt(float(np.max(self._E / (1 + self._nu) / (1 - 2 * self._nu) * (1 - self._nu)))
                          / s.rest_density)
            dt = min(dt, s.elastic_cfl * self.spec.h / c)
        return dt

    def _viscosities(self, rate):
        mu = np.zeros(self.n)
        floor = self.settings.strain_rate_floor
        for k, mat in enumerate(self.materials):
            sel = self.material_ids == k
            if sel.any() and mat.thermal is None:
                mu[sel] = mat.viscosity(rate[sel], floor)
        if self.thermal_mask.any():
            sel = self.thermal_mask
            mu[sel] = temperature_to_viscosity(self.T[sel], self._mu0T[sel], self._decay[sel], self._muFloor[sel])
        return mu

    def _thermal(self, ctx, dt):
        if not self.thermal_mask.any():
            return
        self.T = diffuse_step(self.T, ctx, self._D, dt, self.settings.thermal_max_delta)
        counts = ctx.neighbor_counts()
        for k, mat in enumerate(self.materials):
            if mat.thermal is None or mat.thermal.source == 0:
                continue
            sel = self.material_ids == k
            mask = sel & mat.thermal.region.mask(self.x, counts)
            self.T = apply_sources(self.T, mat.thermal.source, mask, dt)

    def _move_boundaries(self, dt, boundary_force):
        for s in self.spheres:
            s.fluid_force = boundary_force[s.indices].sum(axis=0) if s.indices.size else np.zeros(3)
            rigid_couple(self, s, dt)
        t0, t1 = self.time, self.time + dt
        for obj in self.boundary_objects:
            if obj.motion is None:
                continue
            self.xb[obj.indices] += obj.motion.displacement(t0, t1)
            self.vb[obj.indices] = obj.motion.velocity_at(t1)

    def step(self, dt: float | None = None) -> dict:
        """Advance one step; returns the diagnostics row (also appended to ``diagnostics``)."""
        s = self.settings
        if self.n == 0:
            dt = s.dt_max if dt is None else dt
            self.time += dt
            self.step_index += 1
            row = dict.fromkeys(DIAGNOSTIC_COLUMNS, 0.0)
            row.update(frame=self.frame, time=self.time, dt=dt, cg_iters=0)
            self.diagnostics.append(row)
            return row
        dt = self.stable_dt() if dt is None else min(dt, self.stable_dt())

        ctx = self.build_context()
        state = dfsph.init_state(ctx)
        self._thermal(ctx, dt)

        accel = np.broadcast_to(np.asarray(s.gravity, dtype=float), self.x.shape).copy()
        if self.solid is not None:
            idx = self.solid_index
            f = elastoplastic_step(self.solid, self.x[idx], self.masses[idx], self.spec,
                                   self._E, self._nu, self._g1, self._g2)
            accel[idx] += f / self.masses[idx, None]

        dv, div_report = dfsph.solve_divergence_free(ctx, state, self.v, dt, s.dfsph)
        v_star = self.v + dv + dt * accel

        rate = frobenius_norm(strain_rate(velocity_gradient(ctx, v_star)))
        self.rate_norm = rate
        self.mu = self._viscosities(rate)
        v_new, visc_report = solve_implicit_viscosity(ctx, v_star, self.mu, dt, s.viscous)

        dv, dens_report = dfsph.solve_constant_density(ctx, state, v_new, dt, s.dfsph)
        v_new = v_new + dv

        if not (np.all(np.isfinite(v_new))):
            raise SimulationDiverged(f"non-finite velocity at step {self.step_index}", self.last_good_frame)
        self.v = v_new
        self.x = self.x + dt * self.v

        boundary_force = div_report.boundary_force + dens_report.boundary_force + visc_report.boundary_force
        for sph in self.spheres:
            sph.in_contact = bool(np.isin(ctx.fb.j, sph.indices).any()) if sph.indices.size else False
        self._move_boundaries(dt, boundary_force)
        self.time += dt
        self.step_index += 1

        row = {
            "frame": self.frame,
            "time": self.time,
            "dt": dt,
            "max_mu": float(np.max(self.mu)),
            "max_strain_rate": float(np.max(rate)),
            "density_err": dens_report.error,
            "cg_iters": visc_report.iterations,
            "kinetic_energy": self.kinetic_energy(),
            "density_iters": dens_report.iterations,
            "density_converged": dens_report.converged,
            "divergence_iters": div_report.iterations,
            "divergence_err": div_report.error,
            "cg_residual": visc_report.residual,
        }
        self.diagnostics.append(row)
        return row

    def advance_frame(self, frame_interval: float):
        """Step until the clock reaches the next frame time exactly."""
        target = (self.frame + 1) * frame_interval
        self.frame += 1
        while self.time < target - 1e-12:
            remaining = target - self.time
            dt = min(self.stable_dt(), remaining)
            if remaining - dt < 1e-9:
                dt = remaining
            self.step(dt)
        self.time = target
        self.last_good_frame = self.frame


def step(world: World, dt: float | None = None) -> World:
    world.step(dt)
    return world


def rigid_couple(world: World, sphere: RigidSphere, dt: float):
    """Advance ``sphere`` by ``dt`` using the fluid force gathered in the last step."""
    g = np.asarray(world.settings.gravity, dtype=float)
    if sphere.mode == "dynamic":
        sphere.velocity = sphere.velocity + dt * (g + sphere.fluid_force / sphere.mass)
    shift = dt * sphere.velocity
    sphere.center = sphere.center + shift
    world.xb[sphere.indices] += shift
    world.vb[sphere.indices] = sphere.velocity
    return sphere
