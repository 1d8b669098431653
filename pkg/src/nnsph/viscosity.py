"""Strain-rate dependent viscosity and the implicit viscous solve.

Every model maps the Frobenius norm of the strain-rate tensor to an effective
dynamic viscosity. Rates are floored at ``RATE_FLOOR`` before evaluation and
results are clamped to ``[mu_inf, cap]`` where ``cap`` is the model's ``mu0``
if it has one, else ``MU_CAP``.

The viscous operator is the Laplacian discretization

    a_i = 2(d+2)/rho_i * sum_j mu_ij m_j/rho_j * (v_ij . x_ij)/(|x_ij|^2 + 0.01 h^2) * gradW_ij

integrated implicitly, ``(I - dt A) v = v*``, with a matrix-free block-Jacobi
preconditioned conjugate gradient on the mass-weighted (symmetric) system.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import ClassVar

import numpy as np

from . import _accel
from .kernels import sym
from .pairs import SphContext, scatter_add

RATE_FLOOR = 1e-6
MU_CAP = 1e6


class InvalidModelParams(ValueError):
    """Constitutive coefficients violate a model invariant."""


class CgNoConvergence(RuntimeWarning):
    """CG hit its iteration cap; the best iterate is returned."""


class ViscosityModel:
    """Base class; subclasses implement ``_raw(rate)``."""

    kind: ClassVar[str] = ""
    mu_inf: float = 0.0

    def _raw(self, rate):
        raise NotImplementedError

    @property
    def cap(self) -> float:
        mu0 = getattr(self, "mu0", None)
        return MU_CAP if mu0 is None else float(mu0)

    def __call__(self, rate, floor: float = RATE_FLOOR):
        rate = np.maximum(np.asarray(rate, dtype=float), floor)
        with np.errstate(over="ignore"):
            mu = self._raw(rate)
        return np.clip(mu, self.mu_inf, self.cap)

    def to_dict(self) -> dict:
        return {"model": self.kind, **asdict(self)}

    def _check(self, cond, msg):
        if not cond:
            raise InvalidModelParams(f"{self.kind}: {msg}")

    def _check_bounds(self):
        self._check(self.mu_inf >= 0, "mu_inf must be >= 0")
        mu0 = getattr(self, "mu0", None)
        if mu0 is not None:
            self._check(mu0 >= self.mu_inf, "mu0 must be >= mu_inf")


@dataclass(frozen=True)
class Newtonian(ViscosityModel):
    kind: ClassVar[str] = "newtonian"
    mu0: float = 0.0
    mu_inf: float = 0.0

    def __post_init__(self):
        self._check(self.mu0 >= 0, "mu0 must be >= 0")
        self._check_bounds()

    def _raw(self, rate):
        return np.full_like(rate, self.mu0)


@dataclass(frozen=True)
class PowerLaw(ViscosityModel):
    """mu = m * rate^(n - 1); n < 1 thins, n > 1 thickens."""

    kind: ClassVar[str] = "power_law"
    n: float = 1.0
    m: float = 1.0
    mu0: float | None = None
    mu_inf: float = 0.0

    def __post_init__(self):
        self._check(self.n > 0, "n must be > 0")
        self._check(self.m > 0, "m must be > 0")
        self._check_bounds()

    def _raw(self, rate):
        return self.m * rate ** (self.n - 1.0)


@dataclass(frozen=True)
class Cross(ViscosityModel):
    kind: ClassVar[str] = "cross"
    mu0: float = 1.0
    mu_inf: float = 0.0
    m: float = 1.0
    n: float = 2.0 / 3.0

    def __post_init__(self):
        self._check(self.m > 0 and self.n > 0, "m and n must be > 0")
        self._check_bounds()

    def _raw(self, rate):
        return self.mu_inf + (self.mu0 - self.mu_inf) / (1.0 + (self.m * rate) ** self.n)


@dataclass(frozen=True)
class Carreau(ViscosityModel):
    kind: ClassVar[str] = "carreau"
    mu0: float = 1.0
    mu_inf: float = 0.0
    m: float = 1.0
    n: float = 0.5
    alpha: float = 2.0

    def __post_init__(self):
        self._check(self.m > 0 and self.n > 0, "m and n must be > 0")
        self._check(self.alpha > 0, "alpha must be > 0")
        self._check_bounds()

    def _raw(self, rate):
        base = 1.0 + (self.m * rate) ** self.alpha
        return self.mu_inf + (self.mu0 - self.mu_inf) / base ** ((1.0 - self.n) / self.alpha)


@dataclass(frozen=True)
class Bingham(ViscosityModel):
    """Rigid branch mu0 up to the critical rate, then mu_inf + tau0 / rate.

    The yield stress is derived, ``tau0 = rate_c (mu0 - mu_inf)``, which makes
    the curve continuous.
    """

    kind: ClassVar[str] = "bingham"
    mu0: float = 1.0
    mu_inf: float = 0.0
    rate_c: float = 1.0

    def __post_init__(self):
        self._check(self.rate_c > 0, "rate_c must be > 0")
        self._check_bounds()

    @property
    def tau0(self) -> float:
        return self.rate_c * (self.mu0 - self.mu_inf)

    def _raw(self, rate):
        return np.where(rate <= self.rate_c, self.mu0, self.mu_inf + self.tau0 / rate)


@dataclass(frozen=True)
class Casson(ViscosityModel):
    kind: ClassVar[str] = "casson"
    mu_c: float = 1.0
    tau0: float = 0.0
    mu0: float | None = None
    mu_inf: float = 0.0

    def __post_init__(self):
        self._check(self.mu_c > 0, "mu_c must be > 0")
        self._check(self.tau0 >= 0, "tau0 must be >= 0")
        self._check_bounds()

    def _raw(self, rate):
        return (math.sqrt(self.mu_c) + np.sqrt(self.tau0 / rate)) ** 2


@dataclass(frozen=True)
class HerschelBulkley(ViscosityModel):
    """mu0 up to the critical rate, then tau0 / rate + m rate^(n-1).

    ``tau0 = mu0 rate_c - m rate_c^n`` is derived for continuity. A negative
    value is accepted with a warning: the yielded branch stays positive
    because ``tau0 + m rate^n`` grows from ``mu0 rate_c > 0``.
    """

    kind: ClassVar[str] = "herschel_bulkley"
    mu0: float = 1.0
    m: float = 1.0
    n: float = 1.0
    rate_c: float = 1.0
    mu_inf: float = 0.0

    def __post_init__(self):
        self._check(self.m > 0 and self.n > 0, "m and n must be > 0")
        self._check(self.rate_c > 0, "rate_c must be > 0")
        self._check(self.mu0 > 0, "mu0 must be > 0")
        self._check_bounds()
        if self.tau0 < 0:
            warnings.warn(f"herschel_bulkley: derived yield stress {self.tau0:.3g} is negative",
                          RuntimeWarning, stacklevel=3)

    @property
    def tau0(self) -> float:
        return self.mu0 * self.rate_c - self.m * self.rate_c**self.n

    def _raw(self, rate):
        yielded = self.tau0 / rate + self.m * rate ** (self.n - 1.0)
        return np.where(rate <= self.rate_c, self.mu0, yielded)


MODELS = {cls.kind: cls for cls in (Newtonian, PowerLaw, Cross, Carreau, Bingham, Casson, HerschelBulkley)}


def model_from_dict(d: dict) -> ViscosityModel:
    d = dict(d)
    kind = d.pop("model", None)
    if kind not in MODELS:
        raise InvalidModelParams(f"unknown viscosity model {kind!r}; expected one of {sorted(MODELS)}")
    try:
        return MODELS[kind](**d)
    except TypeError as exc:
        raise InvalidModelParams(f"{kind}: {exc}") from None


def effective_viscosity(model: ViscosityModel, rate, floor: float = RATE_FLOOR):
    return model(rate, floor)


# --- strain rate -----------------------------------------------------------

def velocity_gradient(ctx: SphContext, v, rho=None):
    """grad v_i = 1/rho_i sum_j m_j (v_j - v_i) gradW_ij^T, boundary samples included."""
    rho = ctx.rho if rho is None else rho
    ff = ctx.ff
    g = _accel.outer_rows(ff.indptr, ctx.masses[ff.j], v[ff.j] - v[ff.i], ff.gradw)
    if ctx.fb.i.size:
        fb = ctx.fb
        g = g + _accel.outer_rows(fb.indptr, ctx.psi[fb.j], ctx.vb[fb.j] - v[fb.i], fb.gradw)
    return g / rho[:, None, None]


def strain_rate(grad_v):
    """Symmetric part of the velocity gradient."""
    return sym(grad_v)


# --- implicit solve --------------------------------------------------------

@dataclass
class ViscousSolveConfig:
    tol: float = 1e-4
    max_iter: int = 100
    regularizer: float = 0.01

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("CG tolerance must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.regularizer > 0:
            raise ValueError("regularizer must be > 0")


@dataclass
class ViscousReport:
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    boundary_force: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))


def pair_viscosity(mu_i, mu_j):
    """Harmonic mean; zero when either side is inviscid."""
    s = mu_i + mu_j
    out = np.zeros_like(s)
    np.divide(2.0 * mu_i * mu_j, s, out=out, where=s > 0)
    return out


class _Operator:
    """Coefficients of the viscous operator for a fixed configuration."""

    def __init__(self, ctx: SphContext, mu, regularizer: float):
        rho = ctx.rho
        h2 = regularizer * ctx.spec.h ** 2
        k = 2.0 * (ctx.dim + 2)
        ff, fb = ctx.ff, ctx.fb
        self.ctx = ctx
        # a_i += c_ij ((v_i - v_j) . x_ij) gradW_ij
        self.c = k * pair_viscosity(mu[ff.i], mu[ff.j]) * ctx.masses[ff.j] / (rho[ff.i] * rho[ff.j]) \
            / (ff.r**2 + h2)
        if fb.i.size:
            vol = ctx.psi[fb.j] / ctx.rho0
            self.cb = k * mu[fb.i] * vol / rho[fb.i] / (fb.r**2 + h2)
        else:
            self.cb = np.empty(0)

    def accel(self, v, with_boundary_velocity=True):
        ctx, ff, fb = self.ctx, self.ctx.ff, self.ctx.fb
        return _accel.viscous_accel(ff.indptr, ff.j, self.c, ff.xij, ff.gradw, np.ascontiguousarray(v, dtype=float),
                                    fb.indptr, fb.j, self.cb, fb.xij, fb.gradw, ctx.vb, bool(with_boundary_velocity))

    def boundary_accel_source(self):
        """The part of ``accel`` driven by boundary velocities alone."""
        fb = self.ctx.fb
        if not fb.i.size:
            return np.zeros((self.ctx.n, 3))
        sb = -self.cb * np.einsum("ij,ij->i", self.ctx.vb[fb.j], fb.xij)
        return fb.sum(sb[:, None] * fb.gradw)

    def boundary_reaction(self, v):
        fb = self.ctx.fb
        if not fb.i.size:
            return np.zeros((self.ctx.n_boundary, 3))
        vib = v[fb.i] - self.ctx.vb[fb.j]
        sb = self.cb * np.einsum("ij,ij->i", vib, fb.xij)
        return -scatter_add(fb.j, (self.ctx.masses[fb.i] * sb)[:, None] * fb.gradw, self.ctx.n_boundary)

    def diagonal_blocks(self, dt):
        ctx, ff, fb = self.ctx, self.ctx.ff, self.ctx.fb
        blocks = _accel.outer_rows(ff.indptr, self.c, ff.gradw, ff.xij)
        if fb.i.size:
            blocks = blocks + _accel.outer_rows(fb.indptr, self.cb, fb.gradw, fb.xij)
        return np.eye(3)[None] - dt * blocks


def viscous_force(ctx: SphContext, v, mu, regularizer: float = 0.01):
    """Viscous acceleration of every dynamic particle (boundary samples at their velocity)."""
    return _Operator(ctx, np.asarray(mu, dtype=float), regularizer).accel(np.asarray(v, dtype=float))


def viscous_apply(ctx: SphContext, v, mu, dt: float, regularizer: float = 0.01):
    """Matrix-vector product ``(I - dt A) v`` of the implicit system (boundary velocities excluded)."""
    v = np.asarray(v, dtype=float)
    op = _Operator(ctx, np.asarray(mu, dtype=float), regularizer)
    return v - dt * op.accel(v, with_boundary_velocity=False)


def solve_implicit_viscosity(ctx: SphContext, v_star, mu, dt: float,
                             config: ViscousSolveConfig | None = None):
    """Solve ``v = v* + dt A(v)`` with Jacobi-preconditioned CG.

    Returns ``(v, report)``. The mass-weighted system ``M (I - dt A)`` is
    symmetric positive definite because the pair viscosity is symmetric.
    """
    config = config or ViscousSolveConfig()
    v_star = np.asarray(v_star, dtype=float)
    mu = np.asarray(mu, dtype=float)
    report = ViscousReport(boundary_force=np.zeros((ctx.n_boundary, 3)))
    if ctx.n == 0 or not np.any(mu > 0):
        return v_star.copy(), report

    op = _Operator(ctx, mu, config.regularizer)
    m = ctx.masses[:, None]

    def apply(x):
        return m * (x - dt * op.accel(x, with_boundary_velocity=False))

    b = m * (v_star + dt * op.boundary_accel_source())
    precond = np.linalg.inv(m[:, :, None] * op.diagonal_blocks(dt))

    x = v_star.copy()
    r = b - apply(x)
    bnorm = np.linalg.norm(b)
    rnorm = np.linalg.norm(r)
    target = config.tol * (bnorm if bnorm > 0 else 1.0)
    it = 0
    if rnorm > target:
        z = np.einsum("nij,nj->ni", precond, r)
        p = z.copy()
        rz = np.vdot(r, z)
        while it < config.max_iter:
            ap = apply(p)
            pap = np.vdot(p, ap)
            if pap <= 0:
                break
            step = rz / pap
            x += step * p
            r -= step * ap
            it += 1
            rnorm = np.linalg.norm(r)
            if rnorm <= target:
                break
            z = np.einsum("nij,nj->ni", precond, r)
            rz_new = np.vdot(r, z)
            p = z + (rz_new / rz) * p
            rz = rz_new
    report.iterations = it
    report.residual = rnorm / (bnorm if bnorm > 0 else 1.0)
    report.converged = rnorm <= target
    if not report.converged:
        warnings.warn(f"viscosity CG stopped at {it} iterations (relative residual {report.residual:.3e})",
                      CgNoConvergence, stacklevel=2)
    report.boundary_force = op.boundary_reaction(x)
    return x, report
