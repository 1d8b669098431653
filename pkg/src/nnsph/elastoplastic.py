"""Corotated linear elasticity with von Mises plasticity on rest neighborhoods.

All sums run over the :class:`~nnsph.neighbors.RestNeighborhood` captured at
start-up; rest offsets are ``x0_j - x0_i`` and kernel gradients are taken at
``x0_ij = x0_i - x0_j``. A step is three passes: rotations, stresses, forces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, frobenius_norm, kernel_gradient, kernel_value, polar_rotation, sym
from .neighbors import RestNeighborhood
from .pairs import scatter_add


@dataclass(frozen=True)
class ElasticParams:
    """Young's modulus, Poisson ratio, elastic limit and plastic limit.

    ``gamma1 = inf`` disables plasticity; ``gamma2`` is then irrelevant and
    is not required to exceed it.
    """

    E: float
    poisson: float = 0.3
    gamma1: float = math.inf
    gamma2: float = math.inf

    def __post_init__(self):
        errors = self.problems()
        if errors:
            raise ValueError("; ".join(errors))

    def problems(self) -> list:
        out = []
        if not self.E > 0:
            out.append(f"E must be > 0, got {self.E}")
        if not 0.0 <= self.poisson < 0.5:
            out.append(f"poisson ratio must lie in [0, 0.5), got {self.poisson}")
        if not self.gamma1 > 0:
            out.append(f"gamma1 must be > 0, got {self.gamma1}")
        if math.isfinite(self.gamma1) and not self.gamma2 >= self.gamma1:
            out.append(f"gamma2 ({self.gamma2}) must be >= gamma1 ({self.gamma1})")
        return out

    @property
    def lame(self):
        return lame_parameters(self.E, self.poisson)

    @property
    def p_wave_modulus(self) -> float:
        lam, mu = self.lame
        return lam + 2.0 * mu


def lame_parameters(E, poisson):
    """(lambda, mu) from Young's modulus and Poisson ratio."""
    lam = E * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
    mu = E / (2.0 * (1.0 + poisson))
    return lam, mu


@dataclass
class SolidState:
    """History carried by solid particles between steps."""

    rest: RestNeighborhood
    eps_p: np.ndarray
    rotation: np.ndarray
    yield_exceeded: np.ndarray
    degenerate_count: int = 0
    eps_ep: np.ndarray | None = field(default=None, repr=False)
    stress: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, rest: RestNeighborhood) -> "SolidState":
        n = len(rest.rest_positions)
        return cls(rest, np.zeros((n, 3, 3)), np.tile(np.eye(3), (n, 1, 1)), np.zeros(n, dtype=bool))

    @property
    def plastic_norm(self):
        return frobenius_norm(self.eps_p)


def _rest_gradients(rest: RestNeighborhood, spec: KernelSpec):
    return kernel_gradient(-rest.offsets, spec)


def compute_apq(x, rest: RestNeighborhood, masses, spec: KernelSpec):
    """A_i = sum_j m_j W(x0_ij) (x_j - x_i)(x0_j - x0_i)^T."""
    x = np.asarray(x, dtype=float)
    n = len(rest.rest_positions)
    w = np.asarray(masses, dtype=float)[rest.j] * kernel_value(np.linalg.norm(rest.offsets, axis=1), spec)
    cur = x[rest.j] - x[rest.i]
    return scatter_add(rest.i, w[:, None, None] * cur[:, :, None] * rest.offsets[:, None, :], n)


def extract_rotation(apq, previous):
    """Polar rotations of ``apq``; degenerate entries keep ``previous``.

    Returns ``(R, degenerate_mask)``.
    """
    rot, ok = polar_rotation(apq, return_mask=True)
    rot = np.where(ok[:, None, None], rot, previous)
    return rot, ~ok


def displacement(x, rest: RestNeighborhood, rotation):
    """u_ji = R_i^T (x_j - x_i) - (x0_j - x0_i) for every rest pair."""
    x = np.asarray(x, dtype=float)
    cur = x[rest.j] - x[rest.i]
    return np.einsum("kba,kb->ka", rotation[rest.i], cur) - rest.offsets


def displacement_gradient(u, rest: RestNeighborhood, spec: KernelSpec, gradw=None):
    """grad u_i = sum_j V_j u_ji gradW(x0_ij)^T.

    Entry ``[a, b]`` approximates ``d u_a / d x0_b``.
    """
    gradw = _rest_gradients(rest, spec) if gradw is None else gradw
    vol = rest.volumes[rest.j]
    return scatter_add(rest.i, vol[:, None, None] * u[:, :, None] * gradw[:, None, :], len(rest.rest_positions))


def strain_from_gradient(grad_u):
    """Cauchy strain 1/2 (grad_u^T + grad_u)."""
    return sym(np.swapaxes(np.asarray(grad_u, dtype=float), -1, -2))


def strain_deviator(eps):
    eps = np.asarray(eps, dtype=float)
    tr = np.trace(eps, axis1=-2, axis2=-1)
    return eps - (tr / 3.0)[..., None, None] * np.eye(3)


def plastic_update(dev, eps_p, gamma1, gamma2):
    """von Mises yield gate, increment and capped accumulation.

    Where ``|dev| > gamma1`` the plastic strain grows by
    ``(|dev| - gamma1)/|dev| * dev`` and is then scaled back onto the ball of
    radius ``gamma2``. Elsewhere ``eps_p`` is returned untouched. Returns
    ``(eps_p_new, clamped_mask)``; the mask flags entries cut back to gamma2.
    Works on a single 3x3 tensor or a batch.
    """
    dev = np.asarray(dev, dtype=float)
    eps_p = np.asarray(eps_p, dtype=float)
    single = dev.ndim == 2
    if single:
        dev, eps_p = dev[None], eps_p[None]
    gamma1 = np.broadcast_to(np.asarray(gamma1, dtype=float), dev.shape[:1])
    gamma2 = np.broadcast_to(np.asarray(gamma2, dtype=float), dev.shape[:1])
    norm = frobenius_norm(dev)
    yielding = norm > gamma1
    out = eps_p.copy()
    clamped = np.zeros(len(dev), dtype=bool)
    if np.any(yielding):
        dn = norm[yielding]
        inc = ((dn - gamma1[yielding]) / dn)[:, None, None] * dev[yielding]
        trial = eps_p[yielding] + inc
        tn = frobenius_norm(trial)
        with np.errstate(divide="ignore"):
            scale = np.minimum(1.0, np.where(tn > 0, gamma2[yielding] / tn, 1.0))
        capped = trial * scale[:, None, None]
        # rounding can leave the projected norm an ulp above gamma2
        over = frobenius_norm(capped) > gamma2[yielding]
        while np.any(over):
            scale[over] = np.nextafter(scale[over], 0.0)
            capped[over] = trial[over] * scale[over, None, None]
            over = frobenius_norm(capped) > gamma2[yielding]
        out[yielding] = capped
        clamped[yielding] = scale < 1.0
    if single:
        return out[0], bool(clamped[0])
    return out, clamped


def hooke_stress(eps_e, E, poisson):
    """Isotropic linear elasticity: 2 mu eps + lambda tr(eps) I."""
    eps_e = np.asarray(eps_e, dtype=float)
    lam, mu = lame_parameters(np.asarray(E, dtype=float), np.asarray(poisson, dtype=float))
    lam = np.broadcast_to(lam, eps_e.shape[:-2])[..., None, None]
    mu = np.broadcast_to(mu, eps_e.shape[:-2])[..., None, None]
    tr = np.trace(eps_e, axis1=-2, axis2=-1)[..., None, None]
    return 2.0 * mu * eps_e + lam * tr * np.eye(3)


def elastic_forces(stress, rotation, rest: RestNeighborhood, spec: KernelSpec, gradw=None):
    """f_i = sum_j (-R_i f_ji + R_j f_ij) / 2.

    ``f_ji = -V_i sigma_i d_ij`` with ``d_ij = V_j gradW(x0_ij)`` is the force
    from j on i expressed in i's rest frame; ``f_ij`` is its mirror.
    """
    gradw = _rest_gradients(rest, spec) if gradw is None else gradw
    i, j = rest.i, rest.j
    vol = rest.volumes
    d_ij = vol[j, None] * gradw
    d_ji = -vol[i, None] * gradw
    f_ji = -vol[i, None] * np.einsum("kab,kb->ka", stress[i], d_ij)
    f_ij = -vol[j, None] * np.einsum("kab,kb->ka", stress[j], d_ji)
    pair = 0.5 * (-np.einsum("kab,kb->ka", rotation[i], f_ji) + np.einsum("kab,kb->ka", rotation[j], f_ij))
    return scatter_add(i, pair, len(rest.rest_positions))


def elastoplastic_step(state: SolidState, x, masses, spec: KernelSpec, E, poisson, gamma1, gamma2):
    """Run the three passes for all solid particles and return their elastic forces.

    Material arrays (``E``, ``poisson``, ``gamma1``, ``gamma2``) are per particle
    or scalars. Updates ``state`` in place.
    """
    rest = state.rest
    gradw = _rest_gradients(rest, spec)

    apq = compute_apq(x, rest, masses, spec)
    state.rotation, degenerate = extract_rotation(apq, state.rotation)
    state.degenerate_count += int(np.count_nonzero(degenerate))

    u = displacement(x, rest, state.rotation)
    eps_ep = strain_from_gradient(displacement_gradient(u, rest, spec, gradw))
    # deviator of the trial elastic strain, so a held deformation does not keep yielding
    dev = strain_deviator(eps_ep - state.eps_p)
    state.eps_p, clamped = plastic_update(dev, state.eps_p, gamma1, gamma2)
    state.yield_exceeded |= clamped
    eps_e = eps_ep - state.eps_p
    stress = hooke_stress(eps_e, E, poisson)
    state.eps_ep, state.stress = eps_ep, stress

    return elastic_forces(stress, state.rotation, rest, spec, gradw)
