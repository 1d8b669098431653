import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nnsph.kernels import KernelSpec
from nnsph.neighbors import build_grid, neighbor_list, query_pairs
from nnsph.pairs import make_context

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def cubic_lattice(n, spacing, origin=(0.0, 0.0, 0.0)):
    g = np.arange(n) * spacing
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    return pts + np.asarray(origin, dtype=float)


def context_for(x, h, masses=None, xb=None, psi=None, vb=None, rho0=1000.0):
    """SPH context over ``x`` (and optional boundary samples) with support ``h``."""
    x = np.asarray(x, dtype=float)
    spec = KernelSpec(h)
    masses = np.ones(len(x)) if masses is None else np.asarray(masses, dtype=float)
    ff = neighbor_list(build_grid(x, h))
    fb = None
    if xb is not None and len(xb):
        fb = query_pairs(build_grid(xb, h), x, h)
    return make_context(x, masses, spec, ff, xb, fb, psi, vb, rho0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
