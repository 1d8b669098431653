import math

import numpy as np
import pytest

from nnsph.sampling import (EmptyBody, Shape, box_surface, lattice, load_point_cloud, oriented_box_surface,
                            rotation_z, sample_body, sphere_surface)


def test_unit_box_at_half_spacing():
    pts, vols = sample_body(Shape("box", max=(1, 1, 1)), 0.5)
    assert len(pts) == 8
    np.testing.assert_array_equal(np.unique(pts), [0.25, 0.75])
    np.testing.assert_array_equal(vols, 0.125)


def test_lattice_is_centered_in_box():
    pts = lattice([0, 0, 0], [1.05, 1, 1], 0.1)
    assert pts.shape == (10 * 10 * 10, 3)
    np.testing.assert_allclose(pts.min(axis=0) + pts.max(axis=0), [1.05, 1, 1], atol=1e-12)
    assert len(lattice([0, 0, 0], [0.05, 1, 1], 0.1)) == 0


def test_small_sphere_is_empty():
    with pytest.raises(EmptyBody):
        sample_body(Shape("sphere", center=(0.03, 0, 0), radius=0.04), 0.1)
    with pytest.raises(ValueError):
        sample_body(Shape("box", max=(1, 1, 1)), 0.0)


def test_unit_sphere_volume():
    pts, vols = sample_body(Shape("sphere", radius=1.0), 0.1)
    assert abs(len(pts) - 4 / 3 * math.pi / 1e-3) <= 0.02 * 4188.79
    assert vols.sum() == pytest.approx(len(pts) * 1e-3)
    assert np.all(np.linalg.norm(pts, axis=1) <= 1.0)


def test_cylinder_and_union():
    cyl = Shape("cylinder", center=(0, 0, 0), radius=0.5, height=1.0)
    pts, _ = sample_body(cyl, 0.05)
    assert len(pts) == pytest.approx(math.pi * 0.25 / 0.05**3, rel=0.03)
    assert np.all(np.abs(pts[:, 1]) <= 0.5)
    a = Shape("box", min=(0, 0, 0), max=(1, 1, 1))
    b = Shape("box", min=(2, 0, 0), max=(3, 1, 1))
    u, _ = sample_body(Shape("union", parts=(a, b)), 0.25)
    assert len(u) == 2 * 64
    assert not np.any((u[:, 0] > 1) & (u[:, 0] < 2))


def test_point_cloud_passes_through(tmp_path, rng):
    cloud = rng.uniform(-1, 1, size=(37, 3))
    np.savetxt(tmp_path / "c.xyz", cloud, fmt="%.17g")
    np.save(tmp_path / "c.npy", cloud)
    for name in ("c.xyz", "c.npy"):
        pts = load_point_cloud(tmp_path / name)
        out, vols = sample_body(Shape("point_cloud", points=pts), 0.02)
        np.testing.assert_array_equal(out, cloud)
        np.testing.assert_array_equal(vols, 0.02**3)


def test_box_surface_spacing_and_faces():
    pts = box_surface([0, 0, 0], [1, 1, 1], 0.1)
    assert len(pts) == 11**3 - 9**3
    on = np.any(np.isclose(pts, 0) | np.isclose(pts, 1), axis=1)
    assert on.all()
    open_ = box_surface([0, 0, 0], [1, 1, 1], 0.1, open_top=True)
    assert len(open_) == len(pts) - 81
    assert not np.any(np.isclose(open_[:, 1], 1) & (open_[:, 0] > 0.05) & (open_[:, 0] < 0.95)
                      & (open_[:, 2] > 0.05) & (open_[:, 2] < 0.95))


def test_oriented_box_surface_rotates_about_center():
    flat = box_surface([0, 0, 0], [2, 1, 1], 0.25)
    turned = oriented_box_surface([0, 0, 0], [2, 1, 1], 0.25, rotation_deg=30.0)
    c = np.array([1.0, 0.5, 0.5])
    np.testing.assert_allclose(turned, (flat - c) @ rotation_z(30.0).T + c, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(turned - c, axis=1), np.linalg.norm(flat - c, axis=1), atol=1e-12)


def test_sphere_surface():
    pts = sphere_surface([1, 2, 3], 0.5, 0.05)
    np.testing.assert_allclose(np.linalg.norm(pts - [1, 2, 3], axis=1), 0.5, rtol=1e-12)
    assert len(pts) == round(4 * math.pi * 0.25 / 0.0025)
    np.testing.assert_allclose(pts.mean(axis=0), [1, 2, 3], atol=5e-3)
    assert len(sphere_surface([0, 0, 0], 1e-3, 1.0)) == 12
