import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cubic_lattice
from nnsph.neighbors import (AlreadyCaptured, NonFinitePosition, build_grid, capture_rest_neighborhood, neighbor_list,
                             query_neighbors, query_pairs, surface_mask)
from oracles import brute_force_pairs


def test_empty_grid():
    grid = build_grid(np.empty((0, 3)), 0.1)
    assert grid.n_particles == 0
    nl = neighbor_list(grid)
    assert nl.n_pairs == 0 and nl.indptr.tolist() == [0]


def test_same_cell_pair_retrievable():
    grid = build_grid([[0.01, 0.02, 0.03], [0.05, 0.06, 0.07]], 0.1)
    assert grid.cell((0, 0, 0)).tolist() == [0, 1]
    assert grid.cells == {(0, 0, 0): pytest.approx(np.array([0, 1]))}


def test_cell_coordinate_is_floor():
    pts = np.array([[-0.05, 0.15, 0.31], [0.0, 0.0, 0.0]])
    grid = build_grid(pts, 0.1)
    assert grid.cell((-1, 1, 3)).tolist() == [0]
    assert grid.cell((0, 0, 0)).tolist() == [1]
    members = np.concatenate(list(grid.cells.values()))
    assert sorted(members.tolist()) == [0, 1]


def test_ten_thousand_random_particles_match_brute_force(rng):
    pts = rng.uniform(0, 1, size=(10_000, 3))
    r = 0.05
    nl = neighbor_list(build_grid(pts, r))
    indptr, j = brute_force_pairs(pts, pts, r, exclude_self=True)
    np.testing.assert_array_equal(nl.indptr, indptr)
    np.testing.assert_array_equal(nl.j, j)


def test_isolated_particle_has_no_neighbors():
    grid = build_grid([[0, 0, 0], [1, 1, 1]], 0.1)
    assert query_neighbors(grid, 0, 0.1) == []


def test_pair_just_inside_radius():
    r = 0.1
    grid = build_grid([[0, 0, 0], [0.99 * r, 0, 0]], r)
    assert query_neighbors(grid, 0, r) == [1]
    assert query_neighbors(grid, 1, r) == [0]


def test_pair_at_exact_radius_excluded():
    grid = build_grid([[0, 0, 0], [0.125, 0, 0]], 0.125)
    assert query_neighbors(grid, 0, 0.125) == []


def test_lattice_quarter_spacing_interior_count():
    h = 0.1
    pts = cubic_lattice(17, h / 4)
    grid = build_grid(pts, h)
    centre = int(np.argmin(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))
    d = np.linalg.norm(pts - pts[centre], axis=1)
    expected = sorted(np.flatnonzero((d < h) & (np.arange(len(pts)) != centre)).tolist())
    assert query_neighbors(grid, centre, h) == expected
    # integer points strictly inside a radius-4 ball, centre excluded
    assert len(expected) == 250


def test_radius_larger_than_cell_rejected():
    grid = build_grid([[0, 0, 0]], 0.1)
    with pytest.raises(ValueError):
        query_pairs(grid, [[0, 0, 0]], 0.2)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_position_raises(bad):
    with pytest.raises(NonFinitePosition):
        build_grid([[0, 0, 0], [bad, 0, 0]], 0.1)


def test_invalid_cell_size():
    with pytest.raises(ValueError):
        build_grid([[0, 0, 0]], 0.0)


def test_rebuild_is_idempotent(rng):
    pts = rng.uniform(0, 1, size=(500, 3))
    a, b = neighbor_list(build_grid(pts, 0.1)), neighbor_list(build_grid(pts, 0.1))
    np.testing.assert_array_equal(a.i, b.i)
    np.testing.assert_array_equal(a.j, b.j)


def test_rows_sorted_and_cover_all_particles(rng):
    pts = rng.uniform(0, 1, size=(800, 3))
    nl = neighbor_list(build_grid(pts, 0.15))
    assert np.all(np.diff(nl.i) >= 0)
    for a in range(len(pts)):
        assert np.all(np.diff(nl.row(a)) > 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 300), st.floats(0.02, 0.4))
def test_neighbor_relation_is_symmetric(seed, n, r):
    pts = np.random.default_rng(seed).uniform(0, 1, size=(n, 3))
    nl = neighbor_list(build_grid(pts, r))
    forward = set(zip(nl.i.tolist(), nl.j.tolist()))
    assert forward == {(b, a) for a, b in forward}


def test_sparse_points_coarsen_cells_but_stay_exact():
    pts = np.array([[0, 0, 0], [1e4, 0, 0], [1e4 + 0.05, 0, 0], [-3e3, 2e3, 1e3]])
    grid = build_grid(pts, 0.1)
    assert grid.search_radius == 0.1
    nl = neighbor_list(grid)
    assert list(zip(nl.i.tolist(), nl.j.tolist())) == [(1, 2), (2, 1)]


def test_rest_single_particle():
    pts = np.zeros((1, 3))
    rest = capture_rest_neighborhood(build_grid(pts, 0.1), pts, [1.0])
    assert rest.n_pairs == 0
    assert rest.row(0).tolist() == []


def test_rest_two_particles_offsets():
    pts = np.array([[0.0, 0.0, 0.0], [0.03, 0.04, 0.0]])
    rest = capture_rest_neighborhood(build_grid(pts, 0.1), pts, [1.0, 1.0])
    assert rest.i.tolist() == [0, 1] and rest.j.tolist() == [1, 0]
    np.testing.assert_array_equal(rest.offsets[0], pts[1] - pts[0])
    np.testing.assert_array_equal(rest.offsets[1], -(pts[1] - pts[0]))


def test_rest_lattice_interior_offsets_identical():
    s = 0.0625  # power of two: lattice offsets are exact
    h = 2 * s
    pts = cubic_lattice(7, s)
    rest = capture_rest_neighborhood(build_grid(pts, h), pts, np.full(len(pts), s**3))
    idx = np.round(pts / s).astype(int)
    interior = np.flatnonzero(np.all((idx >= 2) & (idx <= 4), axis=1))
    multisets = set()
    for a in interior:
        rows = slice(rest.indptr[a], rest.indptr[a + 1])
        multisets.add(tuple(sorted(map(tuple, np.round(rest.offsets[rows] / s).astype(int).tolist()))))
    assert len(multisets) == 1
    assert len(next(iter(multisets))) == 26
    assert np.all(np.linalg.norm(rest.offsets, axis=1) < h)


def test_rest_capture_once_per_group():
    pts = np.zeros((2, 3))
    grid = build_grid(pts, 0.1)
    registry = {}
    capture_rest_neighborhood(grid, pts, [1, 1], registry=registry, group="tomato")
    capture_rest_neighborhood(grid, pts, [1, 1], registry=registry, group="cow")
    with pytest.raises(AlreadyCaptured):
        capture_rest_neighborhood(grid, pts, [1, 1], registry=registry, group="tomato")


def test_rest_is_frozen_and_independent_of_later_motion():
    pts = np.array([[0.0, 0, 0], [0.05, 0, 0]])
    rest = capture_rest_neighborhood(build_grid(pts, 0.1), pts, [1.0, 1.0])
    before = rest.offsets.copy()
    pts[1, 0] = 5.0
    np.testing.assert_array_equal(rest.offsets, before)
    with pytest.raises(ValueError):
        rest.offsets[0, 0] = 1.0
    with pytest.raises(ValueError):
        rest.j[0] = 7


def test_rest_labels_keep_bodies_apart():
    pts = np.array([[0.0, 0, 0], [0.05, 0, 0], [0.1, 0, 0]])
    rest = capture_rest_neighborhood(build_grid(pts, 0.1), pts, np.ones(3), labels=[0, 0, 1])
    assert list(zip(rest.i.tolist(), rest.j.tolist())) == [(0, 1), (1, 0)]


def test_surface_mask_threshold():
    counts = np.array([0, 5, 10, 11, 40])
    assert surface_mask(counts).tolist() == [True, True, True, False, False]
