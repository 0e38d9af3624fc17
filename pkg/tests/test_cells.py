import math

import numpy as np
import pytest

from guidepath.cells import CellError, build_cbf_cone, build_cell, exit_direction
from guidepath.geometry import Polytope2, polytope_vertices
from guidepath.runtime import active_edge
from guidepath.tree import RoadmapTree

BOX = Polytope2.box(-10, 10, -10, 10)


def make_tree(points, parents):
    nodes = {k: np.array(p, dtype=float) for k, p in enumerate(points)}
    return RoadmapTree(nodes, dict(enumerate(parents)), parents.index(None), [])


def test_exit_direction_axis():
    t = make_tree([(0, 0), (2, 0)], [None, 0])
    z = exit_direction(t, (1, 0))
    np.testing.assert_allclose(z, (1, 0))
    cell = build_cell(t, (1, 0), BOX)
    assert cell.lyapunov((2, 0)) == pytest.approx(2.0)
    assert cell.lyapunov((0, 0)) == 0.0


def test_coincident_nodes_rejected():
    t = make_tree([(0, 0), (0, 0)], [None, 0])
    with pytest.raises(CellError):
        exit_direction(t, (1, 0))
    with pytest.raises(CellError):
        exit_direction(make_tree([(0, 0), (1, 0)], [None, 0]), (0, 1))  # not an edge


def test_two_node_cell_is_half_box():
    t = make_tree([(0, 0), (2, 0)], [None, 0])
    cell = build_cell(t, (1, 0), BOX)
    v = polytope_vertices(cell.polytope)
    assert sorted(map(tuple, np.round(v, 9))) == [(0.0, -10.0), (0.0, 10.0), (10.0, -10.0), (10.0, 10.0)]
    # the face through x_j holds with equality there
    assert np.min(cell.polytope.slack((0, 0))) == pytest.approx(0.0, abs=1e-9)
    assert np.min(cell.polytope.slack((2, 0))) > 0


def test_collinear_bisector():
    # 0 <- 1 <- 2 on a line: the cell of node 1 meets the bisector with node 2
    t = make_tree([(0, 0), (2, 0), (4, 0)], [None, 0, 1])
    cell = build_cell(t, (1, 0), BOX, reduce=False)
    k = cell.sources.index("node:2")
    mid = np.array([3.0, 0.0])
    assert cell.polytope.A[k] @ mid == pytest.approx(cell.polytope.b[k], abs=1e-9)
    reduced = build_cell(t, (1, 0), BOX)
    assert "parent" in reduced.sources and "node:2" in reduced.sources
    assert len(reduced.polytope) == 4  # parent face, bisector, two box sides


def test_reduction_keeps_the_set(rng):
    pts = [(0, 0)] + [tuple(rng.uniform(-8, 8, 2)) for _ in range(25)]
    parents = [None] + [int(rng.integers(0, k)) for k in range(1, 26)]
    t = make_tree(pts, parents)
    for edge in t.edges():
        full = build_cell(t, edge, BOX, reduce=False)
        red = build_cell(t, edge, BOX)
        a, b = polytope_vertices(full.polytope), polytope_vertices(red.polytope)
        assert a.shape == b.shape
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_lyapunov_nonnegative_on_cell(rng):
    pts = [(0, 0)] + [tuple(rng.uniform(-8, 8, 2)) for _ in range(30)]
    parents = [None] + [int(rng.integers(0, k)) for k in range(1, 31)]
    t = make_tree(pts, parents)
    for edge in t.edges():
        cell = build_cell(t, edge, BOX)
        for v in polytope_vertices(cell.polytope):
            assert cell.lyapunov(v) >= -1e-9


def test_cell_membership_oracle(rng):
    """x is in the cell of (i, j) exactly when it lies in the bounds, on the
    far side of the face through x_j, and no node other than x_j is closer
    than x_i."""
    pts = [(0, 0)] + [tuple(rng.uniform(-8, 8, 2)) for _ in range(20)]
    parents = [None] + [int(rng.integers(0, k)) for k in range(1, 21)]
    t = make_tree(pts, parents)
    xs = rng.uniform(-10, 10, size=(1000, 2))
    for i, j in t.edges():
        cell = build_cell(t, (i, j), BOX)
        inside = cell.polytope.contains_many(xs, tol=1e-9)
        for x, got in zip(xs, inside):
            di = np.linalg.norm(x - t.nodes[i])
            near = all(di <= np.linalg.norm(x - t.nodes[k]) + 1e-9 for k in t.nodes if k not in (i, j))
            want = near and cell.lyapunov(x) >= -1e-9
            assert got == want


def test_active_edge_cell_contains_point(rng):
    pts = [(0, 0)] + [tuple(rng.uniform(-8, 8, 2)) for _ in range(20)]
    parents = [None] + [int(rng.integers(0, k)) for k in range(1, 21)]
    t = make_tree(pts, parents)
    cells = {e: build_cell(t, e, BOX) for e in t.edges()}
    for x in rng.uniform(-10, 10, size=(1000, 2)):
        e = active_edge(t, x, 1e-9)
        if isinstance(e, str) or cells[e].lyapunov(x) < 0:
            continue  # past the parent face the parent's own cell applies
        if np.linalg.norm(x - t.nodes[0]) < np.linalg.norm(x - t.nodes[e[0]]):
            continue  # the root owns no cell; the policy falls back here
        assert cells[e].polytope.contains(x, tol=1e-9)


def test_sibling_cells_disjoint(rng):
    t = make_tree([(0, 0), (3, 1), (3, -1), (-2, 2)], [None, 0, 0, 0])
    a, b = build_cell(t, (1, 0), BOX), build_cell(t, (2, 0), BOX)
    pts = rng.uniform(-10, 10, size=(5000, 2))
    both = a.polytope.contains_many(pts, tol=-1e-9) & b.polytope.contains_many(pts, tol=-1e-9)
    assert not both.any()


# -- cones --------------------------------------------------------------------


def test_cone_hand_construction():
    t = make_tree([(2, 0), (0, 0)], [None, 0])  # i = 1 at origin, j = 0 at (2, 0)
    cone = build_cbf_cone(t, (1, 0), [np.array([1.0, 1.0]), np.array([1.0, -1.0])])
    assert len(cone) == 2
    s = 1 / math.sqrt(2)
    rows = sorted(map(tuple, np.round(cone.A, 12)))
    assert rows == sorted([(round(s, 12), round(-s, 12)), (round(s, 12), round(s, 12))])
    np.testing.assert_allclose(cone.b, 0, atol=1e-12)
    h = cone.h((2, 0))
    np.testing.assert_allclose(sorted(h), [math.sqrt(2)] * 2)
    assert cone.sides == (1, -1)


def test_cone_without_samples():
    t = make_tree([(2, 0), (0, 0)], [None, 0])
    assert len(build_cbf_cone(t, (1, 0), [])) == 0


def test_cone_excludes_samples_past_the_edge():
    t = make_tree([(2, 0), (0, 0)], [None, 0])
    cone = build_cbf_cone(t, (1, 0), [np.array([5.0, 1.0])])
    assert len(cone) == 0


def test_cone_picks_nearest_perpendicular():
    t = make_tree([(4, 0), (0, 0)], [None, 0])
    samples = [np.array([1.0, 2.0]), np.array([3.0, 0.5]), np.array([2.0, -1.5])]
    cone = build_cbf_cone(t, (1, 0), samples)
    assert [tuple(s) for s in cone.supports] == [(3.0, 0.5), (2.0, -1.5)]


def test_cone_sample_on_edge_rejected():
    t = make_tree([(2, 0), (0, 0)], [None, 0])
    with pytest.raises(CellError):
        build_cbf_cone(t, (1, 0), [np.array([1.0, 0.0])])


def test_cone_invariants_on_random_edges(rng):
    for _ in range(200):
        xi, xj = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
        if np.linalg.norm(xi - xj) < 0.5:
            continue
        t = make_tree([xj, xi], [None, 0])
        samples = list(rng.uniform(-6, 6, size=(30, 2)))
        cone = build_cbf_cone(t, (1, 0), samples)
        assert np.all(cone.h(xj) >= 1e-6)
        np.testing.assert_allclose(cone.h(xi), 0, atol=1e-9)
        for r, o in enumerate(cone.supports):
            assert np.linalg.norm(cone.A[r]) == pytest.approx(1.0)
            assert cone.A[r] @ o + cone.b[r] == pytest.approx(0.0, abs=1e-9)
            assert cone.h(o)[r] == pytest.approx(0.0, abs=1e-9)
        # supports sit on opposite sides of the edge line
        assert len(set(cone.sides)) == len(cone.sides)


def test_cone_apex_at_parent():
    t = make_tree([(2, 0), (0, 0)], [None, 0])
    cone = build_cbf_cone(t, (1, 0), [np.array([1.0, 1.0])], apex="parent")
    assert cone.h((2, 0))[0] == pytest.approx(0.0, abs=1e-12)
    assert cone.h((0, 0))[0] > 0
