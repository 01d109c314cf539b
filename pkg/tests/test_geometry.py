import numpy as np
import pytest

from nestor.errors import EmptyDomain
from nestor.geometry import (Domain, Quadrature, TargetInterval,
                             annulus_domain, box_domain, interval_domain,
                             paraboloid_domain, pie_slice_domain)


def test_bbox_must_have_positive_extent():
    with pytest.raises(ValueError):
        Domain(dim=2, bbox=np.array([[0.0, 0.0], [1.0, 0.0]]),
               inside=lambda x: np.ones(len(x), bool))


def test_contains_is_false_outside_bbox():
    dom = box_domain([0, 0], [1, 1])
    pts = np.array([[1.5, 0.5], [-0.1, 0.5], [0.5, 0.5]])
    assert dom.contains(pts).tolist() == [False, False, True]


def test_target_interval_orientation():
    with pytest.raises(ValueError):
        TargetInterval(1.0, 1.0)
    t = TargetInterval(0, 2)
    assert t.length == 2.0 and isinstance(t.y_lo, float)
    grid = t.interior_grid(33)
    assert grid[0] > 0 and grid[-1] < 2 and np.all(np.diff(grid) > 0)


def test_tensor_quadrature_volume_and_determinism():
    dom = paraboloid_domain(2)
    q = Quadrature("tensor", 128)
    g1 = q.materialize(dom)
    g2 = q.materialize(dom)
    assert np.array_equal(g1.points, g2.points)
    assert np.array_equal(g1.weights, g2.weights)
    exact = 4 * np.sqrt(2) / 3
    assert abs(g1.volume - exact) < 3e-3 * exact


def test_monte_carlo_quadrature_seeded():
    dom = annulus_domain(0.2)
    q = Quadrature("monte-carlo", 20_000, seed=5)
    g1 = q.materialize(dom)
    g2 = Quadrature("monte-carlo", 20_000, seed=5).materialize(dom)
    g3 = Quadrature("monte-carlo", 20_000, seed=6).materialize(dom)
    assert np.array_equal(g1.points, g2.points)
    assert not np.array_equal(g1.points, g3.points)
    exact = np.pi * (1 - 0.04)
    assert abs(g1.volume - exact) < 0.05 * exact


def test_empty_domain_raises():
    dom = Domain(dim=1, bbox=np.array([[0.0], [1.0]]),
                 inside=lambda x: np.zeros(len(x), bool))
    with pytest.raises(EmptyDomain):
        Quadrature("tensor", 16).materialize(dom)


def test_boundary_adjacent_flags_square():
    dom = box_domain([0, 0], [1, 1])
    grid = Quadrature("tensor", 16).materialize(dom)
    adj = grid.boundary_adjacent
    pts = grid.points
    near_edge = np.min(np.minimum(pts, 1 - pts), axis=1) < 1.0 / 16
    assert np.array_equal(adj, near_edge)


def test_boundary_normals_are_unit():
    for dom in (paraboloid_domain(2), annulus_domain(0.3),
                pie_slice_domain(1.0), box_domain([0, 0], [2, 1]),
                interval_domain()):
        grid = Quadrature("tensor", 32).materialize(dom)
        pts = grid.points[grid.boundary_adjacent]
        normals = np.atleast_2d(dom.boundary_normal(pts))
        assert np.allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-9)


def test_sample_interior_margin():
    dom = paraboloid_domain(2)
    pts = dom.sample_interior(200, seed=1, margin=0.02)
    assert pts.shape == (200, 2)
    assert np.all(dom.contains(pts))
    # margin keeps samples a step away from the bowl
    assert np.all(pts[:, 0] - 0.5 * pts[:, 1] ** 2 > 1e-4)


def test_paraboloid_flatness_bbox_covers_bowl():
    dom = paraboloid_domain(2, flatness=3.0)
    # the widest section at x1 -> 1 has |x2| -> sqrt(2)
    x = np.array([[0.999, 1.40]])
    assert dom.contains(x)[0]
