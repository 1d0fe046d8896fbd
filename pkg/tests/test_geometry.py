import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ostrovsky_lab.geometry import (
    Parallelogram,
    QuadratureSettings,
    affine_coordinates,
    clip_convex,
    convolution_on_affine_grid,
    graded_panels,
    indicator_convolution_value,
    integrate_over_parallelogram,
    intersection_area,
    polygon_area,
)

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def random_parallelogram(rng, spread=1.0):
    v1 = rng.uniform(-spread, spread, 2)
    e1 = rng.uniform(-1, 1, 2)
    e2 = rng.uniform(-1, 1, 2)
    if abs(e1[0] * e2[1] - e1[1] * e2[0]) < 0.05:
        e2 = np.array([-e1[1], e1[0]])
    verts = (tuple(v1), tuple(v1 + e1), tuple(v1 + e1 + e2), tuple(v1 + e2))
    return Parallelogram(verts)


def monte_carlo_overlap(p, q, rng, n=100_000):
    pts = np.array(p.vertices)
    lo, hi = pts.min(0), pts.max(0)
    sample = rng.uniform(lo, hi, (n, 2))
    inside_p = p.contains_local(sample)
    inside_q = q.contains_local(sample)
    return np.mean(inside_p & inside_q) * np.prod(hi - lo)


def test_polygon_area():
    assert polygon_area(SQUARE) == 1.0
    assert polygon_area(SQUARE[::-1]) == 1.0
    assert polygon_area([(0, 0), (1, 0)]) == 0.0


def test_clip_disjoint_and_contained():
    far = [(x + 5, y) for x, y in SQUARE]
    assert intersection_area(SQUARE, far) == 0.0
    small = [(0.25, 0.25), (0.5, 0.25), (0.5, 0.5), (0.25, 0.5)]
    assert intersection_area(SQUARE, small) == pytest.approx(1 / 16)
    assert clip_convex([], SQUARE) == []


def test_parallelogram_validation():
    with pytest.raises(ValueError):
        Parallelogram(((0, 0), (1, 0), (2, 0), (1, 0)))
    with pytest.raises(ValueError):
        Parallelogram(((0, 0), (1, 0), (1, 1), (0, 2)))


def test_clipping_properties_against_monte_carlo(rng):
    for _ in range(5):
        p, q = random_parallelogram(rng, 0.4), random_parallelogram(rng, 0.4)
        a = intersection_area(p.vertices, q.vertices)
        assert a == pytest.approx(intersection_area(q.vertices, p.vertices), abs=1e-12)
        assert intersection_area(p.vertices, p.vertices) == pytest.approx(p.area, rel=1e-12)
        mc = monte_carlo_overlap(p, q, rng)
        assert a == pytest.approx(mc, abs=0.01 * max(p.area, q.area))


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_square_autocorrelation_is_a_tent(a, b):
    p = Parallelogram(tuple(SQUARE))
    q = p.reflected()
    got = indicator_convolution_value(p, q, (a, b))
    expect = max(0.0, 1 - abs(a)) * max(0.0, 1 - abs(b))
    assert got == pytest.approx(expect, abs=1e-12)


def test_convolution_bounded_by_areas(rng):
    p, q = random_parallelogram(rng), random_parallelogram(rng)
    for z in rng.uniform(-2, 2, (50, 2)):
        v = indicator_convolution_value(p, q, tuple(z))
        assert 0 <= v <= min(p.area, q.area) + 1e-12


def test_affine_grid_matches_direct_clipping(rng):
    p = random_parallelogram(rng)
    q = Parallelogram(tuple((t + 0.3, x - 0.2) for t, x in p.local_vertices), (4.0, -1.0))
    e1, e2 = p.edges
    base = np.asarray(p.local_vertices[0]) + np.asarray(q.local_vertices[0])
    alpha = rng.uniform(-1, 2, 20)
    beta = rng.uniform(-1, 2, 20)
    got = convolution_on_affine_grid(p, q, tuple(base), alpha, beta)
    for a, b, g in zip(alpha, beta, got):
        z = base + a * e1 + b * e2
        ref = indicator_convolution_value(p, q, tuple(z), point_offset=(4.0, -1.0))
        assert g == pytest.approx(ref, abs=1e-12)


def test_affine_coordinates_of_vertices(rng):
    p = random_parallelogram(rng)
    st_ = affine_coordinates(p, np.array(p.local_vertices))
    assert np.allclose(st_, [[0, 0], [1, 0], [1, 1], [0, 1]], atol=1e-12)


def test_reflection_and_centering(rng):
    p = Parallelogram(random_parallelogram(rng).local_vertices, (100.0, 3.0))
    r = p.reflected()
    assert r.area == p.area
    c = p.centered()
    assert c.edges[0].tolist() == p.edges[0].tolist()
    center = np.mean(np.array(c.vertices), axis=0)
    assert np.allclose(center, 0, atol=1e-12)


def test_quadrature_integrates_polynomials(rng):
    p = random_parallelogram(rng)
    assert integrate_over_parallelogram(p, lambda t, x: np.ones_like(t)) == pytest.approx(p.area)
    # first moment equals area times centroid
    c = p.local_center
    got = integrate_over_parallelogram(p, lambda t, x: t + 2 * x)
    assert got == pytest.approx(p.area * (c[0] + 2 * c[1]), rel=1e-12)


def test_graded_panels_stay_separated():
    edges = graded_panels(-1.0, 1.0, [1e-3], levels=200, ratio=0.35)
    assert np.all(np.diff(edges) > 0)
    assert 1e-3 in edges
    assert np.min(np.abs(edges - 1e-3)[edges != 1e-3]) > 1e-16


def test_refined_settings():
    q = QuadratureSettings().refined()
    assert q.order == 24 and q.levels == 36
