import numpy as np
from hypothesis import given, settings, strategies as st

from cxrestrict import geometry as geo

SQUARE = np.array([0, 1, 1 + 1j, 1j])


def test_area_and_centroid():
    assert geo.area(SQUARE) == 1.0
    assert abs(geo.centroid(SQUARE) - (0.5 + 0.5j)) < 1e-15
    assert geo.area(SQUARE[::-1]) == -1.0


def test_clip_halfplane():
    p = geo.clip_halfplane(SQUARE, 1, 0.5)  # Re z <= 0.5
    assert abs(geo.area(p) - 0.5) < 1e-15
    assert geo.clip_halfplane(SQUARE, 1, -1).size == 0
    assert np.array_equal(geo.clip_halfplane(SQUARE, 1, 2), SQUARE)


def test_cleanup_and_convexity():
    p = np.array([0, 0.5, 1, 1, 1 + 1j, 1j])
    q = geo.cleanup(p)
    assert q.size == 4 and geo.is_convex(q)
    assert not geo.is_convex(p)
    assert not geo.is_convex(SQUARE[::-1])
    assert not geo.is_convex(np.array([0, 2, 1 + 1j, 1 + 0.2j, 1j]))
    # a pentagram turns left at every vertex but winds twice
    star = np.exp(2j * np.pi * np.arange(0, 10, 2) / 5)
    assert not geo.is_convex(star)


def test_signed_edge_distance():
    d = geo.signed_edge_distance(SQUARE, [0.5 + 0.5j, 2, 0.1 + 0.5j])
    np.testing.assert_allclose(d, [0.5, -1, 0.1])


def test_regular_polygon_contains_disk():
    hp = geo.regular_polygon_halfplanes(1 + 1j, 2.0, 64)
    big = 10 * np.exp(2j * np.pi * np.arange(4) / 4) + (1 + 1j)
    poly = geo.clip_many(big, hp)
    r = np.abs(poly - (1 + 1j))
    assert np.all(r >= 2 - 1e-12) and np.all(r <= 2 / np.cos(np.pi / 64) + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_sample_in_polygon_inside_and_uniform(n, seed):
    rng = np.random.default_rng(seed)
    poly = np.exp(2j * np.pi * np.sort(rng.random(n)))
    poly = geo.cleanup(poly)
    if poly.size < 3 or geo.area(poly) < 1e-3:
        return
    pts = geo.sample_in_polygon(poly, 4000, rng)
    assert np.all(geo.signed_edge_distance(poly, pts) >= -1e-12)
    # mean of uniform samples approaches the centroid
    assert abs(pts.mean() - geo.centroid(poly)) < 0.1
