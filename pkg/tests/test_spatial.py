import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustercloak import MBR, Point, are_neighbors, cds, centroid, cluster_area_radius, make_cluster, mbr_of, phi
from clustercloak.spatial import circles_touch
from conftest import users_at

coord = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
points = st.lists(st.builds(Point, coord, coord), min_size=1, max_size=40)


def P(*xy):
    return [Point(float(x), float(y)) for x, y in xy]


@pytest.mark.parametrize(
    "pts, expected",
    [
        (P((0, 0), (2, 0), (1, 3)), (1, 1)),
        (P((5, 5)), (5, 5)),
        (P((0, 0), (10, 0), (0, 10), (10, 10)), (5, 5)),
    ],
)
def test_centroid(pts, expected):
    c = centroid(pts)
    assert (c.x, c.y) == pytest.approx(expected)


def test_centroid_empty():
    with pytest.raises(ValueError):
        centroid([])


def test_point_rejects_nan():
    with pytest.raises(ValueError):
        Point(float("nan"), 0.0)


def test_cds_examples():
    # sqrt(2) + sqrt(2) + 2, summed by hand
    assert cds(P((0, 0), (2, 0), (1, 3)), Point(1, 1)) == pytest.approx(2 + 2 * math.sqrt(2), abs=1e-12)
    assert cds(P((3, 3)), Point(3, 3)) == 0
    assert cds(P((0, 0), (6, 8)), Point(0, 0)) == 10


@pytest.mark.parametrize(
    "pts, box",
    [
        (P((1, 2), (4, 6), (3, 1)), (1, 4, 1, 6)),
        (P((7, 7)), (7, 7, 7, 7)),
        (P((0, 0), (0, 5)), (0, 0, 0, 5)),
    ],
)
def test_mbr_of(pts, box):
    assert mbr_of(pts) == MBR(*map(float, box))


def test_cluster_area_radius():
    users = {u.user_id: u for u in users_at([(0, 0), (4, 0)])}
    c = make_cluster(0, users, users)
    assert cluster_area_radius(c, {u: p.position for u, p in users.items()}) == pytest.approx(2)

    users = {u.user_id: u for u in users_at([(3, 3)], k=2)}
    c = make_cluster(0, users, users)
    assert cluster_area_radius(c, {1: Point(3, 3)}) == 0

    users = {u.user_id: u for u in users_at([(0, 0), (0, 6), (8, 0)])}
    c = make_cluster(0, users, users)
    assert (c.center.x, c.center.y) == pytest.approx((8 / 3, 2))
    expected = max(math.dist((8 / 3, 2), q) for q in [(0, 0), (0, 6), (8, 0)])
    assert expected == pytest.approx(math.sqrt(292) / 3)
    assert cluster_area_radius(c, {u: p.position for u, p in users.items()}) == pytest.approx(expected)


@pytest.mark.parametrize(
    "a, ra, b, rb, expected",
    [
        ((0, 0), 2, (3, 0), 1.5, True),
        ((0, 0), 1, (5, 0), 1, False),
        ((0, 0), 1, (2, 0), 1, True),  # tangent
    ],
)
def test_circles_touch(a, ra, b, rb, expected):
    assert circles_touch(Point(*a), ra, Point(*b), rb) is expected


def test_are_neighbors_uses_cluster_radius():
    users = {u.user_id: u for u in users_at([(0, 0), (2, 0), (2, 0), (4, 0), (10, 0), (12, 0)])}
    left = make_cluster(0, [1, 2], users)
    mid = make_cluster(1, [3, 4], users)
    far = make_cluster(2, [5, 6], users)
    assert are_neighbors(left, mid)  # centers 2 apart, radii 1 + 1: tangent
    assert not are_neighbors(left, far)
    with pytest.raises(ValueError):
        are_neighbors(left, left)


@pytest.mark.parametrize("t, s, expected", [(5, 2, (3, 7)), (11, 3, (8, 14)), (0, 0, (0, 0))])
def test_phi(t, s, expected):
    assert phi(t, s) == expected


def test_phi_negative_spread():
    with pytest.raises(ValueError):
        phi(1.0, -0.5)


@given(points)
@settings(max_examples=100)
def test_centroid_minimises_squared_distance(pts):
    c = centroid(pts)
    rng = random.Random(len(pts))
    base = sum((p.x - c.x) ** 2 + (p.y - c.y) ** 2 for p in pts)
    for _ in range(100):
        q = (c.x + rng.uniform(-50, 50), c.y + rng.uniform(-50, 50))
        other = sum((p.x - q[0]) ** 2 + (p.y - q[1]) ** 2 for p in pts)
        assert base <= other * (1 + 1e-9) + 1e-9


@given(points)
def test_mbr_contains_and_is_tight(pts):
    box = mbr_of(pts)
    assert all(box.contains(p) for p in pts)
    assert any(p.x == box.x_min for p in pts)
    assert any(p.x == box.x_max for p in pts)
    assert any(p.y == box.y_min for p in pts)
    assert any(p.y == box.y_max for p in pts)


@given(st.builds(Point, coord, coord), st.floats(0, 1e3), st.builds(Point, coord, coord), st.floats(0, 1e3))
def test_neighbor_test_symmetric(a, ra, b, rb):
    assert circles_touch(a, ra, b, rb) == circles_touch(b, rb, a, ra)


@given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
def test_phi_width_and_midpoint(t, s):
    lo, hi = phi(t, s)
    assert hi - lo == pytest.approx(2 * s, rel=1e-12, abs=1e-6)
    assert (lo + hi) / 2 == pytest.approx(t, rel=1e-12, abs=1e-6)
