import csv
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustercloak import EngineConfig, Point, UserProfile, area_ratio, build_clusters, entropy, relative_k, snapshot
from clustercloak.metrics import write_snapshot_csv
from conftest import manual_set, users_at


def test_relative_k_examples():
    cset = manual_set(users_at([(i, 0) for i in range(6)], k=3), users_at([(i, 9) for i in range(5)], k=5, start=10))
    values, mean = relative_k(cset)
    assert values[1] == 2.0 and values[10] == 1.0
    assert mean == pytest.approx((6 * 2.0 + 5 * 1.0) / 11)


def test_entropy_examples():
    cset = manual_set(users_at([(i, 0) for i in range(8)]), users_at([(0, 5)], start=20))
    h = entropy(cset)
    assert h[0] == 3.0 and h[1] == 0.0


def test_area_ratio_examples():
    # a 2x3 cluster in a 10x10 extent of users
    small = users_at([(0, 0), (2, 3)])
    corner = users_at([(10, 10), (9, 10)], start=3)
    edge = users_at([(0, 10), (10, 0)], start=5)
    cset = manual_set(small, corner, edge)
    rs, _ = area_ratio(cset)
    assert rs[0] == pytest.approx(0.06)
    one = manual_set(users_at([(0, 0), (4, 1), (2, 7)]))
    assert area_ratio(one)[0] == {0: 1.0}


def test_area_ratio_degenerate_and_literal():
    cset = manual_set(users_at([(3, 3), (3, 3)]))
    assert area_ratio(cset) == ({0: 0.0}, 0.0)
    assert area_ratio(cset, literal=True) == ({0: 0.0}, 0.0)
    cset = manual_set(users_at([(0, 0), (1, 1)]), users_at([(5, 5), (8, 8)], start=3))
    lit, _ = area_ratio(cset, literal=True)
    assert sum(lit.values()) == pytest.approx(1.0) and lit[1] == pytest.approx(0.9)


def test_snapshot_counts():
    m = snapshot(manual_set(users_at([(0, 0), (1, 0)]), users_at([(5, 5), (6, 5), (7, 5)], start=3)))
    assert m.cluster_count == 2 and sorted(m.sizes) == [2, 3] and m.total_users == 5


def _raw_metrics(users, cset):
    """Every metric from user records plus a plain membership listing."""
    pos = {u.user_id: (u.position.x, u.position.y) for u in users}
    ks = {u.user_id: u.k for u in users}
    groups = {c.cluster_id: list(c.members) for c in cset}
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    world = (max(xs) - min(xs)) * (max(ys) - min(ys))
    rk, ent, rs = {}, {}, {}
    for cid, g in groups.items():
        for u in g:
            rk[u] = len(g) / ks[u]
        ent[cid] = -sum((1 / len(g)) * math.log2(1 / len(g)) for _ in g)
        gx = [pos[u][0] for u in g]
        gy = [pos[u][1] for u in g]
        rs[cid] = (max(gx) - min(gx)) * (max(gy) - min(gy)) / world
    return rk, ent, rs


@given(st.integers(0, 10**6), st.integers(5, 150))
@settings(max_examples=40, deadline=None)
def test_snapshot_matches_raw_recomputation(seed, n):
    rng = random.Random(seed)
    users = [UserProfile(i, Point(rng.uniform(0, 500), rng.uniform(0, 500)), rng.randint(2, 5)) for i in range(n)]
    if n < max(u.k for u in users):
        return
    cset = build_clusters(users, EngineConfig(seed=seed))
    m = snapshot(cset)
    rk, ent, rs = _raw_metrics(users, cset)
    assert dict(zip(m.user_ids, m.r_k)) == pytest.approx(rk)
    assert dict(zip(m.cluster_ids, m.entropy)) == pytest.approx(ent)
    assert dict(zip(m.cluster_ids, m.rs)) == pytest.approx(rs)
    assert m.min_r_k >= 1.0
    assert m.min_entropy_margin >= 0.0
    assert all(h >= math.log2(k) for h, k in zip(m.entropy, m.k_max))
    assert snapshot(cset) == m


def test_strict_fraction():
    # sizes 3 with ks (2, 3, 3): one user strictly above, two at the boundary
    m = snapshot(manual_set(users_at([(0, 0), (1, 0), (2, 0)], k=[2, 3, 3])))
    assert m.strict_r_k_fraction == pytest.approx(1 / 3) and m.min_r_k == 1.0


def test_snapshot_csv(tmp_path):
    m = snapshot(manual_set(users_at([(0, 0), (1, 0)]), users_at([(5, 5), (6, 6), (7, 5)], start=3)))
    write_snapshot_csv(m, tmp_path / "m.csv")
    rows = list(csv.DictReader(open(tmp_path / "m.csv")))
    assert [r["row"] for r in rows].count("user") == 5
    assert [r["row"] for r in rows].count("cluster") == 2
    agg = rows[-1]
    assert agg["row"] == "aggregate" and float(agg["size"]) == 2.5 and agg["k"] == "2"
    assert float(agg["r_k"]) == pytest.approx(m.mean_r_k)
