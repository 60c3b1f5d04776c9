import itertools
import math

import pytest

from clustercloak import Point, UserProfile


def users_at(coords, k=2, start=1):
    """UserProfiles with ids start, start+1, ... at ``coords``; ``k`` is an int or a list."""
    ks = k if isinstance(k, (list, tuple)) else [k] * len(coords)
    return [UserProfile(start + i, Point(float(x), float(y)), kk) for i, ((x, y), kk) in enumerate(zip(coords, ks))]


def _sum_dist_to_mean(pts):
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    return sum(math.hypot(p[0] - cx, p[1] - cy) for p in pts)


def best_feasible_bipartitions(users):
    """Every feasible 2-partition with minimum total CDS, by exhaustive enumeration.

    Written against raw tuples only; shares no code with the engine.
    """
    recs = [(u.user_id, (u.position.x, u.position.y), u.k) for u in users]
    first, rest = recs[0], recs[1:]
    scored = []
    for r in range(0, len(rest) + 1):
        for combo in itertools.combinations(rest, r):
            a = [first, *combo]
            b = [x for x in rest if x not in combo]
            if not b:
                continue
            if len(a) < max(x[2] for x in a) or len(b) < max(x[2] for x in b):
                continue
            cost = _sum_dist_to_mean([x[1] for x in a]) + _sum_dist_to_mean([x[1] for x in b])
            scored.append((cost, frozenset([frozenset(x[0] for x in a), frozenset(x[0] for x in b)])))
    if not scored:
        return set(), None
    best = min(c for c, _ in scored)
    return {p for c, p in scored if math.isclose(c, best, rel_tol=1e-12, abs_tol=1e-12)}, best


def membership(cset):
    return frozenset(frozenset(c.members) for c in cset)


@pytest.fixture
def four_users():
    return users_at([(0, 0), (0, 1), (10, 0), (10, 1)])


@pytest.fixture
def five_users():
    # three close together on the left, two on the right
    return users_at([(0, 0), (0, 1), (0, 2), (50, 0), (50, 1)])


def manual_set(*groups, state=None):
    """ClusterSet with one cluster per group of UserProfiles, ids 0, 1, ... in order."""
    from clustercloak import ClusterSet, SplitState

    cset = ClusterSet()
    for g in groups:
        cset.users.update({u.user_id: u for u in g})
    for g in groups:
        cset.new_cluster([u.user_id for u in g], state or SplitState.TERMINAL)
    return cset


def raw_violations(ks, cset):
    """Clusters smaller than their largest requested k, judged from ``ks`` alone."""
    bad = []
    seen = set()
    for c in cset:
        seen.update(c.members)
        if len(c.members) < max(ks[u] for u in c.members):
            bad.append(c.cluster_id)
    if seen != set(ks):
        bad.append("membership")
    return bad


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
