"""Incremental maintenance of a ClusterSet under join, leave and move events.

Every public function here leaves the set in a state where each cluster
holds at least as many users as the largest anonymity level among its
members. Operations that cannot keep that guarantee raise
:class:`AnonymityUnsatisfiable` before touching any state.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clusters import ClusterSet, SplitState
from .engine import EngineConfig, divide_until_stable
from .errors import AnonymityUnsatisfiable, DuplicateUser, UnknownUser
from .spatial import Point, UserProfile


@dataclass
class AdjustmentReport:
    """What one maintenance call did to the cluster set.

    ``clusters_rebuilt`` counts clusters that were re-divided (each one is
    replaced by two new clusters, so ``clusters_created == 2 * clusters_rebuilt``).
    ``clusters_deleted`` counts clusters that disappeared without being
    divided: merged into a neighbour, or emptied.
    """

    kind: str
    before: list[int] = field(default_factory=list)
    after: list[int] = field(default_factory=list)
    clusters_created: int = 0
    clusters_deleted: int = 0
    clusters_rebuilt: int = 0
    merges: int = 0
    elapsed_us: float = 0.0

    created_ids: list[int] = field(default_factory=list, repr=False)

    @property
    def clusters_adjusted(self) -> int:
        return self.clusters_rebuilt + self.clusters_deleted

    def absorb(self, other: AdjustmentReport) -> None:
        """Fold a nested report into this one."""
        self.clusters_created += other.clusters_created
        self.clusters_deleted += other.clusters_deleted
        self.clusters_rebuilt += other.clusters_rebuilt
        self.merges += other.merges
        for cid in other.before:
            if cid not in self.before and cid not in self.created_ids:
                self.before.append(cid)
        self.created_ids.extend(other.created_ids)

    def settle(self, cset: ClusterSet) -> AdjustmentReport:
        touched = set(self.before) | set(self.created_ids)
        self.after = sorted(c for c in touched if c in cset)
        return self


class _Timer:
    def __init__(self, report: AdjustmentReport):
        self.report = report

    def __enter__(self):
        self._t0 = time.perf_counter_ns()
        return self.report

    def __exit__(self, *exc):
        self.report.elapsed_us = (time.perf_counter_ns() - self._t0) / 1000.0
        return False


def cluster_adjustment(cset: ClusterSet, cluster_id: int, config: EngineConfig) -> AdjustmentReport:
    """Recompute a cluster's state and re-divide it (and its descendants) to a fixed point."""
    if cluster_id not in cset:
        raise ValueError(f"unknown cluster {cluster_id}")
    report = AdjustmentReport("adjust", before=[cluster_id])
    with _Timer(report):
        cset.refresh(cluster_id, split_state=SplitState.PENDING)
        stats = divide_until_stable(cset, [cluster_id], config)
        report.clusters_rebuilt = stats.splits
        report.clusters_created = 2 * stats.splits
        report.created_ids = list(stats.created)
        report.settle(cset)
    return report


def point_insertion(cset: ClusterSet, user: UserProfile, config: EngineConfig) -> AdjustmentReport:
    """Register ``user`` in the cluster with the nearest center, then re-divide that cluster.

    A newcomer whose k exceeds the grown cluster's size makes the host
    infeasible; the host is then merged like a cluster that lost a member.
    """
    if user.user_id in cset.users:
        raise DuplicateUser(f"user {user.user_id} is already registered")
    target = cset.nearest_cluster(user.position)
    if target is None or len(cset.users) + 1 < user.k:
        raise AnonymityUnsatisfiable(f"{len(cset.users) + 1} users cannot satisfy k={user.k}")
    report = AdjustmentReport("join", before=[target])
    with _Timer(report):
        cset.users[user.user_id] = user
        c = cset.refresh(target, members=cset[target].members + (user.user_id,))
        if c.feasible:
            report.absorb(cluster_adjustment(cset, target, config))
        else:
            report.absorb(cluster_merge(cset, target, config))
        report.settle(cset)
    return report


def _pick_merge_partner(cset: ClusterSet, cluster_id: int) -> int | None:
    neighbors = cset.neighbor_ids(cluster_id)
    if len(neighbors):
        ids, n_ex, area = cset.index_columns("n_ex", "area")
        mask = np.isin(ids, neighbors)
        ids, n_ex, area = ids[mask], n_ex[mask], area[mask]
        top = n_ex == n_ex.max()
        ids, area = ids[top], area[top]
        smallest = area == area.min()
        return int(ids[smallest].min())
    return cset.nearest_cluster(cset[cluster_id].center, exclude=cluster_id)


def cluster_merge(cset: ClusterSet, cluster_id: int, config: EngineConfig) -> AdjustmentReport:
    """Fold a cluster into a neighbour and re-divide the result.

    The partner is the neighbour (intersecting or touching cluster-area
    circle) with the most surplus members, smallest MBR among those. With no
    neighbour the nearest center is used instead. Merging repeats while the
    result is still infeasible.
    """
    if cluster_id not in cset:
        raise ValueError(f"unknown cluster {cluster_id}")
    report = AdjustmentReport("merge", before=[cluster_id])
    with _Timer(report):
        current = cluster_id
        while True:
            partner = _pick_merge_partner(cset, current)
            if partner is None:
                raise AnonymityUnsatisfiable(f"cluster {current} is infeasible and has no merge partner")
            if partner not in report.before:
                report.before.append(partner)
            merged = cset[partner].members + cset[current].members
            cset.remove_cluster(current)
            cset.refresh(partner, members=merged)
            report.clusters_deleted += 1
            report.merges += 1
            if cset[partner].feasible:
                break
            current = partner
        report.absorb(cluster_adjustment(cset, partner, config))
        report.settle(cset)
    return report


def _global_check_after_removal(cset: ClusterSet, user_id: int) -> None:
    home = cset.home_of(user_id)
    remaining = [u for u in home.members if u != user_id]
    if not remaining:
        return
    if len(remaining) >= max(cset.users[u].k for u in remaining):
        return
    if len(cset) > 1:
        # merging can always end in one all-inclusive cluster; check that one
        n = len(cset.users) - 1
        if n >= max(p.k for uid, p in cset.users.items() if uid != user_id):
            return
    raise AnonymityUnsatisfiable(f"removing user {user_id} leaves no feasible clustering")


def point_quit(cset: ClusterSet, user_id: int, config: EngineConfig) -> AdjustmentReport:
    """Unregister a user; merge the home cluster away if it became infeasible."""
    home = cset.home_of(user_id)
    _global_check_after_removal(cset, user_id)
    report = AdjustmentReport("leave", before=[home.cluster_id])
    with _Timer(report):
        remaining = tuple(u for u in home.members if u != user_id)
        del cset.users[user_id]
        del cset.user_index[user_id]
        if not remaining:
            cset.remove_cluster(home.cluster_id)
            report.clusters_deleted += 1
            return report
        c = cset.refresh(home.cluster_id, members=remaining)
        if c.feasible:
            report.absorb(cluster_adjustment(cset, c.cluster_id, config))
        else:
            report.absorb(cluster_merge(cset, c.cluster_id, config))
        report.settle(cset)
    return report


def point_move(cset: ClusterSet, user_id: int, new_position: Point, config: EngineConfig) -> AdjustmentReport:
    """Relocate a user. Staying nearest to the home center only refreshes that cluster."""
    home = cset.home_of(user_id)
    old = cset.users[user_id]
    report = AdjustmentReport("move", before=[home.cluster_id])
    with _Timer(report):
        if cset.nearest_cluster(new_position) == home.cluster_id:
            cset.users[user_id] = UserProfile(user_id, new_position, old.k)
            cset.refresh(home.cluster_id)
            return report.settle(cset)
        report.absorb(point_quit(cset, user_id, config))
        report.absorb(point_insertion(cset, UserProfile(user_id, new_position, old.k), config))
        report.settle(cset)
    return report
