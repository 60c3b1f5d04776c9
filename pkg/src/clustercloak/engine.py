"""Initial clustering by recursive two-way splitting."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .clusters import Cluster, ClusterSet, SplitState
from .errors import AnonymityUnsatisfiable, DuplicateUser
from .robustness import RobustnessState, compute_robustness
from .seeding import SeedingMethod, Seeds, choose_seeds, make_rng
from .spatial import UserProfile

__all__ = [
    "EngineConfig",
    "DivisionFailed",
    "RobustnessState",
    "compute_robustness",
    "is_division_candidate",
    "binary_cluster",
    "build_clusters",
    "divide_until_stable",
]


@dataclass(frozen=True)
class EngineConfig:
    seeding: SeedingMethod = SeedingMethod.RS
    center_tolerance: float = 1e-9
    max_bisection_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seeding", SeedingMethod.parse(self.seeding))
        if not self.center_tolerance > 0:
            raise ValueError("center_tolerance must be > 0")
        if self.max_bisection_iterations < 1:
            raise ValueError("max_bisection_iterations must be >= 1")


@dataclass(frozen=True)
class DivisionFailed:
    """Outcome of a bisection that could not produce two valid halves."""

    reason: str  # "empty" or "infeasible"

    def __bool__(self):
        return False


def is_division_candidate(cluster: Cluster) -> bool:
    return cluster.is_division_candidate


def lloyd_bisect(xy: np.ndarray, seeds: Seeds, tol: float, max_iter: int) -> np.ndarray | None:
    """Two-center Lloyd iteration. Returns a boolean mask for the second half, or None
    when one half runs empty. Equidistant points go to the first center."""
    centers = np.array([[seeds[0].x, seeds[0].y], [seeds[1].x, seeds[1].y]], dtype=float)
    for _ in range(max_iter):
        d_a = ((xy - centers[0]) ** 2).sum(axis=1)
        d_b = ((xy - centers[1]) ** 2).sum(axis=1)
        to_b = d_b < d_a
        n_b = int(to_b.sum())
        if n_b == 0 or n_b == len(xy):
            return None
        new = np.array([xy[~to_b].mean(axis=0), xy[to_b].mean(axis=0)])
        moved = np.hypot(*(new - centers).T)
        centers = new
        if moved.max() < tol:
            break
    return to_b


def binary_cluster(cset: ClusterSet, cluster_id: int, seeds: Seeds, config: EngineConfig):
    """Try to split one cluster in two around ``seeds``.

    On success the parent is replaced by the two halves inside ``cset`` and
    the pair of new clusters is returned. Otherwise the parent is marked
    terminal and a falsy :class:`DivisionFailed` comes back.
    """
    parent = cset[cluster_id]
    if parent.size < 2:
        raise ValueError("cannot bisect a cluster with fewer than two members")
    members = parent.members
    xy = np.array([(cset.users[u].position.x, cset.users[u].position.y) for u in members])
    to_b = lloyd_bisect(xy, seeds, config.center_tolerance, config.max_bisection_iterations)
    if to_b is None:
        cset.set_split_state(cluster_id, SplitState.TERMINAL)
        return DivisionFailed("empty")
    half_a = [u for u, b in zip(members, to_b) if not b]
    half_b = [u for u, b in zip(members, to_b) if b]
    for half in (half_a, half_b):
        if len(half) < max(cset.users[u].k for u in half):
            cset.set_split_state(cluster_id, SplitState.TERMINAL)
            return DivisionFailed("infeasible")
    a = cset.new_cluster(half_a)
    b = cset.new_cluster(half_b)
    cset.remove_cluster(cluster_id)
    return a, b


@dataclass
class DivisionStats:
    splits: int = 0
    failures: int = 0
    created: list[int] = field(default_factory=list)


def divide_until_stable(cset: ClusterSet, start: Iterable[int], config: EngineConfig) -> DivisionStats:
    """Split clusters reachable from ``start`` until none is a division candidate.

    Lowest cluster id is processed first.
    """
    stats = DivisionStats()
    heap = list(start)
    heapq.heapify(heap)
    while heap:
        cid = heapq.heappop(heap)
        c = cset.clusters.get(cid)
        if c is None or not c.is_division_candidate:
            continue
        labeled = [(u, cset.users[u].position) for u in c.members]
        seeds = choose_seeds(config.seeding, labeled, cset.rng)
        out = binary_cluster(cset, cid, seeds, config)
        if not out:
            stats.failures += 1
            continue
        stats.splits += 1
        for child in out:
            stats.created.append(child.cluster_id)
            heapq.heappush(heap, child.cluster_id)
    return stats


def build_clusters(users: Sequence[UserProfile], config: EngineConfig | None = None) -> ClusterSet:
    """Partition ``users`` into feasible clusters, starting from one cluster holding everyone."""
    config = config or EngineConfig()
    cset = ClusterSet(rng=make_rng(config.seed))
    for u in users:
        if u.user_id in cset.users:
            raise DuplicateUser(f"user {u.user_id} appears twice")
        cset.users[u.user_id] = u
    if not users:
        return cset
    k_max = max(u.k for u in users)
    if len(users) < k_max:
        raise AnonymityUnsatisfiable(f"{len(users)} users cannot satisfy anonymity level {k_max}")
    root = cset.new_cluster(cset.users)
    divide_until_stable(cset, [root.cluster_id], config)
    return cset
