"""Cluster records and the live cluster collection."""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import UnknownUser
from .robustness import compute_robustness
from .spatial import MBR, Point, UserProfile, area_radius, cds, centroid, circles_touch, mbr_of


class SplitState(enum.Enum):
    PENDING = "pending"
    TERMINAL = "terminal"


@dataclass(frozen=True, slots=True)
class Cluster:
    cluster_id: int
    members: tuple[int, ...]
    center: Point
    cds: float
    radius: float
    mbr: MBR
    k_max: int
    p_need: Fraction
    n_ex: int
    feasible: bool
    split_state: SplitState

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_division_candidate(self) -> bool:
        return self.p_need == 0 and self.n_ex > 1 and self.split_state is SplitState.PENDING


def make_cluster(
    cluster_id: int,
    members: Iterable[int],
    users: Mapping[int, UserProfile],
    split_state: SplitState = SplitState.PENDING,
) -> Cluster:
    """Build a cluster record with every derived field computed from ``users``."""
    members = tuple(sorted(members))
    if not members:
        raise ValueError("cluster must have at least one member")
    points = [users[u].position for u in members]
    ks = sorted(users[u].k for u in members)
    center = centroid(points)
    rob = compute_robustness(len(members), ks)
    return Cluster(
        cluster_id=cluster_id,
        members=members,
        center=center,
        cds=cds(points, center),
        radius=area_radius(points, center),
        mbr=mbr_of(points),
        k_max=ks[-1],
        p_need=rob.p_need,
        n_ex=rob.n_ex,
        feasible=rob.feasible,
        split_state=split_state,
    )


def cluster_area_radius(cluster: Cluster, positions: Mapping[int, Point]) -> float:
    """Distance from the cluster center to its farthest member."""
    return area_radius([positions[u] for u in cluster.members], cluster.center)


def are_neighbors(a: Cluster, b: Cluster) -> bool:
    """True when the two cluster-area circles intersect or touch."""
    if a.cluster_id == b.cluster_id:
        raise ValueError("a cluster is not its own neighbor")
    return circles_touch(a.center, a.radius, b.center, b.radius)


class _ClusterIndex:
    """Columnar copy of per-cluster scalars for vectorised nearest/neighbor scans."""

    _FIELDS = ("cx", "cy", "radius", "n_ex", "area")

    def __init__(self, capacity: int = 64):
        self._data = np.zeros((capacity, len(self._FIELDS)))
        self._ids = np.zeros(capacity, dtype=np.int64)
        self._row: dict[int, int] = {}
        self._n = 0

    def _values(self, c: Cluster):
        return (c.center.x, c.center.y, c.radius, c.n_ex, c.mbr.area)

    def put(self, c: Cluster) -> None:
        row = self._row.get(c.cluster_id)
        if row is None:
            if self._n == len(self._ids):
                self._data = np.concatenate([self._data, np.zeros_like(self._data)])
                self._ids = np.concatenate([self._ids, np.zeros_like(self._ids)])
            row = self._n
            self._n += 1
            self._row[c.cluster_id] = row
            self._ids[row] = c.cluster_id
        self._data[row] = self._values(c)

    def drop(self, cluster_id: int) -> None:
        row = self._row.pop(cluster_id)
        last = self._n - 1
        if row != last:
            moved = int(self._ids[last])
            self._data[row] = self._data[last]
            self._ids[row] = moved
            self._row[moved] = row
        self._n = last

    @property
    def ids(self) -> np.ndarray:
        return self._ids[: self._n]

    def column(self, name: str) -> np.ndarray:
        return self._data[: self._n, self._FIELDS.index(name)]

    def nearest(self, p: Point, exclude: int | None = None) -> int | None:
        """Cluster id whose center is closest to ``p``; ties go to the lowest id."""
        if self._n == 0:
            return None
        d2 = (self.column("cx") - p.x) ** 2 + (self.column("cy") - p.y) ** 2
        ids = self.ids
        if exclude is not None and exclude in self._row:
            d2 = d2.copy()
            d2[self._row[exclude]] = np.inf
            if self._n == 1:
                return None
        best = d2.min()
        return int(ids[d2 == best].min())


class ClusterSet:
    """The live clustering: clusters by id, the user registry and the user -> cluster index.

    One owner mutates a ClusterSet at a time. The random generator used for
    seeding lives here so that replaying the same events is reproducible.
    """

    def __init__(self, rng: random.Random | None = None):
        self.clusters: dict[int, Cluster] = {}
        self.users: dict[int, UserProfile] = {}
        self.user_index: dict[int, int] = {}
        self.next_cluster_id = 0
        self.rng = rng if rng is not None else random.Random(0)
        self._index = _ClusterIndex()

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self) -> Iterator[Cluster]:
        return iter(self.clusters[cid] for cid in sorted(self.clusters))

    def __contains__(self, cluster_id: int) -> bool:
        return cluster_id in self.clusters

    def __getitem__(self, cluster_id: int) -> Cluster:
        return self.clusters[cluster_id]

    def copy(self) -> ClusterSet:
        """Independent copy; clusters and profiles are immutable so they are shared."""
        new = ClusterSet.__new__(ClusterSet)
        new.clusters = dict(self.clusters)
        new.users = dict(self.users)
        new.user_index = dict(self.user_index)
        new.next_cluster_id = self.next_cluster_id
        new.rng = random.Random()
        new.rng.setstate(self.rng.getstate())
        new._index = _ClusterIndex()
        for c in self.clusters.values():
            new._index.put(c)
        return new

    def home_of(self, user_id: int) -> Cluster:
        try:
            return self.clusters[self.user_index[user_id]]
        except KeyError:
            raise UnknownUser(f"user {user_id} is not registered") from None

    def profile(self, user_id: int) -> UserProfile:
        try:
            return self.users[user_id]
        except KeyError:
            raise UnknownUser(f"user {user_id} is not registered") from None

    # -- structural mutation; callers keep the safety invariant --

    def new_cluster(self, members: Iterable[int], split_state=SplitState.PENDING) -> Cluster:
        cid = self.next_cluster_id
        self.next_cluster_id += 1
        c = make_cluster(cid, members, self.users, split_state)
        self._store(c)
        return c

    def refresh(self, cluster_id: int, members: Iterable[int] | None = None, split_state=None) -> Cluster:
        old = self.clusters[cluster_id]
        c = make_cluster(
            cluster_id,
            old.members if members is None else members,
            self.users,
            old.split_state if split_state is None else split_state,
        )
        self._store(c)
        return c

    def set_split_state(self, cluster_id: int, state: SplitState) -> Cluster:
        from dataclasses import replace

        c = replace(self.clusters[cluster_id], split_state=state)
        self.clusters[cluster_id] = c
        return c

    def remove_cluster(self, cluster_id: int) -> None:
        c = self.clusters.pop(cluster_id)
        self._index.drop(cluster_id)
        for u in c.members:
            if self.user_index.get(u) == cluster_id:
                del self.user_index[u]

    def _store(self, c: Cluster) -> None:
        self.clusters[c.cluster_id] = c
        self._index.put(c)
        for u in c.members:
            self.user_index[u] = c.cluster_id

    def nearest_cluster(self, p: Point, exclude: int | None = None) -> int | None:
        return self._index.nearest(p, exclude)

    def neighbor_ids(self, cluster_id: int) -> np.ndarray:
        c = self.clusters[cluster_id]
        idx = self._index
        d = np.hypot(idx.column("cx") - c.center.x, idx.column("cy") - c.center.y)
        hit = (d <= idx.column("radius") + c.radius) & (idx.ids != cluster_id)
        return idx.ids[hit]

    def index_columns(self, *names: str) -> tuple[np.ndarray, ...]:
        return (self._index.ids,) + tuple(self._index.column(n) for n in names)
