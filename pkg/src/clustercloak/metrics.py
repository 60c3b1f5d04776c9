"""Privacy and quality-of-service measurements over a cluster snapshot."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .clusters import ClusterSet
from .spatial import mbr_of


@dataclass(frozen=True)
class SnapshotMetrics:
    user_ids: tuple[int, ...]
    user_cluster: tuple[int, ...]
    user_k: tuple[int, ...]
    r_k: tuple[float, ...]
    cluster_ids: tuple[int, ...]
    sizes: tuple[int, ...]
    k_max: tuple[int, ...]
    entropy: tuple[float, ...]
    mbr_area: tuple[float, ...]
    rs: tuple[float, ...]
    rs_literal: tuple[float, ...]
    cluster_count: int
    total_users: int

    @property
    def mean_r_k(self) -> float:
        return float(np.mean(self.r_k)) if self.r_k else 0.0

    @property
    def min_r_k(self) -> float:
        return min(self.r_k) if self.r_k else 0.0

    @property
    def strict_r_k_fraction(self) -> float:
        """Share of users whose cluster is strictly larger than their own k."""
        return float(np.mean(np.array(self.r_k) > 1.0)) if self.r_k else 0.0

    @property
    def mean_size(self) -> float:
        return float(np.mean(self.sizes)) if self.sizes else 0.0

    @property
    def mean_rs(self) -> float:
        return float(np.mean(self.rs)) if self.rs else 0.0

    @property
    def min_entropy_margin(self) -> float:
        """Smallest ``entropy - log2(k_max)`` over clusters; never negative when feasible."""
        if not self.entropy:
            return 0.0
        return min(h - math.log2(k) for h, k in zip(self.entropy, self.k_max))


def relative_k(cset: ClusterSet) -> tuple[dict[int, float], float]:
    """Cluster size over the user's own k, per user, plus the mean."""
    values = {}
    for c in cset:
        for u in c.members:
            values[u] = c.size / cset.users[u].k
    mean = float(np.mean(list(values.values()))) if values else 0.0
    return values, mean


def entropy(cset: ClusterSet) -> dict[int, float]:
    """Shannon entropy (bits) of a uniform guess over each cluster's members."""
    return {c.cluster_id: math.log2(c.size) for c in cset}


def area_ratio(cset: ClusterSet, literal: bool = False) -> tuple[dict[int, float], float]:
    """Cloak area of each cluster relative to a reference area, plus the mean.

    The reference is the bounding rectangle of all users. With
    ``literal=True`` it is the sum of all cluster MBR areas instead.
    """
    clusters = list(cset)
    if not clusters:
        return {}, 0.0
    areas = {c.cluster_id: c.mbr.area for c in clusters}
    if literal:
        total = math.fsum(areas.values())
    else:
        total = mbr_of(p.position for p in cset.users.values()).area
    ratios = {cid: (a / total if total > 0 else 0.0) for cid, a in areas.items()}
    return ratios, float(np.mean(list(ratios.values())))


def snapshot(cset: ClusterSet) -> SnapshotMetrics:
    rk, _ = relative_k(cset)
    ent = entropy(cset)
    rs, _ = area_ratio(cset)
    rs_lit, _ = area_ratio(cset, literal=True)
    clusters = list(cset)
    uids = tuple(sorted(rk))
    return SnapshotMetrics(
        user_ids=uids,
        user_cluster=tuple(cset.user_index[u] for u in uids),
        user_k=tuple(cset.users[u].k for u in uids),
        r_k=tuple(rk[u] for u in uids),
        cluster_ids=tuple(c.cluster_id for c in clusters),
        sizes=tuple(c.size for c in clusters),
        k_max=tuple(c.k_max for c in clusters),
        entropy=tuple(ent[c.cluster_id] for c in clusters),
        mbr_area=tuple(c.mbr.area for c in clusters),
        rs=tuple(rs[c.cluster_id] for c in clusters),
        rs_literal=tuple(rs_lit[c.cluster_id] for c in clusters),
        cluster_count=len(clusters),
        total_users=len(cset.users),
    )


SNAPSHOT_HEADER = ("row", "id", "cluster_id", "size", "k", "r_k", "entropy", "mbr_area", "rs", "rs_literal")


def write_snapshot_csv(m: SnapshotMetrics, path) -> None:
    """One row per user, one per cluster, and a final aggregate row.

    ``row`` is ``user``, ``cluster`` or ``aggregate``. Columns not meaningful
    for a row type are left blank. On the aggregate row ``size`` holds the
    mean cluster size, ``k`` the cluster count, and the remaining numeric
    columns their means over users (``r_k``) or clusters.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        sizes = dict(zip(m.cluster_ids, m.sizes))
        for uid, cid, k, r in zip(m.user_ids, m.user_cluster, m.user_k, m.r_k):
            w.writerow(["user", uid, cid, sizes[cid], k, _fmt(r), "", "", "", ""])
        for row in zip(m.cluster_ids, m.sizes, m.k_max, m.entropy, m.mbr_area, m.rs, m.rs_literal):
            cid, size, kmax, h, area, rs, rsl = row
            w.writerow(["cluster", cid, cid, size, kmax, "", _fmt(h), _fmt(area), _fmt(rs), _fmt(rsl)])
        w.writerow([
            "aggregate", "", "", _fmt(m.mean_size), m.cluster_count, _fmt(m.mean_r_k),
            _fmt(float(np.mean(m.entropy)) if m.entropy else 0.0),
            _fmt(float(np.mean(m.mbr_area)) if m.mbr_area else 0.0),
            _fmt(m.mean_rs), _fmt(float(np.mean(m.rs_literal)) if m.rs_literal else 0.0),
        ])


def _fmt(v: float) -> str:
    return repr(float(v))
