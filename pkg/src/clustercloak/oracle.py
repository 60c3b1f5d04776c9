"""Independent feasibility check.

Works only from raw user records and the user -> cluster assignment; it
never reads cached cluster state (sizes, k_max, robustness fields) so a
bookkeeping bug in the engine cannot hide itself.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .clusters import ClusterSet


def kanon_violations(ks: Mapping[int, int], assignment: Mapping[int, int]) -> list[str]:
    """Describe every group whose size is below the largest k inside it."""
    problems = []
    if ks.keys() != assignment.keys():
        odd = sorted(set(ks) ^ set(assignment))
        problems.append(f"users without a consistent assignment: {odd[:10]}")
    if not assignment:
        return problems
    cids = np.array(list(assignment.values()), dtype=np.int64)
    kv = np.array([ks.get(u, 0) for u in assignment], dtype=np.int64)
    labels, inverse, counts = np.unique(cids, return_inverse=True, return_counts=True)
    need = np.zeros(len(labels), dtype=np.int64)
    np.maximum.at(need, inverse, kv)
    for i in np.flatnonzero(counts < need):
        problems.append(f"cluster {labels[i]}: {counts[i]} members but k_max={need[i]}")
    return problems


def check_cluster_set(cset: ClusterSet) -> list[str]:
    """Feasibility plus bidirectional agreement between memberships and the user index."""
    ks = {uid: p.k for uid, p in cset.users.items()}
    problems = kanon_violations(ks, cset.user_index)
    listed = {}
    for cid, c in cset.clusters.items():
        if not c.members:
            problems.append(f"cluster {cid} is empty")
        for u in c.members:
            listed[u] = cid if u not in listed else -1
    if listed != cset.user_index:
        dup = [u for u, cid in listed.items() if cid == -1]
        if dup:
            problems.append(f"users listed in more than one cluster: {dup[:10]}")
        problems.append("cluster memberships disagree with the user index")
    return problems
