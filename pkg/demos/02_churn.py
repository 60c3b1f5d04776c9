"""
Users coming and going
======================

Replays join and leave waves against a built clustering and counts how many
clusters actually had to change. Most departures are absorbed by surplus
members, so far fewer clusters are touched than users leave.
"""

# %%
from clustercloak import EngineConfig, build_clusters
from clustercloak.workload import DatasetSpec, generate_churn_trace, generate_map, replay

config = EngineConfig(seed=4)
users, _ = generate_map(DatasetSpec(1000, "random", 0, seed=4))
base = build_clusters(users, config)
print(f"start: {len(base)} clusters for {len(users)} users")

# %%
# Each wave runs on a fresh copy so the percentages are comparable.
print(f"{'kind':>6} {'pct':>4} {'events':>6} {'adjusted':>8} {'merges':>6} {'mean us':>8}")
for kind in ("join", "leave"):
    for pct in (0.05, 0.10, 0.15, 0.20):
        cset = base.copy()
        trace = generate_churn_trace(users, kind, pct, seed=int(pct * 100))
        records = replay(cset, trace, config, verify=True)
        reports = [r.report for r in records if r.report]
        adjusted = sum(r.clusters_adjusted for r in reports)
        merges = sum(r.merges for r in reports)
        mean_us = sum(r.elapsed_us for r in reports) / max(len(reports), 1)
        print(f"{kind:>6} {pct:>4.0%} {len(trace):>6} {adjusted:>8} {merges:>6} {mean_us:>8.0f}")
