"""
Cloaking one query
==================

Build a clustering over a random population, then follow a single request
through the anonymizer: the exact position goes in, a rectangle shared by
the whole cluster goes out, and the answer is picked back at the exact spot.
"""

# %%
# A random map: 400 users on a 10 km square, each asking for k between 2 and 5.
from clustercloak import EngineConfig, SourceMessage, answer_query, build_clusters, cloak
from clustercloak.workload import DatasetSpec, generate_map

users, pois = generate_map(DatasetSpec(400, "random", 0, seed=1))
cset = build_clusters(users, EngineConfig(seed=1))
print(f"{len(users)} users grouped into {len(cset)} clusters")

# %%
# Pick a user and look at their cluster.
me = users[17]
home = cset.home_of(me.user_id)
print(f"user {me.user_id} wants k={me.k}; cluster {home.cluster_id} has {home.size} members "
      f"(largest k inside: {home.k_max})")

# %%
# The message that reaches the location service carries ranges only.
msg = SourceMessage(me.user_id, 1, me.position, me.k, "restaurant")
out = cloak(cset, msg)
print("forwarded:", out)

# %%
# Every member of the cluster would have produced the same ranges.
same = {cloak(cset, SourceMessage(u, 1, cset.users[u].position, cset.users[u].k, "restaurant")).x_range
        for u in home.members}
print("distinct x ranges across the cluster:", len(same))

# %%
# The provider returns candidates near the rectangle; the nearest one to the
# true position is handed back.
res = answer_query(cset, pois, msg)
d = res.poi.position.distance(me.position)
print(f"answer: poi {res.poi.poi_id} at {d:.0f} m, chosen from {res.candidate_count} candidates, "
      f"cloak area {res.cloak_area / 1e6:.3f} km^2")
