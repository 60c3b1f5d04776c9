"""
When does a departure force a merge?
====================================

A cluster stays valid while its size is at least the largest k among its
members. For a handful of small clusters, remove each member in turn and
compare the predicted rebuild probability with what actually happens.
"""

# %%
from clustercloak import ClusterSet, EngineConfig, Point, SplitState, UserProfile, compute_robustness, point_quit

cases = [(2, 2, 3, 3, 4, 5), (2, 3, 3, 4, 5), (2, 4, 4, 4)]

for ks in cases:
    state = compute_robustness(len(ks), ks)
    merged = 0
    for leaver in range(1, len(ks) + 1):
        cset = ClusterSet()
        group = [UserProfile(i + 1, Point(i, 0), k) for i, k in enumerate(ks)]
        spare = [UserProfile(50, Point(900, 0), 2), UserProfile(51, Point(901, 0), 2)]
        cset.users.update({u.user_id: u for u in group + spare})
        cset.new_cluster([u.user_id for u in group], SplitState.TERMINAL)
        cset.new_cluster([50, 51], SplitState.TERMINAL)
        merged += point_quit(cset, leaver, EngineConfig()).merges > 0
    print(f"k levels {ks}: predicted P_need={state.p_need}, spare members={state.n_ex}, "
          f"observed merges {merged}/{len(ks)}")
