"""Spatial k-anonymity by recursive clustering.

Users are grouped so that every cluster holds at least as many members as
the largest anonymity level requested inside it; a query is forwarded with
the cluster's bounding rectangle instead of the exact position.
"""
from .anonymizer import Poi, PoiStore, QueryResult, answer_query, cloak, lbs_range_query, select_optimal
from .clusters import Cluster, ClusterSet, SplitState, are_neighbors, cluster_area_radius, make_cluster
from .dynamics import AdjustmentReport, cluster_adjustment, cluster_merge, point_insertion, point_move, point_quit
from .engine import DivisionFailed, EngineConfig, binary_cluster, build_clusters, is_division_candidate
from .errors import (
    AnonymityUnsatisfiable,
    ClusterCloakError,
    DuplicateUser,
    NoResult,
    OracleViolation,
    UnknownUser,
)
from .metrics import SnapshotMetrics, area_ratio, entropy, relative_k, snapshot
from .oracle import check_cluster_set, kanon_violations
from .robustness import RobustnessState, compute_robustness
from .seeding import SeedingMethod, seed_mn, seed_nr, seed_rp, seed_rs
from .spatial import MBR, CloakedMessage, Point, SourceMessage, UserProfile, cds, centroid, mbr_of, phi

__version__ = "0.1.0"
