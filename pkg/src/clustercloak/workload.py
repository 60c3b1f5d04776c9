"""Synthetic populations, churn traces, replay, and the experiment grid.

Everything is driven by integer seeds; two runs with the same inputs produce
identical CSV bytes apart from the wall-time columns listed in
:data:`TIMING_COLUMNS`.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import random
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .anonymizer import Poi, PoiStore, answer_query
from .clusters import ClusterSet
from .dynamics import AdjustmentReport, point_insertion, point_move, point_quit
from .engine import EngineConfig, build_clusters
from .errors import AnonymityUnsatisfiable, NoResult, OracleViolation
from .metrics import snapshot
from .oracle import check_cluster_set
from .spatial import MBR, Point, SourceMessage, UserProfile

log = logging.getLogger(__name__)

GRID_USER_COUNTS = (100, 200, 400, 600, 800, 1000)
GRID_K_MODES = (2, 3, 4, 5, "random")
GRID_CHURN_PCTS = (0.05, 0.10, 0.15, 0.20)
CATEGORIES = ("restaurant", "fuel", "hospital", "atm")
DEFAULT_WORLD = MBR(0.0, 10_000.0, 0.0, 10_000.0)

TIMING_COLUMNS = frozenset({"build_s", "mean_adjust_us", "max_adjust_us", "elapsed_us", "mean_build_s"})


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts."""
    digest = hashlib.blake2b(":".join(map(str, parts)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def parse_k_mode(value) -> int | str:
    if isinstance(value, int):
        k_mode = value
    elif str(value).strip().lower() == "random":
        return "random"
    else:
        k_mode = int(value)
    if not 2 <= k_mode <= 5:
        raise ValueError(f"fixed k must lie in [2, 5], got {k_mode}")
    return k_mode


@dataclass(frozen=True)
class DatasetSpec:
    """One cell of the experiment grid."""

    n: int
    k_mode: int | str
    replication: int
    seed: int
    world: MBR = DEFAULT_WORLD
    poi_count: int = 200

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("user count must be positive")
        object.__setattr__(self, "k_mode", parse_k_mode(self.k_mode))


@dataclass(frozen=True)
class WorkloadSpec:
    user_counts: tuple[int, ...] = GRID_USER_COUNTS
    k_modes: tuple = GRID_K_MODES
    replications: int = 10
    world: MBR = DEFAULT_WORLD
    seed: int = 0
    join_pcts: tuple[float, ...] = GRID_CHURN_PCTS
    leave_pcts: tuple[float, ...] = GRID_CHURN_PCTS
    move_pcts: tuple[float, ...] = ()
    move_fraction: float = 0.1
    poi_count: int = 200

    def __post_init__(self):
        if self.replications < 1 or not self.user_counts:
            raise ValueError("need at least one user count and one replication")
        object.__setattr__(self, "k_modes", tuple(parse_k_mode(k) for k in self.k_modes))
        for p in (*self.join_pcts, *self.leave_pcts, *self.move_pcts):
            if not 0 <= p <= 1:
                raise ValueError(f"churn percentage out of range: {p}")

    @classmethod
    def quick(cls, seed: int = 0) -> WorkloadSpec:
        return cls(user_counts=(100, 200), replications=2, seed=seed)

    def cells(self) -> Iterator[DatasetSpec]:
        for k_mode in self.k_modes:
            for n in self.user_counts:
                for rep in range(self.replications):
                    yield DatasetSpec(
                        n, k_mode, rep, derive_seed(self.seed, n, k_mode, rep), self.world, self.poi_count
                    )


# -- populations --------------------------------------------------------------


def _uniform_point(rng: random.Random, world: MBR) -> Point:
    return Point(rng.uniform(world.x_min, world.x_max), rng.uniform(world.y_min, world.y_max))


def _draw_k(rng: random.Random, k_mode) -> int:
    return rng.randint(2, 5) if k_mode == "random" else int(k_mode)


def generate_map(ds: DatasetSpec) -> tuple[list[UserProfile], PoiStore]:
    """Uniform users and points of interest inside the world rectangle."""
    rng = random.Random(ds.seed)
    users = [UserProfile(i, _uniform_point(rng, ds.world), _draw_k(rng, ds.k_mode)) for i in range(ds.n)]
    pois = PoiStore(
        Poi(i, _uniform_point(rng, ds.world), CATEGORIES[rng.randrange(len(CATEGORIES))])
        for i in range(ds.poi_count)
    )
    return users, pois


# -- traces -------------------------------------------------------------------

EVENT_KINDS = ("join", "leave", "move", "query")
EVENT_HEADER = ("seq", "kind", "user_id", "x", "y", "k", "category")


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    user_id: int
    x: float | None = None
    y: float | None = None
    k: int | None = None
    category: str | None = None

    @property
    def position(self) -> Point | None:
        return None if self.x is None else Point(self.x, self.y)


class TraceError(ValueError):
    def __init__(self, seq, message):
        super().__init__(f"event {seq}: {message}")
        self.seq = seq


@dataclass
class EventTrace:
    events: list[Event] = field(default_factory=list)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def validate(self, registered: Iterable[int]) -> None:
        """Check sequence order and that every event references a live user."""
        alive = set(registered)
        last = None
        for e in self.events:
            if last is not None and e.seq <= last:
                raise TraceError(e.seq, "sequence numbers must strictly increase")
            last = e.seq
            if e.kind not in EVENT_KINDS:
                raise TraceError(e.seq, f"unknown kind {e.kind!r}")
            if e.kind == "join":
                if e.user_id in alive:
                    raise TraceError(e.seq, f"user {e.user_id} joins twice")
                if e.position is None or e.k is None:
                    raise TraceError(e.seq, "join needs x, y and k")
                alive.add(e.user_id)
                continue
            if e.user_id not in alive:
                raise TraceError(e.seq, f"user {e.user_id} is not registered")
            if e.kind == "leave":
                alive.remove(e.user_id)
            elif e.kind == "move" and e.position is None:
                raise TraceError(e.seq, "move needs x and y")
            elif e.kind == "query" and not e.category:
                raise TraceError(e.seq, "query needs a category")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EVENT_HEADER)
            for e in self.events:
                w.writerow([
                    e.seq, e.kind, e.user_id,
                    "" if e.x is None else repr(e.x),
                    "" if e.y is None else repr(e.y),
                    "" if e.k is None else e.k,
                    e.category or "",
                ])

    @classmethod
    def from_csv(cls, path) -> EventTrace:
        events = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != EVENT_HEADER:
                raise ValueError(f"{path}: expected header {','.join(EVENT_HEADER)}")
            for line, row in enumerate(reader, start=2):
                try:
                    events.append(Event(
                        seq=int(row["seq"]),
                        kind=row["kind"].strip(),
                        user_id=int(row["user_id"]),
                        x=float(row["x"]) if row["x"] else None,
                        y=float(row["y"]) if row["y"] else None,
                        k=int(row["k"]) if row["k"] else None,
                        category=row["category"] or None,
                    ))
                except (TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{line}: {exc}") from None
        return cls(events)


def generate_churn_trace(
    users: Sequence[UserProfile],
    kind: str,
    pct: float,
    seed: int,
    world: MBR = DEFAULT_WORLD,
    k_mode="random",
    move_fraction: float = 0.1,
) -> EventTrace:
    """``ceil(pct * n)`` join, leave or move events against the population ``users``.

    Joins use fresh ids above the current maximum. Moves follow a random
    waypoint model: each mover travels ``move_fraction`` of the way toward a
    uniform target.
    """
    if not users:
        raise ValueError("need a non-empty population")
    rng = random.Random(seed)
    count = math.ceil(pct * len(users) - 1e-9)
    ids = sorted(u.user_id for u in users)
    events = []
    if kind == "join":
        base = ids[-1] + 1
        for i in range(count):
            p = _uniform_point(rng, world)
            events.append(Event(i, "join", base + i, p.x, p.y, _draw_k(rng, k_mode)))
    elif kind == "leave":
        for i, uid in enumerate(rng.sample(ids, min(count, len(ids)))):
            events.append(Event(i, "leave", uid))
    elif kind == "move":
        by_id = {u.user_id: u for u in users}
        for i, uid in enumerate(rng.sample(ids, min(count, len(ids)))):
            here = by_id[uid].position
            target = _uniform_point(rng, world)
            events.append(Event(
                i, "move", uid,
                here.x + move_fraction * (target.x - here.x),
                here.y + move_fraction * (target.y - here.y),
            ))
    else:
        raise ValueError(f"unknown churn kind {kind!r}")
    return EventTrace(events)


def generate_mixed_trace(
    users: Sequence[UserProfile],
    n_events: int,
    seed: int,
    world: MBR = DEFAULT_WORLD,
    weights: dict[str, float] | None = None,
    k_range: tuple[int, int] = (2, 5),
) -> EventTrace:
    """Random interleaving of joins, leaves, moves and queries on a live population."""
    weights = weights or {"join": 1.0, "leave": 1.0, "move": 1.0, "query": 0.5}
    kinds = list(weights)
    rng = random.Random(seed)
    alive = sorted(u.user_id for u in users)
    pos = {u.user_id: u.position for u in users}
    next_id = (max(alive) + 1) if alive else 0
    events = []
    for seq in range(n_events):
        kind = rng.choices(kinds, [weights[k] for k in kinds])[0]
        if kind != "join" and not alive:
            kind = "join"
        if kind == "join":
            p = _uniform_point(rng, world)
            events.append(Event(seq, "join", next_id, p.x, p.y, rng.randint(*k_range)))
            alive.append(next_id)
            pos[next_id] = p
            next_id += 1
        elif kind == "leave":
            uid = alive.pop(rng.randrange(len(alive)))
            events.append(Event(seq, "leave", uid))
        elif kind == "move":
            uid = alive[rng.randrange(len(alive))]
            # half the moves are small jitters that usually stay in the home cluster
            spread = (world.width * 0.01) if rng.random() < 0.5 else world.width
            here = pos[uid]
            p = Point(
                min(max(here.x + rng.uniform(-spread, spread), world.x_min), world.x_max),
                min(max(here.y + rng.uniform(-spread, spread), world.y_min), world.y_max),
            )
            pos[uid] = p
            events.append(Event(seq, "move", uid, p.x, p.y))
        else:
            uid = alive[rng.randrange(len(alive))]
            events.append(Event(seq, "query", uid, category=CATEGORIES[rng.randrange(len(CATEGORIES))]))
    return EventTrace(events)


# -- replay -------------------------------------------------------------------

REPORT_HEADER = (
    "seq", "kind", "user_id", "outcome", "clusters_before", "clusters_after", "clusters_created",
    "clusters_deleted", "clusters_rebuilt", "merges", "cluster_count", "poi_id", "candidate_count",
    "cloak_area", "elapsed_us",
)


@dataclass
class EventRecord:
    event: Event
    outcome: str
    report: AdjustmentReport | None = None
    cluster_count: int = 0
    poi_id: int | None = None
    candidate_count: int | None = None
    cloak_area: float | None = None

    def row(self) -> list:
        r = self.report
        return [
            self.event.seq, self.event.kind, self.event.user_id, self.outcome,
            " ".join(map(str, r.before)) if r else "",
            " ".join(map(str, r.after)) if r else "",
            r.clusters_created if r else 0,
            r.clusters_deleted if r else 0,
            r.clusters_rebuilt if r else 0,
            r.merges if r else 0,
            self.cluster_count,
            "" if self.poi_id is None else self.poi_id,
            "" if self.candidate_count is None else self.candidate_count,
            "" if self.cloak_area is None else repr(self.cloak_area),
            f"{r.elapsed_us:.3f}" if r else "",
        ]


def apply_event(
    cset: ClusterSet, e: Event, config: EngineConfig, store: PoiStore | None = None, slack: float = 0.0
) -> EventRecord:
    """Apply one event. An unsatisfiable leave leaves the set untouched and is reported, not raised."""
    try:
        if e.kind == "join":
            rep = point_insertion(cset, UserProfile(e.user_id, e.position, e.k), config)
        elif e.kind == "leave":
            rep = point_quit(cset, e.user_id, config)
        elif e.kind == "move":
            rep = point_move(cset, e.user_id, e.position, config)
        elif e.kind == "query":
            rec = EventRecord(e, "ok", cluster_count=len(cset))
            if store is None:
                rec.cloak_area = cset.home_of(e.user_id).mbr.area
                return rec
            msg = SourceMessage(e.user_id, e.seq, cset.profile(e.user_id).position, cset.profile(e.user_id).k, e.category)
            try:
                res = answer_query(cset, store, msg, e.category, slack)
            except NoResult:
                rec.outcome = "no_result"
                rec.cloak_area = cset.home_of(e.user_id).mbr.area
                return rec
            rec.poi_id, rec.candidate_count, rec.cloak_area = res.poi.poi_id, res.candidate_count, res.cloak_area
            return rec
        else:
            raise ValueError(f"unknown event kind {e.kind!r}")
    except AnonymityUnsatisfiable:
        return EventRecord(e, "unsatisfiable", cluster_count=len(cset))
    return EventRecord(e, "ok", rep, cluster_count=len(cset))


def replay(
    cset: ClusterSet,
    trace: EventTrace,
    config: EngineConfig,
    store: PoiStore | None = None,
    verify: bool = True,
    slack: float = 0.0,
) -> list[EventRecord]:
    """Apply ``trace`` in order. With ``verify`` the oracle runs after every event."""
    trace.validate(cset.users)
    records = []
    for e in trace:
        records.append(apply_event(cset, e, config, store, slack))
        if verify:
            problems = check_cluster_set(cset)
            if problems:
                raise OracleViolation(f"oracle rejected state after event {e.seq}", problems)
    return records


def write_report_csv(records: Sequence[EventRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for rec in records:
            w.writerow(rec.row())


# -- users csv ----------------------------------------------------------------

USER_HEADER = ("user_id", "x", "y", "k")


def write_users_csv(users: Iterable[UserProfile], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(USER_HEADER)
        for u in users:
            w.writerow([u.user_id, repr(u.position.x), repr(u.position.y), u.k])


def read_users_csv(path) -> list[UserProfile]:
    """Parse a users file; malformed content raises ValueError naming the line."""
    users = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}:1: empty file")
        if tuple(h.strip() for h in reader.fieldnames) != USER_HEADER:
            raise ValueError(f"{path}:1: expected header {','.join(USER_HEADER)}")
        for line, row in enumerate(reader, start=2):
            try:
                u = UserProfile(int(row["user_id"]), Point(float(row["x"]), float(row["y"])), int(row["k"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
            if u.user_id in seen:
                raise ValueError(f"{path}:{line}: duplicate user_id {u.user_id}")
            seen.add(u.user_id)
            users.append(u)
    return users


# -- experiment grid ------------------------------------------------------------

DATASET_HEADER = (
    "method", "n", "k_mode", "replication", "seed", "cluster_count", "mean_size", "k_max", "size_margin",
    "mean_r_k", "min_r_k", "strict_r_k_fraction", "mean_entropy", "min_entropy_margin", "mean_rs",
    "mean_rs_literal", "build_s",
)
CHURN_HEADER = (
    "method", "n", "k_mode", "replication", "kind", "pct", "events", "applied", "unsatisfiable",
    "clusters_created", "clusters_deleted", "clusters_rebuilt", "clusters_adjusted", "merges",
    "final_cluster_count", "mean_adjust_us", "max_adjust_us",
)


@dataclass
class ExperimentResult:
    datasets: list[dict] = field(default_factory=list)
    churn: list[dict] = field(default_factory=list)

    def build_summary(self) -> list[dict]:
        groups: dict[tuple, list[dict]] = {}
        for row in self.datasets:
            groups.setdefault((row["method"], row["k_mode"], row["n"]), []).append(row)
        out = []
        for (method, k_mode, n), rows in groups.items():
            out.append({
                "method": method, "k_mode": k_mode, "n": n, "datasets": len(rows),
                "mean_cluster_count": _mean(r["cluster_count"] for r in rows),
                "mean_size": _mean(r["mean_size"] for r in rows),
                "mean_r_k": _mean(r["mean_r_k"] for r in rows),
                "min_r_k": min(r["min_r_k"] for r in rows),
                "mean_entropy": _mean(r["mean_entropy"] for r in rows),
                "mean_rs": _mean(r["mean_rs"] for r in rows),
                "mean_build_s": _mean(r["build_s"] for r in rows),
            })
        return out

    def churn_summary(self) -> list[dict]:
        groups: dict[tuple, list[dict]] = {}
        for row in self.churn:
            groups.setdefault((row["method"], row["kind"], row["pct"]), []).append(row)
        out = []
        for (method, kind, pct), rows in groups.items():
            events = sum(r["events"] for r in rows)
            applied = sum(r["applied"] for r in rows)
            out.append({
                "method": method, "kind": kind, "pct": pct, "events": events,
                "clusters_adjusted": sum(r["clusters_adjusted"] for r in rows),
                "merges": sum(r["merges"] for r in rows),
                "mean_adjust_us": (
                    sum(r["mean_adjust_us"] * r["applied"] for r in rows) / applied if applied else 0.0
                ),
            })
        return out

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "datasets": out / "datasets.csv",
            "churn": out / "churn.csv",
            "summary_build": out / "summary_build.csv",
            "summary_churn": out / "summary_churn.csv",
        }
        _write_dicts(paths["datasets"], DATASET_HEADER, self.datasets)
        _write_dicts(paths["churn"], CHURN_HEADER, self.churn)
        summary = self.build_summary()
        _write_dicts(paths["summary_build"], tuple(summary[0]) if summary else ("method",), summary)
        csum = self.churn_summary()
        _write_dicts(paths["summary_churn"], tuple(csum[0]) if csum else ("method",), csum)
        return paths


def _mean(values) -> float:
    values = list(values)
    return float(np.mean(values)) if values else 0.0


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _write_dicts(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row[h]) for h in header])


def write_repro_bundle(out_dir, spec, ds: DatasetSpec, config: EngineConfig, users, trace, problems) -> Path:
    """Directory with everything needed to replay a failing cell."""
    bundle = Path(out_dir) / f"repro_n{ds.n}_k{ds.k_mode}_r{ds.replication}_{ds.seed}"
    bundle.mkdir(parents=True, exist_ok=True)
    meta = {
        "dataset": {**asdict(ds), "world": asdict(ds.world)},
        "engine": {**asdict(config), "seeding": config.seeding.value},
        "workload_seed": getattr(spec, "seed", None),
        "problems": problems,
    }
    (bundle / "settings.json").write_text(json.dumps(meta, indent=2, default=str))
    write_users_csv(users, bundle / "users.csv")
    if trace is not None:
        trace.to_csv(bundle / "events.csv")
    return bundle


def _run_churn(cset, trace, config, verify, on_fail):
    applied = unsat = 0
    created = deleted = rebuilt = merges = 0
    times = []
    for e in trace:
        rec = apply_event(cset, e, config)
        if verify:
            problems = check_cluster_set(cset)
            if problems:
                on_fail(problems)
        if rec.outcome == "unsatisfiable":
            unsat += 1
            continue
        applied += 1
        r = rec.report
        created += r.clusters_created
        deleted += r.clusters_deleted
        rebuilt += r.clusters_rebuilt
        merges += r.merges
        times.append(r.elapsed_us)
    return {
        "events": len(trace), "applied": applied, "unsatisfiable": unsat,
        "clusters_created": created, "clusters_deleted": deleted, "clusters_rebuilt": rebuilt,
        "clusters_adjusted": deleted + rebuilt, "merges": merges,
        "final_cluster_count": len(cset),
        "mean_adjust_us": _mean(times), "max_adjust_us": max(times) if times else 0.0,
    }


def run_dataset(
    ds: DatasetSpec,
    config: EngineConfig,
    spec: WorkloadSpec | None = None,
    verify: bool = True,
    repro_dir=None,
) -> tuple[dict, list[dict]]:
    """Build one cell, record its snapshot metrics, then replay every configured churn trace."""
    spec = spec or WorkloadSpec()
    users, _ = generate_map(ds)
    cfg = replace(config, seed=derive_seed(config.seed, ds.seed))
    t0 = time.perf_counter()
    cset = build_clusters(users, cfg)
    build_s = time.perf_counter() - t0

    def fail(problems, trace=None):
        bundle = None
        if repro_dir is not None:
            bundle = write_repro_bundle(repro_dir, spec, ds, cfg, users, trace, problems)
        raise OracleViolation(f"oracle violation in cell n={ds.n} k={ds.k_mode} rep={ds.replication}", problems, bundle)

    if verify:
        problems = check_cluster_set(cset)
        if problems:
            fail(problems)
    m = snapshot(cset)
    method = cfg.seeding.value
    k_max = max(u.k for u in users)
    base = {"method": method, "n": ds.n, "k_mode": ds.k_mode, "replication": ds.replication}
    row = {
        **base, "seed": ds.seed, "cluster_count": m.cluster_count, "mean_size": m.mean_size, "k_max": k_max,
        "size_margin": 2 * k_max - m.mean_size, "mean_r_k": m.mean_r_k, "min_r_k": m.min_r_k,
        "strict_r_k_fraction": m.strict_r_k_fraction, "mean_entropy": _mean(m.entropy),
        "min_entropy_margin": m.min_entropy_margin, "mean_rs": m.mean_rs,
        "mean_rs_literal": _mean(m.rs_literal), "build_s": build_s,
    }
    churn_rows = []
    plan = [("join", p) for p in spec.join_pcts] + [("leave", p) for p in spec.leave_pcts]
    plan += [("move", p) for p in spec.move_pcts]
    for kind, pct in plan:
        trace = generate_churn_trace(
            users, kind, pct, derive_seed(ds.seed, kind, pct), ds.world, ds.k_mode, spec.move_fraction
        )
        stats = _run_churn(cset.copy(), trace, cfg, verify, lambda p, t=trace: fail(p, t))
        churn_rows.append({**base, "kind": kind, "pct": pct, **stats})
    return row, churn_rows


def run_experiment(
    spec: WorkloadSpec, config: EngineConfig, out_dir=None, verify: bool = True, progress=None
) -> ExperimentResult:
    """Run every grid cell for one seeding method and optionally write the CSV tree."""
    result = ExperimentResult()
    cells = list(spec.cells())
    for i, ds in enumerate(cells):
        row, churn = run_dataset(ds, config, spec, verify, repro_dir=None if out_dir is None else Path(out_dir) / "repro")
        result.datasets.append(row)
        result.churn.extend(churn)
        if progress is not None:
            progress(i + 1, len(cells), ds)
    if out_dir is not None:
        result.write(out_dir)
    return result


def strip_timing(path) -> list[list[str]]:
    """CSV rows with the wall-time columns removed, for determinism comparisons."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return rows
    keep = [i for i, h in enumerate(rows[0]) if h not in TIMING_COLUMNS]
    return [[r[i] for i in keep] for r in rows]
