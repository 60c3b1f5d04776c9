"""``clustercloak`` command line: build, replay, query, bench.

Exit codes: 0 success, 2 input error, 3 anonymity unsatisfiable, 4 no result.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .anonymizer import PoiStore, answer_query
from .engine import EngineConfig, build_clusters
from .errors import AnonymityUnsatisfiable, NoResult, OracleViolation
from .metrics import snapshot, write_snapshot_csv
from .seeding import SeedingMethod
from .spatial import SourceMessage
from .workload import (
    EventTrace,
    TraceError,
    WorkloadSpec,
    read_users_csv,
    replay,
    run_experiment,
    write_report_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NO_RESULT = 0, 2, 3, 4

log = logging.getLogger("clustercloak")


class InputError(Exception):
    pass


@dataclass
class CliConfig:
    seeding: str = "rs"
    seed: int = 0
    tolerance: float = 1e-9
    max_iter: int = 100
    lbs_slack: float = 0.0
    out: str = "out"

    def engine(self) -> EngineConfig:
        return EngineConfig(SeedingMethod.parse(self.seeding), self.tolerance, self.max_iter, self.seed)


_CASTS = {"seeding": str, "seed": int, "tolerance": float, "max_iter": int, "lbs_slack": float, "out": str}
_ALIASES = {"max-iter": "max_iter", "max_bisection_iterations": "max_iter", "center_tolerance": "tolerance",
            "lbs-slack": "lbs_slack"}


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment. Unknown keys are rejected."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _CASTS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CASTS[key](value)
        except ValueError:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def resolve_config(args) -> CliConfig:
    cfg = CliConfig()
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            setattr(cfg, key, value)
    for f in fields(CliConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    try:
        cfg.engine()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return cfg


def _load_users(path):
    try:
        return read_users_csv(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_build(args) -> int:
    cfg = resolve_config(args)
    users = _load_users(args.users)
    cset = build_clusters(users, cfg.engine())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "clusters.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "cluster_id"])
        for uid in sorted(cset.user_index):
            w.writerow([uid, cset.user_index[uid]])
    write_snapshot_csv(snapshot(cset), out / "metrics.csv")
    print(f"{len(cset.users)} users in {len(cset)} clusters -> {out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = resolve_config(args)
    users = _load_users(args.users)
    try:
        trace = EventTrace.from_csv(args.events)
    except OSError as exc:
        raise InputError(f"{args.events}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    store = _load_pois(args.pois) if args.pois else None
    config = cfg.engine()
    cset = build_clusters(users, config)
    try:
        records = replay(cset, trace, config, store, verify=args.verify, slack=cfg.lbs_slack)
    except TraceError as exc:
        raise InputError(f"invalid trace at sequence number {exc.seq}: {exc}") from None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(records, out / "report.csv")
    merges = sum(r.report.merges for r in records if r.report)
    print(f"{len(records)} events replayed, {merges} merges, {len(cset)} clusters -> {out / 'report.csv'}")
    return EXIT_OK


def _load_pois(path) -> PoiStore:
    try:
        return PoiStore.from_csv(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_query(args) -> int:
    cfg = resolve_config(args)
    users = _load_users(args.users)
    store = _load_pois(args.pois)
    cset = build_clusters(users, cfg.engine())
    if args.user_id not in cset.users:
        raise InputError(f"user {args.user_id} is not in {args.users}")
    profile = cset.users[args.user_id]
    msg = SourceMessage(profile.user_id, args.message_id, profile.position, profile.k, args.category)
    res = answer_query(cset, store, msg, args.category, cfg.lbs_slack)
    print(f"{res.poi.poi_id},{res.candidate_count},{res.cloak_area!r}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.seed is None:
        raise InputError("bench requires --seed")
    cfg = resolve_config(args)
    spec = WorkloadSpec.quick(cfg.seed) if args.quick else WorkloadSpec(seed=cfg.seed)
    if args.replications:
        spec = WorkloadSpec(spec.user_counts, spec.k_modes, args.replications, seed=cfg.seed)

    def progress(i, total, ds):
        log.info("cell %d/%d: n=%d k=%s rep=%d", i, total, ds.n, ds.k_mode, ds.replication)

    result = run_experiment(spec, cfg.engine(), out_dir=cfg.out, verify=True, progress=progress)
    print(f"{len(result.datasets)} datasets -> {cfg.out}")
    print(f"{'k':>6} {'n':>5} {'clusters':>9} {'size':>6} {'R_k':>6} {'H':>6} {'R_s':>8} {'build_ms':>9}")
    for row in result.build_summary():
        print(
            f"{row['k_mode']!s:>6} {row['n']:>5} {row['mean_cluster_count']:>9.1f} {row['mean_size']:>6.2f} "
            f"{row['mean_r_k']:>6.2f} {row['mean_entropy']:>6.2f} {row['mean_rs']:>8.5f} {row['mean_build_s'] * 1e3:>9.2f}"
        )
    print(f"{'kind':>6} {'pct':>5} {'events':>7} {'adjusted':>9} {'adjust_us':>10}")
    for row in result.churn_summary():
        print(f"{row['kind']:>6} {row['pct']:>5.2f} {row['events']:>7} {row['clusters_adjusted']:>9} {row['mean_adjust_us']:>10.1f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seeding", choices=[m.value for m in SeedingMethod])
    common.add_argument("--seed", type=int)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--lbs-slack", dest="lbs_slack", type=float)
    common.add_argument("--out")
    common.add_argument("--config")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="clustercloak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="cluster a users file")
    p.add_argument("users")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("replay", parents=[common], help="replay an event trace")
    p.add_argument("users")
    p.add_argument("events")
    p.add_argument("--pois")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("query", parents=[common], help="answer one cloaked query")
    p.add_argument("users")
    p.add_argument("pois")
    p.add_argument("--user-id", dest="user_id", type=int, required=True)
    p.add_argument("--category", required=True)
    p.add_argument("--message-id", dest="message_id", type=int, default=0)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", parents=[common], help="run the experiment grid")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--replications", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnonymityUnsatisfiable as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NoResult as exc:
        print(f"no result: {exc}", file=sys.stderr)
        return EXIT_NO_RESULT
    except OracleViolation as exc:
        print(f"oracle violation: {exc}; repro bundle: {exc.bundle_dir}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
