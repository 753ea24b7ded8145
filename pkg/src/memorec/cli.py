"""Command-line entry point: ``memorec <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .apl import AplConfig, recommend_apl
from .evaluate import classify, compare, emit_report, load_manifest, dump_manifest
from .mem import MemConfig, recommend_mem
from .profiler import build_profiles, profiles_to_json
from .recommendations import RecommendationSet
from .replay import CacheConfig, CachingPlan, metrics_csv, replay
from .study import PLAN_ORDER, bundled_shop, run_study, write_study
from .synthetic import execute_synthetic, ground_truth_manifest, load_app_file
from .trace import dump_trace, read_trace, trace_digest, trace_fingerprint
from .workload import WorkloadConfig, dump_request_log, generate_workload, load_navigation

log = logging.getLogger("memorec")


class UsageError(Exception):
    pass


def _workload_args(p):
    p.add_argument("--nav", type=Path, help="navigation spec (JSON); default: bundled shop")
    p.add_argument("--app", type=Path, help="synthetic app spec (JSON); default: bundled shop")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--users", type=int, default=1)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--requests", type=int)
    g.add_argument("--duration-ns", type=int)
    p.add_argument("--read-fraction", type=float, default=0.80)
    p.add_argument("--close-probability", type=float, default=0.05)
    p.add_argument("--think-time-ns", type=int, default=1_000_000)


def _apl_args(p):
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--changeability-ceiling", type=float, default=0.1)
    p.add_argument("--min-input-occurrences", type=int, default=2)


def _mem_args(p):
    p.add_argument("--min-mean-ns", type=float, default=5000)
    p.add_argument("--kernel", choices=("exhaustive", "iterative"), default="exhaustive")
    p.add_argument("--initial-depth", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=16, help="0 means unbounded")
    p.add_argument("--time-basis", choices=("total", "self"), default="total")


def _cache_args(p):
    p.add_argument("--ttl-ns", type=int, default=None, help="default TTL; omit for no expiry")
    p.add_argument("--hit-cost-ns", type=float, default=500)
    p.add_argument("--miss-cost-ns", type=float, default=1500)
    p.add_argument("--whitelist-check-ns", type=float, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memorec", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("trace-gen", help="generate a request log, trace and purity manifest")
    _workload_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("profile", help="summarize a trace, optionally dumping per-method profiles")
    p.add_argument("trace", type=Path)
    p.add_argument("--dump", type=Path)

    p = sub.add_parser("recommend-apl", help="cacheability-metric recommendations")
    p.add_argument("trace", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _apl_args(p)

    p = sub.add_parser("recommend-mem", help="input/output-invariance recommendations")
    p.add_argument("trace", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _mem_args(p)

    p = sub.add_parser("replay", help="replay a trace against a plan or recommendation file")
    p.add_argument("trace", type=Path)
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="metrics CSV")
    _cache_args(p)

    p = sub.add_parser("compare", help="overlap of two recommendation files")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)

    p = sub.add_parser("report", help="classify recommendations and write comparison tables")
    p.add_argument("--trace", type=Path, required=True, help="testing trace")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--apl", type=Path, required=True)
    p.add_argument("--mem", type=Path, required=True)
    p.add_argument("--dev", type=Path, help="developer plan file")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    _cache_args(p)

    p = sub.add_parser("study", help="run the full learn/test comparison")
    _workload_args(p)
    p.add_argument("--dev", type=Path, help="developer plan file; default: bundled shop plan with bundled app")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--no-size-hints", action="store_true", help="cache every MEM input, ignoring single-entry hints")
    _apl_args(p)
    _mem_args(p)
    _cache_args(p)
    return parser


def _apl_config(a) -> AplConfig:
    return AplConfig(a.k, a.changeability_ceiling, a.min_input_occurrences)


def _mem_config(a) -> MemConfig:
    return MemConfig(
        min_mean_time_ns=a.min_mean_ns,
        kernel=a.kernel,
        initial_depth=a.initial_depth,
        max_depth=a.max_depth or None,
        time_basis=a.time_basis,
    )


def _cache_config(a) -> CacheConfig:
    return CacheConfig(
        default_ttl_ns=a.ttl_ns,
        hit_cost_ns=a.hit_cost_ns,
        miss_cost_ns=a.miss_cost_ns,
        whitelist_check_ns=a.whitelist_check_ns,
    )


def _workload(a):
    if (a.nav is None) != (a.app is None):
        raise UsageError("--nav and --app must be given together")
    if a.nav is None:
        nav, app, dev = bundled_shop()
    else:
        nav = load_navigation(a.nav.read_text(encoding="utf-8"))
        app = load_app_file(a.app)
        dev = None
    if a.requests is None and a.duration_ns is None:
        a.requests = 500
    requests = a.requests
    cfg = WorkloadConfig(
        seed=a.seed,
        users=a.users,
        requests=requests,
        duration_ns=a.duration_ns,
        read_fraction=a.read_fraction,
        close_probability=a.close_probability,
        think_time_ns=a.think_time_ns,
    )
    return nav, app, dev, cfg


def _effective(a, drop=()) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(a).items()) if k not in drop}


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_trace_gen(a):
    nav, app, _, cfg = _workload(a)
    events = generate_workload(nav, cfg, app.domains)
    records = execute_synthetic(app, events, seed=cfg.seed)
    _write(a.out / "requests.jsonl", dump_request_log(events))
    _write(a.out / "trace.jsonl", dump_trace(records))
    _write(a.out / "manifest.json", dump_manifest(ground_truth_manifest(app)))
    print(f"{len(events)} requests, {len(records)} calls -> {a.out}")


def cmd_profile(a):
    trace = read_trace(a.trace)
    d = trace_digest(trace.records)
    span = "-" if d.span is None else f"{d.span[0]}..{d.span[1]}"
    print(f"records={d.records} methods={d.methods} sessions={d.sessions} span={span}")
    if a.dump:
        _write(a.dump, profiles_to_json(build_profiles(trace.records)))


def cmd_recommend_apl(a):
    recs = recommend_apl(read_trace(a.trace).records, _apl_config(a))
    _write(a.out, recs.dumps())
    print(f"{len(recs)} APL recommendations -> {a.out}")


def cmd_recommend_mem(a):
    recs = recommend_mem(read_trace(a.trace).records, _mem_config(a))
    _write(a.out, recs.dumps())
    print(f"{len(recs)} MEM recommendations -> {a.out}")


def cmd_replay(a):
    records = read_trace(a.trace).records
    plan = CachingPlan.load(a.plan)
    present = {r.method for r in records}
    for m in plan.methods:
        if m not in present:
            log.warning("planned method %s never appears in the trace", m)
    metrics = replay(records, plan, _cache_config(a))
    _write(a.out, metrics_csv([metrics]))
    t = metrics.total
    print(f"{plan.name}: hits={t.hits} misses={t.misses} relative_throughput={metrics.relative_throughput:.4f}")


def cmd_compare(a):
    o = compare(RecommendationSet.load(a.a), RecommendationSet.load(a.b))
    print(json.dumps({"a": o.a, "b": o.b, "shared": o.shared, "only_a": o.only_a, "only_b": o.only_b}, indent=2))


def cmd_report(a):
    records = read_trace(a.trace).records
    trace_id = trace_fingerprint(records)
    manifest = load_manifest(a.manifest)
    dev = CachingPlan.load(a.dev) if a.dev else CachingPlan({}, "DEV")
    dev = CachingPlan(dev.entries, "DEV", dev.ttl_ns)
    cache = _cache_config(a)
    recs = {"APL": RecommendationSet.load(a.apl), "MEM": RecommendationSet.load(a.mem)}
    plans = {"NOCACHE": CachingPlan({}, "NOCACHE"), "DEV": dev}
    for name, rs in recs.items():
        valid = classify(rs, dev, manifest).valid_methods
        plans[name] = CachingPlan(CachingPlan.from_recommendations(rs.restrict(valid)).entries, name)
    metrics = {n: replay(records, plans[n], cache, trace_id=trace_id) for n in PLAN_ORDER}
    classes = [classify(recs[n], dev, manifest, metrics[n]) for n in ("APL", "MEM")]
    emit_report(classes, [compare(recs["APL"], recs["MEM"])], [metrics[n] for n in PLAN_ORDER], a.out, a.format)
    print(f"report -> {a.out}")


def cmd_study(a):
    nav, app, dev, cfg = _workload(a)
    if a.dev is not None:
        dev = CachingPlan.load(a.dev)
    result = run_study(
        nav,
        app,
        cfg,
        dev=dev,
        apl_config=_apl_config(a),
        mem_config=_mem_config(a),
        cache_config=_cache_config(a),
        use_size_hints=not a.no_size_hints,
    )
    write_study(result, a.out, a.format, config=_effective(a, drop=("out", "verbose")))
    for name in ("APL", "MEM"):
        c = result.classifications[name]
        rate = "n/a" if c.usefulness_rate is None else f"{c.usefulness_rate:.2f}"
        print(f"{name}: {len(c.rows)} recommendations, {c.count('invalid')} invalid, usefulness {rate}")
    for name in PLAN_ORDER:
        print(f"{name}: relative throughput {result.metrics[name].relative_throughput:+.4f}")


COMMANDS = {
    "trace-gen": cmd_trace_gen,
    "profile": cmd_profile,
    "recommend-apl": cmd_recommend_apl,
    "recommend-mem": cmd_recommend_mem,
    "replay": cmd_replay,
    "compare": cmd_compare,
    "report": cmd_report,
    "study": cmd_study,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(a.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    print("config: " + json.dumps(_effective(a), sort_keys=True), file=sys.stderr)
    try:
        COMMANDS[a.command](a)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"memorec: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"memorec: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
