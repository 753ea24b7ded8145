"""The two-phase comparison: learn on one workload, replay plans on another."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .apl import AplConfig, recommend_apl_from_profiles
from .canonical import TruncationPolicy
from .evaluate import Classification, classify, compare, dump_manifest, emit_report
from .mem import MemConfig, recommend_mem_from_profiles
from .profiler import build_callgraph, build_profiles
from .recommendations import Recommendation, RecommendationSet
from .replay import CacheConfig, CachingPlan, ReplayMetrics, metrics_csv, replay
from .synthetic import SyntheticApp, execute_synthetic, ground_truth_manifest, load_app
from .trace import dump_trace, trace_fingerprint
from .workload import NavigationSpec, WorkloadConfig, dump_request_log, generate_workload, load_navigation

__all__ = ["StudyResult", "derive_seeds", "run_study", "write_study", "bundled_shop", "PLAN_ORDER"]

log = logging.getLogger(__name__)

PLAN_ORDER = ("NOCACHE", "DEV", "APL", "MEM")


def derive_seeds(master: int) -> tuple[int, int]:
    """Distinct learning and testing seeds derived from the master seed."""
    a, b = np.random.SeedSequence(master).generate_state(2)
    return int(a), int(b)


def bundled_shop() -> tuple[NavigationSpec, SyntheticApp, CachingPlan]:
    """The demo shop shipped with the package: navigation, app model, developer plan."""
    data = resources.files("memorec") / "data"
    nav = load_navigation(data.joinpath("shop_nav.json").read_text(encoding="utf-8"))
    app = load_app(data.joinpath("shop_app.json").read_text(encoding="utf-8"))
    dev = CachingPlan.from_dict(json.loads(data.joinpath("shop_dev.json").read_text(encoding="utf-8")))
    return nav, app, dev


@dataclass
class StudyResult:
    learning: tuple
    testing: tuple
    learning_log: tuple
    testing_log: tuple
    manifest: dict[str, str]
    recommendations: dict[str, RecommendationSet]
    classifications: dict[str, Classification]
    plans: dict[str, CachingPlan]
    metrics: dict[str, ReplayMetrics] = field(default_factory=dict)


def run_study(
    nav: NavigationSpec,
    app: SyntheticApp,
    workload: WorkloadConfig,
    *,
    dev: CachingPlan | None = None,
    apl_config: AplConfig = AplConfig(),
    mem_config: MemConfig = MemConfig(),
    cache_config: CacheConfig = CacheConfig(),
    policy: TruncationPolicy | None = None,
    use_size_hints: bool = True,
) -> StudyResult:
    """Run both phases end to end.

    Phase 1 generates the learning workload, executes it, and asks both
    recommenders for advice.  Recommendations on impure methods are set
    aside, and the rest become APL and MEM plans.  Phase 2 replays
    NOCACHE, DEV, APL and MEM over a testing trace generated with the same
    navigation probabilities but a different seed.
    """
    learn_seed, test_seed = derive_seeds(workload.seed)
    dev = dev or CachingPlan({}, "DEV")
    dev = CachingPlan(dev.entries, "DEV", dev.ttl_ns)
    manifest = ground_truth_manifest(app)

    def phase(seed):
        cfg = WorkloadConfig(**{**asdict(workload), "seed": seed})
        events = generate_workload(nav, cfg, app.domains)
        return events, execute_synthetic(app, events, policy, seed)

    learning_log, learning = phase(learn_seed)
    log.info("learning trace: %d requests, %d calls", len(learning_log), len(learning))
    profiles = build_profiles(learning)
    recs = {
        "APL": recommend_apl_from_profiles(profiles, apl_config),
        "MEM": recommend_mem_from_profiles(profiles, build_callgraph(learning), mem_config),
    }

    testing_log, testing = phase(test_seed)
    log.info("testing trace: %d requests, %d calls", len(testing_log), len(testing))
    trace_id = trace_fingerprint(testing)

    plans = {"NOCACHE": CachingPlan({}, "NOCACHE"), "DEV": dev}
    for name, rs in recs.items():
        valid = classify(rs, dev, manifest).valid_methods
        plans[name] = CachingPlan.from_recommendations(rs.restrict(valid), use_size_hints=use_size_hints)
    metrics = {name: replay(testing, plans[name], cache_config, trace_id=trace_id) for name in PLAN_ORDER}
    classifications = {name: classify(recs[name], dev, manifest, metrics[name]) for name in recs}
    return StudyResult(
        learning, testing, learning_log, testing_log, manifest, recs, classifications, plans, metrics
    )


def write_study(result: StudyResult, out: Path, fmt: str = "csv", config: dict | None = None) -> list[Path]:
    """Write traces, request logs, recommendations, per-plan metrics and reports."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "learning_trace.jsonl": dump_trace(result.learning),
        "testing_trace.jsonl": dump_trace(result.testing),
        "learning_requests.jsonl": dump_request_log(result.learning_log),
        "testing_requests.jsonl": dump_request_log(result.testing_log),
        "manifest.json": dump_manifest(result.manifest),
        "recommendations_apl.json": result.recommendations["APL"].dumps(),
        "recommendations_mem.json": result.recommendations["MEM"].dumps(),
    }
    for name in PLAN_ORDER:
        files[f"metrics_{name.lower()}.csv"] = metrics_csv([result.metrics[name]])
        files[f"plan_{name.lower()}.json"] = result.plans[name].dumps()
    if config is not None:
        files["config.json"] = json.dumps(config, indent=2, sort_keys=True) + "\n"
    written = []
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
        written.append(out / name)
    recs = result.recommendations
    comparisons = [
        compare(recs["APL"], recs["MEM"]),
        compare(recs["APL"], _as_recs(result.plans["DEV"]), ("APL", "DEV")),
        compare(recs["MEM"], _as_recs(result.plans["DEV"]), ("MEM", "DEV")),
    ]
    written += emit_report(
        [result.classifications["APL"], result.classifications["MEM"]],
        comparisons,
        [result.metrics[n] for n in PLAN_ORDER],
        out / "report",
        fmt,
    )
    return written


def _as_recs(plan: CachingPlan) -> RecommendationSet:
    return RecommendationSet(
        "DEV", tuple(Recommendation(m, 0.0, plan.entries[m].whitelist) for m in plan.methods)
    )
