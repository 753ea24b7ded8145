"""Replay one trace under several caching plans and estimate throughput."""
from memorec.mem import recommend_mem
from memorec.replay import Admission, CacheConfig, CachingPlan, PlanEntry, replay, simulate_throughput
from memorec.study import bundled_shop
from memorec.synthetic import execute_synthetic
from memorec.trace import trace_fingerprint
from memorec.workload import WorkloadConfig, generate_workload

nav, app, dev = bundled_shop()


def trace(seed):
    log = generate_workload(nav, WorkloadConfig(seed=seed, users=5, requests=3000), app.domains)
    return execute_synthetic(app, log, seed=seed)


learning, testing = trace(1), trace(2)
tid = trace_fingerprint(testing)
mem = recommend_mem(learning)
# drop the writer that input/output invariance cannot tell apart from a pure method
mem = mem.restrict(m for m in mem.methods if "submit" not in m)

plans = [
    CachingPlan({}, "NOCACHE"),
    CachingPlan(dev.entries, "DEV", dev.ttl_ns),
    CachingPlan(CachingPlan.from_recommendations(mem).entries, "MEM"),
    # one entry per method thrashes whenever inputs alternate
    CachingPlan({m: PlanEntry(Admission.SINGLE_INSTANCE) for m in mem.methods}, "MEM-ONE"),
]

for cfg_name, cfg in (("default costs", CacheConfig()), ("free cache", CacheConfig.free()),
                      ("1 ms ttl", CacheConfig(default_ttl_ns=1_000_000))):
    rows = simulate_throughput([replay(testing, p, cfg, trace_id=tid) for p in plans])
    print(f"\n{cfg_name}")
    print(f"  {'plan':8} {'hits':>6} {'misses':>7} {'stale':>5} {'rel. throughput':>16}")
    for p, r in zip(plans, rows):
        stale = replay(testing, p, cfg, trace_id=tid).total.stale_hits
        print(f"  {r.plan:8} {r.hits:6d} {r.misses:7d} {stale:5d} {r.relative_throughput:+16.4f}")
