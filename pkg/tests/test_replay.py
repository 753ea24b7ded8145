import json

import numpy as np
import pytest

from _support import calls, pure_program_trace, random_plan, random_trace, rec
from memorec.canonical import canonicalize
from memorec.recommendations import CacheImplHint, Recommendation, RecommendationSet
from memorec.replay import (
    METRICS_COLUMNS,
    Admission,
    CacheConfig,
    CachingPlan,
    PlanEntry,
    ReplayOrderError,
    TraceMismatchError,
    brute_force_oracle,
    metrics_csv,
    replay,
    simulate_throughput,
)


def plan(kind, whitelist=None, method="m", **kw):
    wl = None if whitelist is None else frozenset((canonicalize(x),) for x in whitelist)
    return CachingPlan({method: PlanEntry(kind, wl)}, "P", **kw)


def counts(metrics, method="m"):
    m = metrics.methods[method]
    return {"hits": m.hits, "misses": m.misses, "additions": m.additions, "discards": m.discards}


def both(records, p, cfg=CacheConfig()):
    a, b = replay(records, p, cfg), brute_force_oracle(records, p, cfg)
    assert {k: v.counts() for k, v in a.methods.items()} == {k: v.counts() for k, v in b.methods.items()}
    return a


def test_repeat_under_all_inputs():
    assert counts(both(calls("m", [1, 1]), plan(Admission.ALL_INPUTS))) == dict(hits=1, misses=1, additions=1, discards=0)


def test_single_instance_thrashes():
    m = both(calls("m", ["a", "b", "a", "b"]), plan(Admission.SINGLE_INSTANCE))
    assert counts(m) == dict(hits=0, misses=4, additions=4, discards=0)


def test_single_instance_hits_on_repeat():
    m = both(calls("m", ["a", "a", "b", "b", "a"]), plan(Admission.SINGLE_INSTANCE))
    assert counts(m) == dict(hits=2, misses=3, additions=3, discards=0)


def test_whitelist():
    m = both(calls("m", ["a", "b", "a", "b", "a"]), plan(Admission.INPUT_WHITELIST, ["a"]))
    assert counts(m) == dict(hits=2, misses=3, additions=1, discards=2)


def test_expiry():
    ttl = 100
    records = [rec("m", [1], 1, 0, 5), rec("m", [1], 1, 2 * ttl, 2 * ttl + 5)]
    m = both(records, plan(Admission.ALL_INPUTS), CacheConfig(default_ttl_ns=ttl))
    assert counts(m) == dict(hits=0, misses=2, additions=2, discards=0)


def test_ttl_boundary_is_exclusive():
    records = [rec("m", [1], 1, 0, 5), rec("m", [1], 1, 99, 104), rec("m", [1], 1, 200, 205)]
    m = both(records, plan(Admission.ALL_INPUTS), CacheConfig(default_ttl_ns=100))
    # age 99 hits; at 200 the entry stored at 0 is 200 old, so it is replaced
    assert counts(m) == dict(hits=1, misses=2, additions=2, discards=0)


def test_plan_ttl_overrides_config():
    records = calls("m", [1, 1], step=50)
    assert replay(records, plan(Admission.ALL_INPUTS, ttl_ns={"m": 10})).methods["m"].hits == 0
    assert replay(records, plan(Admission.ALL_INPUTS), CacheConfig(ttl_ns={"m": 10})).methods["m"].hits == 0
    assert replay(records, plan(Admission.ALL_INPUTS), CacheConfig(default_ttl_ns=10, ttl_ns={"m": None})).methods["m"].hits == 1


def test_empty_trace():
    m = both([], plan(Admission.ALL_INPUTS))
    assert counts(m) == dict(hits=0, misses=0, additions=0, discards=0)
    assert m.baseline_ns == 0 and m.relative_throughput == 0


def test_unordered_records_rejected():
    records = [rec("m", [1], 1, 10, 15), rec("m", [1], 1, 0, 5)]
    with pytest.raises(ReplayOrderError):
        replay(records, plan(Admission.ALL_INPUTS))
    with pytest.raises(ReplayOrderError):
        brute_force_oracle(records, plan(Admission.ALL_INPUTS))


def _nested(t, x):
    return [rec("p", [x], x, t, t + 100, 0), rec("c", [x], x, t + 10, t + 90, 1), rec("d", [], 0, t + 20, t + 30, 2)]


def test_hit_suppresses_subtree():
    records = _nested(0, 1) + _nested(1000, 1)
    p = CachingPlan({"p": PlanEntry(), "c": PlanEntry(), "d": PlanEntry()}, "P")
    m = both(records, p)
    assert counts(m, "p") == dict(hits=1, misses=1, additions=1, discards=0)
    # c and d ran only inside the first, missed p
    assert counts(m, "c")["misses"] == 1 and counts(m, "c")["hits"] == 0
    assert m.methods["p"].saved_ns == 100


def test_nested_hit_saves_its_subtree_only():
    records = _nested(0, 1) + _nested(1000, 2)
    p = CachingPlan({"c": PlanEntry(), "d": PlanEntry()}, "P")
    m = both(records, p, CacheConfig.free())
    assert m.methods["d"].hits == 1 and m.methods["c"].hits == 0
    assert m.simulated_ns == 200 - 10


def test_suppression_is_per_session():
    records = [
        rec("p", [1], 1, 0, 100, 0, "a"),
        rec("p", [1], 1, 200, 300, 0, "a"),
        rec("q", [], 0, 210, 290, 0, "b"),
        rec("c", [], 0, 220, 230, 1, "b"),
    ]
    # the hit on p in session a must not hide c, which runs in session b
    m = both(records, CachingPlan({"p": PlanEntry(), "c": PlanEntry()}, "P"))
    assert m.methods["c"].misses == 1


def test_none_entries_count_misses_only():
    m = both(calls("m", [1, 1, 1]), plan(Admission.NONE))
    assert counts(m) == dict(hits=0, misses=3, additions=0, discards=0)


def test_cost_model():
    cfg = CacheConfig(hit_cost_ns=5, miss_cost_ns=7, whitelist_check_ns=3)
    m = replay(calls("m", ["a", "a", "b"], cost=100, step=200), plan(Admission.INPUT_WHITELIST, ["a"]), cfg)
    # a: miss+add (3+7), a: hit (5), b: discard (3+5)
    assert m.methods["m"].overhead_ns == 3 + 7 + 5 + 3 + 5
    assert m.baseline_ns == 300
    assert m.simulated_ns == 300 - 100 + 23


def test_stale_hits_counted_against_trace():
    records = [rec("m", [1], "x", 0, 5), rec("m", [1], "y", 10, 15), rec("m", [1], "y", 20, 25)]
    a = replay(records, plan(Admission.ALL_INPUTS))
    assert a.methods["m"].stale_hits == 2
    assert brute_force_oracle(records, plan(Admission.ALL_INPUTS)).methods["m"].stale_hits == 2


def test_throughput_arithmetic():
    records = [rec("m", [1], 1, 0, 100), rec("m", [2], 2, 100, 180), rec("m", [1], 1, 180, 200)]
    # baseline 200; the hit saves 20 ns, 10% of it
    m = replay(records, plan(Admission.ALL_INPUTS), CacheConfig.free())
    assert m.relative_throughput == pytest.approx(1 / 0.9 - 1)
    none = replay(records, CachingPlan({}, "NOCACHE"))
    assert none.relative_throughput == 0 and none.simulated_ns == none.baseline_ns
    costly = replay(records, plan(Admission.ALL_INPUTS), CacheConfig(miss_cost_ns=100))
    assert costly.relative_throughput < 0


def test_simulate_throughput_rejects_mixed_traces():
    a = replay(calls("m", [1, 1]), plan(Admission.ALL_INPUTS))
    b = replay(calls("m", [1, 2]), plan(Admission.ALL_INPUTS))
    rows = simulate_throughput({"A": a, "B": replay(calls("m", [1, 1]), CachingPlan())})
    assert [r.plan for r in rows] == ["P", "NOCACHE"] and rows[1].relative_throughput == 0
    with pytest.raises(TraceMismatchError):
        simulate_throughput([a, b])


def test_absent_method_reports_zero_counts():
    m = replay(calls("m", [1, 1]), CachingPlan({"ghost": PlanEntry()}, "P"))
    assert m.methods["ghost"].counts() == (0, 0, 0, 0)
    assert "P,ghost,0,0,0,0,0,0.000000" in metrics_csv([m])


def test_metrics_csv_shape():
    m = replay(calls("m", [1, 1], cost=10, step=20), plan(Admission.ALL_INPUTS), CacheConfig.free())
    lines = metrics_csv([m]).splitlines()
    assert lines[0] == ",".join(METRICS_COLUMNS)
    assert lines[1] == "P,m,1,1,1,0,10,1.000000"
    assert lines[2] == "P,*,1,1,1,0,10,1.000000"


def test_hits_plus_misses_count_unsuppressed_calls():
    rng = np.random.default_rng(21)
    for _ in range(100):
        records = pure_program_trace(rng)
        m = replay(records, random_plan(rng, records))
        for name, s in m.methods.items():
            assert s.hits + s.misses <= sum(r.method == name for r in records)
        # without nesting nothing is suppressed
        flat = random_trace(rng, max_nesting=0)
        m = replay(flat, random_plan(rng, flat))
        for name, s in m.methods.items():
            assert s.hits + s.misses == sum(r.method == name for r in flat)


def test_throughput_nondecreasing_in_planned_pure_methods():
    rng = np.random.default_rng(22)
    free = CacheConfig.free()
    for _ in range(100):
        records = pure_program_trace(rng)
        methods = sorted({r.method for r in records})
        prev = 0.0
        for i in range(1, len(methods) + 1):
            rt = replay(records, CachingPlan({m: PlanEntry() for m in methods[:i]}, "P"), free).relative_throughput
            assert rt >= prev - 1e-12
            prev = rt


def test_plan_from_recommendations_and_files(tmp_path):
    wl = frozenset({(canonicalize("a"),)})
    recs = RecommendationSet(
        "MEM",
        (
            Recommendation("w", 3.0, whitelist=wl),
            Recommendation("s", 2.0, hint=CacheImplHint(size="single")),
            Recommendation("g", 1.0, hint=CacheImplHint(size="single", getter=True)),
            Recommendation("m", 1.0, hint=CacheImplHint(size="multi")),
        ),
    )
    p = CachingPlan.from_recommendations(recs)
    kinds = {k: e.admission for k, e in p.entries.items()}
    assert kinds == {
        "w": Admission.INPUT_WHITELIST,
        "s": Admission.SINGLE_INSTANCE,
        "g": Admission.ALL_INPUTS,
        "m": Admission.ALL_INPUTS,
    }
    assert CachingPlan.from_recommendations(recs, use_size_hints=False).entries["s"].admission is Admission.ALL_INPUTS
    recs.save(tmp_path / "r.json")
    assert CachingPlan.load(tmp_path / "r.json") == p
    dev = CachingPlan({"x": PlanEntry()}, "DEV", {"x": 1000})
    (tmp_path / "dev.json").write_text(dev.dumps())
    assert CachingPlan.load(tmp_path / "dev.json") == dev
    assert json.loads(p.dumps())["methods"][0] == {"method": "w", "admission": "INPUT_WHITELIST", "whitelist": [["a"]]}


def test_whitelist_plan_requires_entries():
    with pytest.raises(ValueError):
        PlanEntry(Admission.INPUT_WHITELIST, frozenset())
    with pytest.raises(ValueError):
        CacheConfig(hit_cost_ns=-1)
