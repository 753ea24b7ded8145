"""Deterministic cache replay of a trace under a caching plan.

The cache is unbounded; entries leave only when their TTL expires.  A hit
skips the call's whole subtree, so nested records of a hit are neither
hits nor misses.  Time is modeled, not measured: a plan saves the total
time of every hit call and pays a fixed cost per cache operation.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .canonical import CanonicalValue, parse_canonical
from .recommendations import RecommendationSet
from .trace import CallRecord, trace_fingerprint

__all__ = [
    "Admission",
    "PlanEntry",
    "CachingPlan",
    "CacheConfig",
    "MethodMetrics",
    "ReplayMetrics",
    "ReplayOrderError",
    "TraceMismatchError",
    "ThroughputRow",
    "replay",
    "brute_force_oracle",
    "simulate_throughput",
    "metrics_csv",
    "METRICS_COLUMNS",
]


class Admission(str, Enum):
    ALL_INPUTS = "ALL_INPUTS"
    INPUT_WHITELIST = "INPUT_WHITELIST"
    SINGLE_INSTANCE = "SINGLE_INSTANCE"
    NONE = "NONE"


@dataclass(frozen=True)
class PlanEntry:
    admission: Admission = Admission.ALL_INPUTS
    whitelist: frozenset[tuple[CanonicalValue, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "admission", Admission(self.admission))
        if self.admission is Admission.INPUT_WHITELIST and not self.whitelist:
            raise ValueError("INPUT_WHITELIST needs a non-empty whitelist")


_NONE_ENTRY = PlanEntry(Admission.NONE)


@dataclass(frozen=True)
class CachingPlan:
    """What to cache.  Methods absent from ``entries`` are not cached.

    ``ttl_ns`` holds per-method TTLs that override the replay config; a
    developer plan file supplies them.
    """

    entries: Mapping[str, PlanEntry] = field(default_factory=dict)
    name: str = "NOCACHE"
    ttl_ns: Mapping[str, int | None] = field(default_factory=dict)

    def entry(self, method: str) -> PlanEntry:
        return self.entries.get(method, _NONE_ENTRY)

    @property
    def methods(self) -> list[str]:
        return [m for m, e in self.entries.items() if e.admission is not Admission.NONE]

    @classmethod
    def from_recommendations(cls, recs: RecommendationSet, *, use_size_hints: bool = True) -> "CachingPlan":
        """APL entries cache their whitelist; MEM entries follow the size hint."""
        entries = {}
        for r in recs:
            if r.whitelist is not None:
                entries[r.method] = PlanEntry(Admission.INPUT_WHITELIST, r.whitelist)
            elif use_size_hints and r.hint is not None and r.hint.size == "single" and not r.hint.getter:
                entries[r.method] = PlanEntry(Admission.SINGLE_INSTANCE)
            else:
                entries[r.method] = PlanEntry(Admission.ALL_INPUTS)
        return cls(entries, recs.source)

    def to_dict(self) -> dict:
        methods = []
        for m, e in self.entries.items():
            item = {"method": m, "admission": e.admission.value}
            if e.whitelist is not None:
                item["whitelist"] = sorted([v.render() for v in k] for k in e.whitelist)
            if m in self.ttl_ns:
                item["ttl_ns"] = self.ttl_ns[m]
            methods.append(item)
        return {"source": self.name, "methods": methods}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CachingPlan":
        entries, ttls = {}, {}
        for item in doc.get("methods", []):
            wl = item.get("whitelist")
            entries[item["method"]] = PlanEntry(
                Admission(item.get("admission", "ALL_INPUTS")),
                None if wl is None else frozenset(tuple(parse_canonical(x) for x in k) for k in wl),
            )
            if "ttl_ns" in item:
                ttls[item["method"]] = item["ttl_ns"]
        return cls(entries, doc.get("source", "DEV"), ttls)

    @classmethod
    def load(cls, path) -> "CachingPlan":
        """Load a plan file, or derive a plan from a recommendation file."""
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if "recommendations" in doc:
            return cls.from_recommendations(RecommendationSet.from_dict(doc))
        return cls.from_dict(doc)


@dataclass(frozen=True)
class CacheConfig:
    default_ttl_ns: int | None = None
    ttl_ns: Mapping[str, int | None] = field(default_factory=dict)
    hit_cost_ns: float = 500.0
    miss_cost_ns: float = 1500.0
    whitelist_check_ns: float = 200.0

    def __post_init__(self):
        if min(self.hit_cost_ns, self.miss_cost_ns, self.whitelist_check_ns) < 0:
            raise ValueError("costs must be >= 0")

    def ttl_for(self, method: str, plan: CachingPlan | None = None) -> int | None:
        if plan is not None and method in plan.ttl_ns:
            return plan.ttl_ns[method]
        return self.ttl_ns.get(method, self.default_ttl_ns)

    @classmethod
    def free(cls, **kw) -> "CacheConfig":
        """A cost model where cache operations take no time."""
        return cls(hit_cost_ns=0, miss_cost_ns=0, whitelist_check_ns=0, **kw)


@dataclass
class MethodMetrics:
    hits: int = 0
    misses: int = 0
    additions: int = 0
    discards: int = 0
    stale_hits: int = 0
    saved_ns: int = 0
    overhead_ns: float = 0.0

    def counts(self) -> tuple[int, int, int, int]:
        return (self.hits, self.misses, self.additions, self.discards)


@dataclass
class ReplayMetrics:
    plan: str
    trace_id: str
    baseline_ns: int
    methods: dict[str, MethodMetrics]

    @property
    def total(self) -> MethodMetrics:
        t = MethodMetrics()
        for m in self.methods.values():
            t.hits += m.hits
            t.misses += m.misses
            t.additions += m.additions
            t.discards += m.discards
            t.stale_hits += m.stale_hits
            t.saved_ns += m.saved_ns
            t.overhead_ns += m.overhead_ns
        return t

    @property
    def simulated_ns(self) -> float:
        t = self.total
        return self.baseline_ns - t.saved_ns + t.overhead_ns

    def _relative(self, saved, overhead) -> float:
        if self.baseline_ns == 0:
            return 0.0
        cached = self.baseline_ns - saved + overhead
        return self.baseline_ns / cached - 1.0 if cached > 0 else math.inf

    @property
    def relative_throughput(self) -> float:
        t = self.total
        return self._relative(t.saved_ns, t.overhead_ns)

    def method_relative_throughput(self, method: str) -> float:
        m = self.methods[method]
        return self._relative(m.saved_ns, m.overhead_ns)


class ReplayOrderError(ValueError):
    pass


class TraceMismatchError(ValueError):
    pass


def _baseline(records: Iterable[CallRecord]) -> int:
    return sum(r.duration for r in records if r.depth == 0)


def replay(
    records: Sequence[CallRecord],
    plan: CachingPlan,
    config: CacheConfig = CacheConfig(),
    *,
    trace_id: str | None = None,
) -> ReplayMetrics:
    """Replay ``records`` (sorted by start time) against ``plan``.

    Entries are stamped with the start time of the call that stored them and
    hit while younger than the TTL.  A hit whose cached output differs from
    the output the trace recorded for that call counts as a stale hit.
    """
    stats = {m: MethodMetrics() for m in plan.entries}
    store: dict[tuple, tuple[int, CanonicalValue]] = {}
    single: dict[str, tuple[tuple, int, CanonicalValue]] = {}
    suppressed_below: dict[str, int] = {}
    last = None
    for r in records:
        if last is not None and r.start < last:
            raise ReplayOrderError(f"{r.method} starts at {r.start}, before {last}")
        last = r.start
        depth = suppressed_below.get(r.session)
        if depth is not None:
            if r.depth > depth:
                continue
            del suppressed_below[r.session]
        entry = plan.entry(r.method)
        kind = entry.admission
        if kind is Admission.NONE:
            if r.method in stats:
                stats[r.method].misses += 1
            continue
        s = stats[r.method]
        ttl = config.ttl_for(r.method, plan)
        key = r.inputs
        if kind is Admission.SINGLE_INSTANCE:
            held = single.get(r.method)
            cached = held[1:] if held is not None and held[0] == key else None
        else:
            cached = store.get((r.method, key))
        if cached is not None and (ttl is None or r.start - cached[0] < ttl):
            s.hits += 1
            s.saved_ns += r.duration
            s.overhead_ns += config.hit_cost_ns
            if cached[1] != r.output:
                s.stale_hits += 1
            suppressed_below[r.session] = r.depth
            continue
        s.misses += 1
        if kind is Admission.INPUT_WHITELIST:
            s.overhead_ns += config.whitelist_check_ns
            if key not in entry.whitelist:
                s.discards += 1
                s.overhead_ns += config.hit_cost_ns
                continue
        s.additions += 1
        s.overhead_ns += config.miss_cost_ns
        if kind is Admission.SINGLE_INSTANCE:
            single[r.method] = (key, r.start, r.output)
        else:
            store[(r.method, key)] = (r.start, r.output)
    return ReplayMetrics(
        plan=plan.name,
        trace_id=trace_id if trace_id is not None else trace_fingerprint(records),
        baseline_ns=_baseline(records),
        methods=stats,
    )


def brute_force_oracle(
    records: Sequence[CallRecord], plan: CachingPlan, config: CacheConfig = CacheConfig()
) -> ReplayMetrics:
    """Naive reference for :func:`replay`: rescans the full history per call."""
    records = list(records)
    for i in range(len(records)):
        for j in range(i):
            if records[j].start > records[i].start:
                raise ReplayOrderError(f"record {i} starts before record {j}")
    hits_seen: list[CallRecord] = []
    stored: list[tuple[str, tuple[str, ...], str, int]] = []  # method, inputs, output, time
    out: dict[str, MethodMetrics] = {}
    for m, e in plan.entries.items():
        out[m] = MethodMetrics()
    for r in records:
        inside_hit = False
        for h in hits_seen:
            if h.session == r.session and h.depth < r.depth and h.start <= r.start and r.end <= h.end:
                inside_hit = True
        if inside_hit:
            continue
        if r.method not in plan.entries:
            continue
        e = plan.entries[r.method]
        m = out[r.method]
        if e.admission.value == "NONE":
            m.misses += 1
            continue
        inputs = tuple(v.render() for v in r.inputs)
        if r.method in plan.ttl_ns:
            ttl = plan.ttl_ns[r.method]
        elif r.method in config.ttl_ns:
            ttl = config.ttl_ns[r.method]
        else:
            ttl = config.default_ttl_ns
        latest = None
        for s in stored:
            if s[0] != r.method:
                continue
            if e.admission.value == "SINGLE_INSTANCE":
                latest = s
            elif s[1] == inputs:
                latest = s
        fresh = latest is not None and latest[1] == inputs
        if fresh and ttl is not None:
            fresh = r.start - latest[3] < ttl
        if fresh:
            m.hits += 1
            m.saved_ns += r.end - r.start
            m.overhead_ns += config.hit_cost_ns
            if latest[2] != r.output.render():
                m.stale_hits += 1
            hits_seen.append(r)
            continue
        m.misses += 1
        admit = True
        if e.admission.value == "INPUT_WHITELIST":
            allowed = [tuple(v.render() for v in k) for k in e.whitelist]
            admit = inputs in allowed
            m.overhead_ns += config.whitelist_check_ns
        if admit:
            m.additions += 1
            m.overhead_ns += config.miss_cost_ns
            stored.append((r.method, inputs, r.output.render(), r.start))
        else:
            m.discards += 1
            m.overhead_ns += config.hit_cost_ns
    baseline = 0
    for r in records:
        if r.depth == 0:
            baseline += r.end - r.start
    return ReplayMetrics(plan.name, trace_fingerprint(records), baseline, out)


@dataclass(frozen=True)
class ThroughputRow:
    plan: str
    baseline_ns: int
    simulated_ns: float
    hits: int
    misses: int
    additions: int
    discards: int
    relative_throughput: float


def simulate_throughput(metrics: Mapping[str, ReplayMetrics] | Iterable[ReplayMetrics]) -> list[ThroughputRow]:
    """Relative throughput of each plan against the uncached baseline."""
    items = list(metrics.values()) if isinstance(metrics, Mapping) else list(metrics)
    ids = {(m.trace_id, m.baseline_ns) for m in items}
    if len(ids) > 1:
        raise TraceMismatchError(f"metrics come from different traces: {sorted(ids)}")
    rows = []
    for m in items:
        t = m.total
        rows.append(
            ThroughputRow(
                m.plan, m.baseline_ns, m.simulated_ns, t.hits, t.misses, t.additions, t.discards,
                m.relative_throughput,
            )
        )
    return rows


METRICS_COLUMNS = ("plan", "method", "hits", "misses", "additions", "discards", "saved_ns", "relative_throughput")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def metrics_csv(metrics: Iterable[ReplayMetrics]) -> str:
    """Per-method rows plus a ``*`` aggregate row for each plan."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for rm in metrics:
        for method in sorted(rm.methods):
            m = rm.methods[method]
            w.writerow([rm.plan, method, *m.counts(), m.saved_ns, _fmt(rm.method_relative_throughput(method))])
        t = rm.total
        w.writerow([rm.plan, "*", *t.counts(), t.saved_ns, _fmt(rm.relative_throughput)])
    return buf.getvalue()
