"""Per-method aggregation of call records and a dynamic call graph."""
from __future__ import annotations

import json
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .canonical import CanonicalValue
from .trace import CallRecord, nest_calls

__all__ = [
    "Occurrence",
    "MethodProfile",
    "CallGraph",
    "build_profiles",
    "build_callgraph",
    "profiles_to_json",
]

InputKey = tuple[CanonicalValue, ...]


@dataclass(frozen=True)
class Occurrence:
    output: CanonicalValue
    start: int
    session: str
    total: int
    self_time: int


@dataclass(frozen=True)
class MethodProfile:
    method: str
    count: int
    total_times: tuple[int, ...]
    self_times: tuple[int, ...]
    mean_total: float
    std_total: float
    groups: Mapping[InputKey, tuple[Occurrence, ...]]
    sessions: frozenset[str]

    @property
    def mean_self(self) -> float:
        return statistics.mean(self.self_times) if self.self_times else 0.0

    @property
    def arity(self) -> int | None:
        """Number of inputs when every call agrees, else ``None``."""
        sizes = {len(k) for k in self.groups}
        return sizes.pop() if len(sizes) == 1 else None

    def group_counts(self) -> dict[InputKey, int]:
        return {k: len(v) for k, v in self.groups.items()}

    def calls(self) -> list[tuple[int, InputKey, Occurrence]]:
        """All calls as (start, inputs, occurrence), in time order."""
        out = [(o.start, k, o) for k, occ in self.groups.items() for o in occ]
        out.sort(key=lambda t: (t[0], [v.render() for v in t[1]]))
        return out


def _sort_key(r: CallRecord):
    return (
        r.start,
        r.session,
        r.depth,
        r.method,
        r.end,
        r.input_key,
        r.output.render(),
    )


def _self_times(records: Sequence[CallRecord]) -> list[int]:
    parents = nest_calls(records)
    child_time = [0] * len(records)
    for i, p in enumerate(parents):
        if p is not None:
            child_time[p] += records[i].duration
    return [r.duration - c for r, c in zip(records, child_time)]


def build_profiles(records: Iterable[CallRecord]) -> dict[str, MethodProfile]:
    """Aggregate records per method.

    Raises :class:`~memorec.trace.NestingError` if the intervals do not nest.
    The result does not depend on the order of ``records``.
    """
    recs = sorted(records, key=_sort_key)
    self_times = _self_times(recs)
    per_method: dict[str, list[int]] = defaultdict(list)
    for i, r in enumerate(recs):
        per_method[r.method].append(i)

    profiles = {}
    for method in sorted(per_method):
        idxs = per_method[method]
        groups: dict[InputKey, list[Occurrence]] = {}
        for i in idxs:
            r = recs[i]
            groups.setdefault(r.inputs, []).append(
                Occurrence(r.output, r.start, r.session, r.duration, self_times[i])
            )
        totals = tuple(recs[i].duration for i in idxs)
        profiles[method] = MethodProfile(
            method=method,
            count=len(idxs),
            total_times=totals,
            self_times=tuple(self_times[i] for i in idxs),
            mean_total=float(statistics.mean(totals)),
            std_total=float(statistics.pstdev(totals)),
            groups={k: tuple(v) for k, v in groups.items()},
            sessions=frozenset(recs[i].session for i in idxs),
        )
    return profiles


@dataclass(frozen=True)
class CallGraph:
    nodes: frozenset[str]
    edges: Mapping[tuple[str, str], int]

    def callers(self, method: str) -> dict[str, int]:
        return {p: n for (p, c), n in self.edges.items() if c == method}

    def callees(self, method: str) -> dict[str, int]:
        return {c: n for (p, c), n in self.edges.items() if p == method}


def build_callgraph(records: Iterable[CallRecord]) -> CallGraph:
    """Edges count how often a callee ran directly nested in a caller."""
    recs = sorted(records, key=_sort_key)
    parents = nest_calls(recs)
    edges: Counter[tuple[str, str]] = Counter()
    for i, p in enumerate(parents):
        if p is not None:
            edges[(recs[p].method, recs[i].method)] += 1
    return CallGraph(frozenset(r.method for r in recs), dict(sorted(edges.items())))


def profiles_to_json(profiles: Mapping[str, MethodProfile]) -> str:
    """Debug dump, one JSON object per line."""
    lines = []
    for m, p in profiles.items():
        lines.append(
            json.dumps(
                {
                    "method": m,
                    "count": p.count,
                    "mean_total_ns": p.mean_total,
                    "std_total_ns": p.std_total,
                    "mean_self_ns": p.mean_self,
                    "sessions": len(p.sessions),
                    "groups": [
                        {
                            "inputs": [v.render() for v in k],
                            "outputs": [o.output.render() for o in occ],
                        }
                        for k, occ in p.groups.items()
                    ],
                },
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
