"""Navigation graphs and deterministic multi-user request generation."""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "NavigationSpec",
    "NavigationError",
    "DanglingReferenceError",
    "CyclicPrerequisiteError",
    "EmptyEntriesError",
    "WorkloadError",
    "WorkloadConfig",
    "ParamDomain",
    "RequestEvent",
    "load_navigation",
    "generate_workload",
    "prerequisite_violations",
    "dump_request_log",
    "load_request_log",
]


class NavigationError(ValueError):
    pass


class DanglingReferenceError(NavigationError):
    pass


class CyclicPrerequisiteError(NavigationError):
    pass


class EmptyEntriesError(NavigationError):
    pass


class WorkloadError(RuntimeError):
    pass


@dataclass(frozen=True)
class NavigationSpec:
    """Requests (vertices), allowed successors and required predecessors."""

    kinds: Mapping[str, str]
    next: frozenset[tuple[str, str]]
    requires: frozenset[tuple[str, str]]
    entries: tuple[str, ...]

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(self.kinds)

    @cached_property
    def _successors(self) -> dict[str, list[str]]:
        return {v: [u for u in self.kinds if (v, u) in self.next] for v in self.kinds}

    @cached_property
    def _prerequisites(self) -> dict[str, frozenset[str]]:
        return {u: frozenset(v for v, w in self.requires if w == u) for u in self.kinds}

    def successors(self, v: str) -> list[str]:
        return self._successors[v]

    def prerequisites(self, u: str) -> frozenset[str]:
        return self._prerequisites[u]


def load_navigation(document: str | bytes | Mapping[str, Any]) -> NavigationSpec:
    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    kinds: dict[str, str] = {}
    for v in doc.get("vertices", []):
        if v.get("kind") not in ("read", "write"):
            raise NavigationError(f"vertex {v.get('id')!r}: kind must be 'read' or 'write'")
        if v["id"] in kinds:
            raise NavigationError(f"duplicate vertex {v['id']!r}")
        kinds[v["id"]] = v["kind"]

    def pairs(key):
        out = []
        for pair in doc.get(key, []):
            v, u = pair
            for x in (v, u):
                if x not in kinds:
                    raise DanglingReferenceError(f"{key}: unknown vertex {x!r}")
            out.append((v, u))
        return frozenset(out)

    nxt = pairs("next")
    req = pairs("requires")
    entries = tuple(doc.get("entries", []))
    if not entries:
        raise EmptyEntriesError("navigation spec declares no entry requests")
    for e in entries:
        if e not in kinds:
            raise DanglingReferenceError(f"entries: unknown vertex {e!r}")
    graph: dict[str, set[str]] = {v: set() for v in kinds}
    for v, u in req:
        graph[u].add(v)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CyclicPrerequisiteError(f"cyclic prerequisites: {exc.args[1]}") from None
    for e in entries:
        if any(w == e for _, w in req):
            raise NavigationError(f"entry request {e!r} has prerequisites")
    return NavigationSpec(kinds, nxt, req, entries)


@dataclass(frozen=True)
class WorkloadConfig:
    seed: int
    users: int = 1
    requests: int | None = None
    duration_ns: int | None = None
    read_fraction: float = 0.80
    close_probability: float = 0.05
    think_time_ns: int = 1_000_000

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("users must be positive")
        if (self.requests is None) == (self.duration_ns is None):
            raise ValueError("set exactly one of requests / duration_ns")
        if (self.requests is not None and self.requests < 1) or (
            self.duration_ns is not None and self.duration_ns < 1
        ):
            raise ValueError("request count / duration must be positive")
        if not 0.0 <= self.read_fraction <= 1.0:
            raise ValueError("read_fraction must lie in [0, 1]")
        if not 0.0 <= self.close_probability < 1.0:
            raise ValueError("close_probability must lie in [0, 1)")


@dataclass(frozen=True)
class ParamDomain:
    values: tuple
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.values:
            raise ValueError("parameter domain is empty")
        if self.weights is not None and len(self.weights) != len(self.values):
            raise ValueError("weights and values differ in length")

    def draw(self, rng: np.random.Generator):
        if self.weights is None:
            return self.values[int(rng.integers(len(self.values)))]
        p = np.asarray(self.weights, dtype=float)
        return self.values[int(rng.choice(len(self.values), p=p / p.sum()))]


@dataclass(frozen=True)
class RequestEvent:
    user: int
    session: str
    request: str
    params: tuple[tuple[str, Any], ...]
    issue_ns: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "user": self.user,
                "session": self.session,
                "request": self.request,
                "params": dict(self.params),
                "issue_ns": self.issue_ns,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )


def _user_stream(
    spec: NavigationSpec,
    config: WorkloadConfig,
    domains: Mapping[str, Mapping[str, ParamDomain]],
    user: int,
    rng: np.random.Generator,
) -> Iterator[RequestEvent]:
    t = int(rng.integers(0, config.think_time_ns + 1))
    n_sessions = 0
    session = None
    executed: set[str] = set()
    last = None
    while True:
        if session is None:
            session = f"u{user}-s{n_sessions}"
            n_sessions += 1
            executed, last = set(), None
            candidates = list(spec.entries)
        else:
            candidates = [u for u in spec.successors(last) if spec.prerequisites(u) <= executed]
        if not candidates:
            raise WorkloadError(
                f"session {session} is stuck after {last!r}: no successor has its "
                f"prerequisites met (executed: {sorted(executed)})"
            )
        reads = [c for c in candidates if spec.kinds[c] == "read"]
        writes = [c for c in candidates if spec.kinds[c] == "write"]
        if reads and writes:
            pool = reads if rng.random() < config.read_fraction else writes
        else:
            pool = candidates
        choice = pool[int(rng.integers(len(pool)))]
        params = tuple((name, dom.draw(rng)) for name, dom in domains.get(choice, {}).items())
        yield RequestEvent(user, session, choice, params, t)
        executed.add(choice)
        last = choice
        if rng.random() < config.close_probability:
            session = None
        t += 1 + int(rng.exponential(config.think_time_ns))


def generate_workload(
    spec: NavigationSpec,
    config: WorkloadConfig,
    domains: Mapping[str, Mapping[str, ParamDomain]] | None = None,
) -> tuple[RequestEvent, ...]:
    """Generate a request log, merging per-user streams by issue time.

    Each user draws from its own random stream spawned from ``config.seed``,
    so adding users never perturbs the existing ones.  When both read and
    write requests are eligible, the read side is picked with probability
    ``read_fraction``; otherwise the only eligible side is used.
    """
    if 0.0 < config.read_fraction < 1.0 and len(set(spec.kinds.values())) < 2:
        raise WorkloadError("a mixed workload needs both read and write requests")
    domains = domains or {}
    seeds = np.random.SeedSequence(config.seed).spawn(config.users)
    streams = [_user_stream(spec, config, domains, u, np.random.default_rng(s)) for u, s in enumerate(seeds)]
    heap = []
    for u, st in enumerate(streams):
        ev = next(st)
        heap.append((ev.issue_ns, u, ev))
    heapq.heapify(heap)
    out: list[RequestEvent] = []
    while heap:
        t, u, ev = heapq.heappop(heap)
        if config.duration_ns is not None and t >= config.duration_ns:
            continue
        out.append(ev)
        if config.requests is not None and len(out) >= config.requests:
            break
        nxt = next(streams[u])
        heapq.heappush(heap, (nxt.issue_ns, u, nxt))
    return tuple(out)


def prerequisite_violations(spec: NavigationSpec, log: Sequence[RequestEvent]) -> list[RequestEvent]:
    """Requests issued before all their prerequisites ran in the same session."""
    done: dict[str, set[str]] = {}
    bad = []
    for ev in log:
        seen = done.setdefault(ev.session, set())
        if not spec.prerequisites(ev.request) <= seen:
            bad.append(ev)
        seen.add(ev.request)
    return bad


def dump_request_log(log: Sequence[RequestEvent]) -> str:
    return "".join(ev.to_json() + "\n" for ev in log)


def load_request_log(path) -> tuple[RequestEvent, ...]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            out.append(RequestEvent(d["user"], d["session"], d["request"], tuple(d["params"].items()), d["issue_ns"]))
    return tuple(out)
