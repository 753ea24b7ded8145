"""A synthetic application model that turns request logs into call traces.

Each request runs a tree of method nodes on a single simulated server
clock.  A node's behavior decides its output:

``pure``            deterministic function of the inputs
``time-varying``    changes exactly at multiples of ``period_ns``
``random``          fresh random integer per call
``side-effecting``  a write of some category; returns a running counter
                    unless ``fn`` is ``const``
``getter``          takes no inputs; constant output

The behavior of every signature doubles as its ground-truth purity label.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .canonical import TruncationPolicy, canonicalize
from .trace import CallRecord
from .workload import ParamDomain, RequestEvent

__all__ = [
    "BEHAVIORS",
    "SIDE_EFFECTS",
    "MethodNode",
    "RequestModel",
    "SyntheticApp",
    "AppSpecError",
    "load_app",
    "execute_synthetic",
    "ground_truth_manifest",
    "load_app_file",
]

BEHAVIORS = ("pure", "time-varying", "random", "side-effecting", "getter")
SIDE_EFFECTS = ("db-write", "external-call", "file-write", "static-mutation", "parameter-mutation")
_FNS = ("hash", "record", "inc", "identity", "const", "counter")


class AppSpecError(ValueError):
    pass


@dataclass(frozen=True)
class MethodNode:
    method: str
    behavior: str
    cost_ns: int
    inputs: tuple[str, ...] = ()
    period_ns: int | None = None
    category: str | None = None
    fn: str | None = None
    value: Any = None
    children: tuple["MethodNode", ...] = ()

    def __post_init__(self):
        b = self.behavior
        if b not in BEHAVIORS:
            raise AppSpecError(f"{self.method}: unknown behavior {b!r}")
        if self.cost_ns < 0:
            raise AppSpecError(f"{self.method}: negative cost")
        if b == "time-varying" and not (self.period_ns and self.period_ns > 0):
            raise AppSpecError(f"{self.method}: time-varying needs a positive period_ns")
        if b == "side-effecting" and self.category not in SIDE_EFFECTS:
            raise AppSpecError(f"{self.method}: side-effecting needs a category in {SIDE_EFFECTS}")
        if b == "getter" and self.inputs:
            raise AppSpecError(f"{self.method}: getters take no inputs")
        if self.fn is not None and self.fn not in _FNS:
            raise AppSpecError(f"{self.method}: unknown fn {self.fn!r}")
        if b == "time-varying" and self.fn not in (None, "hash", "record"):
            raise AppSpecError(f"{self.method}: time-varying output must be 'hash' or 'record'")

    @property
    def label(self) -> str:
        return self.category if self.behavior == "side-effecting" else self.behavior

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass(frozen=True)
class RequestModel:
    request: str
    tree: MethodNode
    params: Mapping[str, ParamDomain] = field(default_factory=dict)


@dataclass(frozen=True)
class SyntheticApp:
    requests: Mapping[str, RequestModel]

    def __post_init__(self):
        ground_truth_manifest(self)

    @property
    def domains(self) -> dict[str, Mapping[str, ParamDomain]]:
        return {r: m.params for r, m in self.requests.items()}


def _node(doc: Mapping) -> MethodNode:
    return MethodNode(
        method=doc["method"],
        behavior=doc["behavior"],
        cost_ns=int(doc["cost_ns"]),
        inputs=tuple(doc.get("inputs", ())),
        period_ns=doc.get("period_ns"),
        category=doc.get("category"),
        fn=doc.get("fn"),
        value=doc.get("value"),
        children=tuple(_node(c) for c in doc.get("children", ())),
    )


def _domain(d: Mapping) -> ParamDomain:
    if "range" in d:
        lo, hi = d["range"]
        values = tuple(range(lo, hi + 1))
    else:
        values = tuple(d["values"])
    return ParamDomain(values, None if d.get("weights") is None else tuple(d["weights"]))


def load_app(document: str | bytes | Mapping) -> SyntheticApp:
    """Build an app from its JSON form::

        {"requests": {"home": {"params": {"id": {"values": [1, 2], "weights": [3, 1]},
                                          "nonce": {"range": [1, 1000]}},
                               "tree": {"method": ..., "behavior": ..., "cost_ns": ...,
                                        "inputs": [...], "children": [...]}}}}
    """
    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    requests = {}
    for name, r in doc["requests"].items():
        params = {p: _domain(d) for p, d in r.get("params", {}).items()}
        tree = _node(r["tree"])
        for n in tree.walk():
            missing = [i for i in n.inputs if i not in params]
            if missing:
                raise AppSpecError(f"{name}/{n.method}: undeclared parameters {missing}")
        requests[name] = RequestModel(name, tree, params)
    return SyntheticApp(requests)


def ground_truth_manifest(app: SyntheticApp) -> dict[str, str]:
    """Signature -> behavior label (side effects report their category)."""
    out: dict[str, str] = {}
    for rm in app.requests.values():
        for n in rm.tree.walk():
            prev = out.setdefault(n.method, n.label)
            if prev != n.label:
                raise AppSpecError(f"{n.method} declared both {prev!r} and {n.label!r}")
    return dict(sorted(out.items()))


def _digest(*parts: Any) -> str:
    h = hashlib.blake2b(digest_size=6)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


class _Executor:
    def __init__(self, app: SyntheticApp, policy: TruncationPolicy, seed: int):
        self.app = app
        self.policy = policy
        self.rng = np.random.default_rng(seed)
        self.clock = 0
        self.counters: dict[str, int] = {}
        self.records: list[CallRecord | None] = []

    def output(self, node: MethodNode, args: list, start: int):
        b, fn = node.behavior, node.fn
        if b == "random":
            return int(self.rng.integers(1, 1001))
        if fn == "const":
            return node.value
        if b == "side-effecting" and fn in (None, "counter"):
            n = self.counters.get(node.method, 0) + 1
            self.counters[node.method] = n
            return n
        if fn == "inc":
            return args[0] + 1
        if fn == "identity":
            return args[0] if len(args) == 1 else list(args)
        epoch = start // node.period_ns if b == "time-varying" else None
        digest = _digest(node.method, args, epoch)
        if fn == "record":
            return {"key": args[0] if args else node.method, "data": {"digest": digest}}
        return digest

    def run(self, node: MethodNode, params: Mapping[str, Any], session: str, depth: int):
        slot = len(self.records)
        self.records.append(None)
        start = self.clock
        cost = node.cost_ns + int(self.rng.integers(0, node.cost_ns * 5 // 100 + 1))
        before = cost // 2
        self.clock += before
        for child in node.children:
            self.run(child, params, session, depth + 1)
        self.clock += cost - before
        args = [params[name] for name in node.inputs]
        out = self.output(node, args, start)
        self.records[slot] = CallRecord(
            session=session,
            method=node.method,
            inputs=tuple(canonicalize(a, self.policy) for a in args),
            output=canonicalize(out, self.policy),
            start=start,
            end=self.clock,
            depth=depth,
        )


def execute_synthetic(
    app: SyntheticApp,
    log: Sequence[RequestEvent],
    policy: TruncationPolicy | None = None,
    seed: int = 0,
) -> tuple[CallRecord, ...]:
    """Execute ``log`` request by request and return the trace.

    Requests are served one at a time in log order; a request starts at its
    issue time or when the previous one finishes, whichever is later.  Each
    node costs its base cost plus a seeded jitter of at most 5%, split evenly
    before and after its children.
    """
    ex = _Executor(app, policy or TruncationPolicy(), seed)
    for ev in log:
        if ev.request not in app.requests:
            raise AppSpecError(f"request {ev.request!r} is not defined by the app")
        ex.clock = max(ex.clock, ev.issue_ns)
        ex.run(app.requests[ev.request].tree, dict(ev.params), ev.session, 0)
    return tuple(ex.records)


def load_app_file(path) -> SyntheticApp:
    return load_app(Path(path).read_text(encoding="utf-8"))
