"""Shared fixtures: record builders and a random well-nested trace generator."""
from __future__ import annotations

import numpy as np

from memorec import (
    Admission,
    CacheConfig,
    CachingPlan,
    CallRecord,
    PlanEntry,
    canonicalize,
)

HOT = (
    "shop.catalog.CategoryService.listCategories()",
    "shop.catalog.ProductRepository.findById(long)",
    "shop.pricing.PriceService.quote(long)",
    "shop.search.SearchEngine.search(String)",
)
TIME_VARYING = ("shop.fx.ExchangeRates.current(String)", "shop.web.Dispatcher.handle()")
IO_INVARIANT_WRITER = "shop.orders.OrderService.submit(int)"


def rec(method, inputs, output, start, end, depth=0, session="s"):
    return CallRecord(
        session, method, tuple(canonicalize(x) for x in inputs), canonicalize(output), start, end, depth
    )


def calls(method, inputs, *, step=10, cost=5, output=None, start=0, session="s"):
    """Top-level calls of one method, one per input, ``step`` ns apart."""
    out = []
    for i, x in enumerate(inputs):
        t = start + i * step
        out.append(rec(method, [x], x if output is None else output(x), t, t + cost, 0, session))
    return out


def _value(rng, depth):
    if depth <= 1 or rng.random() < 0.3:
        return int(rng.integers(0, 3))
    return {f"f{i}": _value(rng, depth - 1) for i in range(int(rng.integers(1, 3)))}


def random_trace(
    rng: np.random.Generator,
    *,
    max_calls=50,
    n_methods=5,
    n_sessions=3,
    max_nesting=3,
    value_depth=1,
    noisy=0.3,
):
    """Interleaved sessions of strictly nested random call trees.

    Each method is either deterministic in its inputs or, with probability
    ``noisy``, returns a random small value.  Records are ordered by start.
    """
    methods = [f"m{i}" for i in range(int(rng.integers(1, n_methods + 1)))]
    is_noisy = {m: rng.random() < noisy for m in methods}
    budget = int(rng.integers(1, max_calls + 1))
    records = []

    def node(session, depth, clock):
        nonlocal budget
        budget -= 1
        m = methods[int(rng.integers(len(methods)))]
        args = [_value(rng, value_depth) for _ in range(int(rng.integers(0, 3)))]
        if is_noisy[m]:
            out = int(rng.integers(0, 3))
        else:
            out = canonicalize([m, args]).render()
        start = clock
        clock += int(rng.integers(1, 4))
        if depth < max_nesting:
            for _ in range(int(rng.integers(0, 3))):
                if budget <= 0:
                    break
                clock = node(session, depth + 1, clock) + int(rng.integers(0, 3))
        clock += int(rng.integers(1, 4))
        records.append(rec(m, args, out, start, clock, depth, session))
        return clock

    clocks = [int(rng.integers(0, 20)) for _ in range(n_sessions)]
    while budget > 0:
        s = int(rng.integers(n_sessions))
        clocks[s] = node(f"s{s}", 0, clocks[s]) + int(rng.integers(0, 30))
    records.sort(key=lambda r: (r.start, r.session, r.depth))
    return records


def random_plan(rng: np.random.Generator, records, name="P"):
    methods = sorted({r.method for r in records})
    keys = {}
    for r in records:
        keys.setdefault(r.method, []).append(r.inputs)
    kinds = list(Admission)
    entries, ttls = {}, {}
    for m in methods:
        kind = kinds[int(rng.integers(len(kinds)))]
        if rng.random() < 0.2:
            continue
        wl = None
        if kind is Admission.INPUT_WHITELIST:
            pool = keys[m]
            n = int(rng.integers(1, len(pool) + 1))
            wl = frozenset(pool[int(i)] for i in rng.integers(0, len(pool), n))
        entries[m] = PlanEntry(kind, wl)
        if rng.random() < 0.3:
            ttls[m] = None if rng.random() < 0.3 else int(rng.integers(1, 60))
    return CachingPlan(entries, name, ttls)


def random_cache_config(rng: np.random.Generator):
    ttl = None if rng.random() < 0.4 else int(rng.integers(1, 80))
    return CacheConfig(default_ttl_ns=ttl)


def pure_program_trace(rng: np.random.Generator, *, max_calls=60, n_methods=5, n_sessions=2):
    """A trace of a deterministic program: each (method, args) always runs the
    same subtree with the same durations and returns the same output."""
    seed = int(rng.integers(2**31))
    arity = [int(a) for a in rng.integers(0, 2, n_methods)]

    def shape(m, args):
        r = np.random.default_rng([seed, m, *args])
        kids = []
        if m + 1 < n_methods:
            for _ in range(int(r.integers(0, 3))):
                c = int(r.integers(m + 1, n_methods))
                kids.append((c, tuple(int(x) for x in r.integers(0, 3, arity[c]))))
        return kids, int(r.integers(1, 5)), int(r.integers(1, 5))

    records = []
    budget = [int(rng.integers(1, max_calls + 1))]

    def run(m, args, session, depth, clock):
        budget[0] -= 1
        kids, before, after = shape(m, args)
        start = clock
        clock += before
        for c, a in kids:
            clock = run(c, a, session, depth + 1, clock)
        clock += after
        records.append(rec(f"m{m}", list(args), f"v{m}-{'-'.join(map(str, args))}", start, clock, depth, session))
        return clock

    clocks = [0] * n_sessions
    while budget[0] > 0:
        s = int(rng.integers(n_sessions))
        m = int(rng.integers(n_methods))
        args = tuple(int(x) for x in rng.integers(0, 3, arity[m]))
        clocks[s] = run(m, args, f"s{s}", 0, clocks[s]) + int(rng.integers(0, 10))
    records.sort(key=lambda r: (r.start, r.session, r.depth))
    return records
