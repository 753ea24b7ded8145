from collections import Counter

import numpy as np
import pytest

from _support import random_trace, rec
from memorec.profiler import build_callgraph, build_profiles, profiles_to_json
from memorec.trace import NestingError


def test_two_equal_calls():
    p = build_profiles([rec("m", [1], 2, 0, 10), rec("m", [1], 2, 100, 112)])["m"]
    assert p.count == 2
    (key, occ), = p.groups.items()
    assert [v.render() for v in key] == ["1"]
    assert [(o.output.render(), o.start) for o in occ] == [("2", 0), ("2", 100)]
    assert p.mean_total == 11
    assert p.std_total == 1


def test_group_with_two_outputs():
    p = build_profiles([rec("m", [1], 2, 0, 10), rec("m", [1], 3, 20, 30)])["m"]
    assert len(p.groups) == 1
    assert {o.output.render() for o in next(iter(p.groups.values()))} == {"2", "3"}


def test_self_time():
    p = build_profiles([rec("p", [], 0, 0, 100, 0), rec("c", [], 0, 30, 70, 1)])
    assert p["p"].self_times == (60,)
    assert p["c"].self_times == (40,)


def test_nesting_violation_propagates():
    with pytest.raises(NestingError):
        build_profiles([rec("p", [], 0, 0, 50, 0), rec("c", [], 0, 30, 70, 1)])


def test_callgraph_examples():
    g = build_callgraph([rec("root", [], 0, 0, 100, 0), rec("a", [], 0, 10, 20, 1), rec("b", [], 0, 30, 40, 1)])
    assert g.edges == {("root", "a"): 1, ("root", "b"): 1}
    g = build_callgraph([rec("root", [], 0, 0, 100, 0), rec("b", [], 0, 10, 90, 1), rec("a", [], 0, 20, 30, 2)])
    assert g.edges == {("b", "a"): 1, ("root", "b"): 1}
    g = build_callgraph([
        rec("root", [], 0, 0, 100, 0, "x"),
        rec("a", [], 0, 10, 20, 1, "x"),
        rec("root", [], 0, 200, 300, 0, "y"),
        rec("a", [], 0, 210, 220, 1, "y"),
    ])
    assert g.edges == {("root", "a"): 2}
    assert g.callers("a") == {"root": 2} and g.callees("root") == {"a": 2}


def _naive_edges(records):
    """Direct nesting by brute-force interval containment."""
    edges = Counter()
    for c in records:
        parents = [
            p for p in records
            if p is not c and p.session == c.session and p.depth == c.depth - 1
            and p.start <= c.start and c.end <= p.end
        ]
        if parents:
            (p,) = parents
            edges[(p.method, c.method)] += 1
    return dict(edges)


def test_callgraph_matches_naive_containment():
    rng = np.random.default_rng(1)
    for _ in range(200):
        records = random_trace(rng)
        assert build_callgraph(records).edges == _naive_edges(records)


def test_profiles_invariant_under_reordering():
    rng = np.random.default_rng(2)
    for _ in range(50):
        records = random_trace(rng, noisy=0.5)
        shuffled = list(records)
        rng.shuffle(shuffled)
        a, b = build_profiles(records), build_profiles(shuffled)
        assert a == b
        assert profiles_to_json(a) == profiles_to_json(b)


def test_count_equals_group_sizes_and_self_time_nonnegative():
    rng = np.random.default_rng(3)
    for _ in range(50):
        for p in build_profiles(random_trace(rng)).values():
            assert p.count == sum(len(v) for v in p.groups.values())
            assert min(p.self_times) >= 0


def test_arity():
    p = build_profiles([rec("m", [], 0, 0, 1), rec("n", [1, 2], 0, 2, 3), rec("n", [1], 0, 4, 5)])
    assert p["m"].arity == 0
    assert p["n"].arity is None
