"""Input/output-invariance recommender.

Pipeline: a time and frequency filter, input-output profiling (exhaustive
or depth-iterative comparison), call-graph clustering with saved-time
ranking, and a suggested cache shape per method.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .canonical import prune
from .profiler import CallGraph, InputKey, MethodProfile, build_callgraph, build_profiles
from .recommendations import CacheImplHint, Recommendation, RecommendationSet
from .trace import CallRecord

__all__ = [
    "MemConfig",
    "RankedMethod",
    "profile_filter",
    "io_profile",
    "cluster_and_rank",
    "saved_time",
    "suggest_implementation",
    "recommend_mem",
    "recommend_mem_from_profiles",
]


@dataclass(frozen=True)
class MemConfig:
    min_mean_time_ns: float = 5000
    kernel: str = "exhaustive"
    initial_depth: int = 1
    max_depth: int | None = 16
    time_basis: str = "total"
    entry_penalty_ns: float = 0.0
    # stop doubling once the surviving set and input partitions stop changing
    stop_when_stable: bool = False

    def __post_init__(self):
        if self.kernel not in ("exhaustive", "iterative"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.time_basis not in ("total", "self"):
            raise ValueError(f"unknown time basis {self.time_basis!r}")
        if self.initial_depth < 1:
            raise ValueError("initial_depth must be >= 1")
        if self.max_depth is not None and self.max_depth < self.initial_depth:
            raise ValueError("max_depth must be >= initial_depth")


def profile_filter(profiles: Mapping[str, MethodProfile], config: MemConfig = MemConfig()) -> list[str]:
    out = []
    for m, p in profiles.items():
        mean = p.mean_total if config.time_basis == "total" else p.mean_self
        if p.count >= 2 and mean >= config.min_mean_time_ns:
            out.append(m)
    return sorted(out)


def _exhaustive_ok(p: MethodProfile) -> bool:
    return all(len({o.output for o in occ}) == 1 for occ in p.groups.values())


def _scan_at_depth(p: MethodProfile, depth: int):
    """Compare calls with trees cut at ``depth``.

    Returns (conflict, conclusive, truncated, partition): ``conclusive``
    means some conflicting class had no truncated input, so its members'
    inputs are fully equal and the differing outputs are real.
    """
    classes: dict[tuple[str, ...], list] = {}
    truncated = False
    partition = []
    for inputs, occ in p.groups.items():
        cut_in = tuple(prune(v, depth).render() for v in inputs)
        in_trunc = any(v.depth > depth for v in inputs)
        truncated = truncated or in_trunc
        entry = classes.setdefault(cut_in, [set(), False, len(classes)])
        entry[1] = entry[1] or in_trunc
        for o in occ:
            if o.output.depth > depth:
                truncated = True
            entry[0].add(prune(o.output, depth).render())
        partition.append(entry[2])
    conflict = conclusive = False
    for outs, in_trunc, _ in classes.values():
        if len(outs) > 1:
            conflict = True
            if not in_trunc:
                conclusive = True
    return conflict, conclusive, truncated, tuple(partition)


def io_profile(
    candidates: Iterable[str], profiles: Mapping[str, MethodProfile], config: MemConfig = MemConfig()
) -> list[str]:
    """Methods whose observed outputs never differ for equal inputs.

    The iterative kernel compares depth-pruned trees, doubling the depth
    from ``initial_depth``.  A method leaves the candidate set when a
    conflict is certain, or when ``max_depth`` is reached with a conflict
    among pruned-equal inputs (which may be a false discard).  Methods
    still unresolved at ``max_depth`` are kept (which may be a false
    accept).
    """
    cands = sorted(set(candidates))
    if config.kernel == "exhaustive":
        return [m for m in cands if _exhaustive_ok(profiles[m])]

    survivors = set(cands)
    pending = set(cands)
    depth = config.initial_depth
    previous = None
    while pending:
        final = config.max_depth is not None and depth >= config.max_depth
        snapshot = {}
        for m in sorted(pending):
            conflict, conclusive, truncated, partition = _scan_at_depth(profiles[m], depth)
            snapshot[m] = partition
            if conflict and (conclusive or final or not truncated):
                survivors.discard(m)
                pending.discard(m)
            elif not truncated or final:
                pending.discard(m)
        if final:
            break
        state = (frozenset(survivors), tuple(sorted(snapshot.items())))
        if config.stop_when_stable and state == previous:
            break
        previous = state
        depth *= 2
        if config.max_depth is not None:
            depth = min(depth, config.max_depth)
    return sorted(survivors)


def saved_time(p: MethodProfile) -> float:
    """Sum over input groups of (calls - 1) x mean total time of the group."""
    total = 0.0
    for occ in p.groups.values():
        if len(occ) > 1:
            total += (len(occ) - 1) * (sum(o.total for o in occ) / len(occ))
    return total


@dataclass(frozen=True)
class RankedMethod:
    method: str
    saved_ns: float
    subsumes: tuple[str, ...] = ()


def cluster_and_rank(
    memoizable: Iterable[str], callgraph: CallGraph, profiles: Mapping[str, MethodProfile]
) -> list[RankedMethod]:
    """Fold memoizable callees into a memoizable caller that wraps every call.

    A callee joins its caller's cluster only when all of its traced calls
    are directly nested in that one caller.  Clusters are reported under
    their outermost method and ranked by saved time, then by signature.
    """
    memo = set(memoizable)
    head_of: dict[str, str] = {}
    for c in memo:
        callers = callgraph.callers(c)
        if len(callers) == 1:
            (p, n), = callers.items()
            if p != c and p in memo and n == profiles[c].count:
                head_of[c] = p

    def root(m):
        seen = {m}
        while m in head_of and head_of[m] not in seen:
            m = head_of[m]
            seen.add(m)
        return m

    members: dict[str, list[str]] = {}
    for m in memo:
        r = root(m)
        if r != m:
            members.setdefault(r, []).append(m)
    heads = [m for m in memo if root(m) == m]
    ranked = [RankedMethod(m, saved_time(profiles[m]), tuple(sorted(members.get(m, ())))) for m in heads]
    ranked.sort(key=lambda r: (-r.saved_ns, r.method))
    return ranked


def _replay_own_calls(p: MethodProfile):
    single_saved = multi_saved = 0
    current: InputKey | None = None
    held: set = set()
    for _, inputs, occ in p.calls():
        if current is not None and inputs == current:
            single_saved += occ.total
        current = inputs
        if inputs in held:
            multi_saved += occ.total
        held.add(inputs)
    return single_saved, multi_saved, len(held)


def suggest_implementation(
    method: str, profile: MethodProfile, entry_penalty_ns: float = 0.0
) -> CacheImplHint:
    """Global scope always; single entry unless holding many entries pays off."""
    if profile.arity == 0:
        return CacheImplHint(scope="global", size="single", getter=True)
    single, multi, entries = _replay_own_calls(profile)
    size = "single" if single >= multi - entry_penalty_ns * entries else "multi"
    return CacheImplHint(scope="global", size=size, getter=False)


def recommend_mem_from_profiles(
    profiles: Mapping[str, MethodProfile], callgraph: CallGraph, config: MemConfig = MemConfig()
) -> RecommendationSet:
    candidates = profile_filter(profiles, config)
    memoizable = io_profile(candidates, profiles, config)
    entries = []
    for r in cluster_and_rank(memoizable, callgraph, profiles):
        hint = suggest_implementation(r.method, profiles[r.method], config.entry_penalty_ns)
        entries.append(Recommendation(method=r.method, score=r.saved_ns, hint=hint, subsumes=r.subsumes))
    return RecommendationSet("MEM", tuple(entries))


def recommend_mem(records: Iterable[CallRecord], config: MemConfig = MemConfig()) -> RecommendationSet:
    recs = list(records)
    return recommend_mem_from_profiles(build_profiles(recs), build_callgraph(recs), config)
