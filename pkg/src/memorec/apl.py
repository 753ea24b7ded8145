"""Cacheability-metric recommender with per-input selection.

Methods are scored on frequency, expensiveness, shareability, staticity and
changeability.  A method qualifies when it rarely changes and at least one
of frequency, expensiveness or shareability sits ``k`` population standard
deviations above the mean over all methods.  Only the input groups that
repeat often enough with a stable output are whitelisted.

The metric formulas are reconstructions; every threshold is configurable.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping

from .profiler import InputKey, MethodProfile, build_profiles
from .recommendations import Recommendation, RecommendationSet
from .trace import CallRecord

__all__ = [
    "AplConfig",
    "AplMetrics",
    "compute_metrics",
    "select_methods",
    "select_inputs",
    "recommend_apl",
    "recommend_apl_from_profiles",
]


@dataclass(frozen=True)
class AplConfig:
    k: float = 1.0
    changeability_ceiling: float = 0.1
    min_input_occurrences: int = 2

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if not 0.0 <= self.changeability_ceiling <= 1.0:
            raise ValueError("changeability_ceiling must lie in [0, 1]")
        if self.min_input_occurrences < 2:
            raise ValueError("min_input_occurrences must be >= 2")


@dataclass(frozen=True)
class AplMetrics:
    method: str
    frequency: int
    expensiveness: float
    shareability: int
    staticity: float
    changeability: float


def _metrics_for(p: MethodProfile) -> AplMetrics:
    stable_groups = 0
    changed_calls = 0
    sharing_sessions = set()
    for occ in p.groups.values():
        seen = set()
        for o in occ:
            out = o.output
            if seen and (len(seen) > 1 or out not in seen):
                changed_calls += 1
            if out in seen:
                sharing_sessions.add(o.session)
            seen.add(out)
        if len(seen) == 1:
            stable_groups += 1
    return AplMetrics(
        method=p.method,
        frequency=p.count,
        expensiveness=p.mean_total,
        shareability=len(sharing_sessions),
        staticity=stable_groups / len(p.groups),
        changeability=changed_calls / p.count,
    )


def compute_metrics(profiles: Mapping[str, MethodProfile]) -> dict[str, AplMetrics]:
    """Per-method metrics.

    * frequency: number of calls
    * expensiveness: mean total (subtree) time
    * shareability: sessions holding a call whose (input, output) pair
      already occurred earlier in the trace
    * staticity: fraction of input groups with a single distinct output
    * changeability: fraction of calls whose group saw a different output
      earlier in the trace
    """
    return {m: _metrics_for(p) for m, p in profiles.items()}


def _cutoff(values: list[float], k: float) -> float:
    return statistics.mean(values) + k * statistics.pstdev(values)


def select_methods(metrics: Mapping[str, AplMetrics], config: AplConfig = AplConfig()) -> set[str]:
    if not metrics:
        return set()
    ms = list(metrics.values())
    cut_f = _cutoff([m.frequency for m in ms], config.k)
    cut_e = _cutoff([m.expensiveness for m in ms], config.k)
    cut_s = _cutoff([m.shareability for m in ms], config.k)
    return {
        m.method
        for m in ms
        if m.changeability <= config.changeability_ceiling
        and (m.frequency >= cut_f or m.expensiveness >= cut_e or m.shareability >= cut_s)
    }


def select_inputs(
    method: str, profile: MethodProfile, config: AplConfig = AplConfig()
) -> frozenset[InputKey] | None:
    """Whitelist of input groups worth caching, or ``None`` to drop the method."""
    counts = profile.group_counts()
    stable = {k for k, occ in profile.groups.items() if len({o.output for o in occ}) == 1}
    cut = max(config.min_input_occurrences, _cutoff(list(counts.values()), config.k))
    chosen = frozenset(k for k in stable if counts[k] >= cut)
    if chosen:
        return chosen
    fallback = [k for k in stable if counts[k] >= config.min_input_occurrences]
    if not fallback:
        return None
    best = min(fallback, key=lambda k: (-counts[k], [v.render() for v in k]))
    return frozenset([best])


def recommend_apl_from_profiles(
    profiles: Mapping[str, MethodProfile], config: AplConfig = AplConfig()
) -> RecommendationSet:
    if not profiles:
        return RecommendationSet("APL")
    metrics = compute_metrics(profiles)
    entries = []
    for method in sorted(select_methods(metrics, config)):
        wl = select_inputs(method, profiles[method], config)
        if wl is None:
            continue
        score = float(sum(o.total for k in wl for o in profiles[method].groups[k]))
        entries.append(Recommendation(method=method, score=score, whitelist=wl))
    entries.sort(key=lambda e: (-e.score, e.method))
    return RecommendationSet("APL", tuple(entries))


def recommend_apl(records: Iterable[CallRecord], config: AplConfig = AplConfig()) -> RecommendationSet:
    return recommend_apl_from_profiles(build_profiles(records), config)
