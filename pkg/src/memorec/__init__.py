"""Trace-driven recommendation and replay evaluation of method-level caching."""
from .apl import AplConfig, recommend_apl
from .canonical import CanonicalValue, RawObject, TruncationPolicy, canonicalize, parse_canonical
from .evaluate import classify, compare, emit_report
from .mem import MemConfig, recommend_mem
from .profiler import build_callgraph, build_profiles
from .recommendations import CacheImplHint, Recommendation, RecommendationSet
from .replay import Admission, CacheConfig, CachingPlan, PlanEntry, brute_force_oracle, replay, simulate_throughput
from .synthetic import execute_synthetic, load_app
from .trace import CallRecord, parse_trace_stream, read_trace, trace_digest
from .workload import WorkloadConfig, generate_workload, load_navigation

__version__ = "0.1.0"
