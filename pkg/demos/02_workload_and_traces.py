"""Generate a navigation-driven workload, execute it, and inspect the trace."""
import io
from collections import Counter

from memorec.profiler import build_profiles
from memorec.study import bundled_shop
from memorec.synthetic import execute_synthetic, ground_truth_manifest
from memorec.trace import dump_trace, parse_trace_stream, trace_digest
from memorec.workload import WorkloadConfig, generate_workload, prerequisite_violations

nav, app, dev = bundled_shop()
print("pages:", ", ".join(nav.vertices))
print("entry pages:", ", ".join(nav.entries))

cfg = WorkloadConfig(seed=11, users=4, requests=400, read_fraction=0.8)
log = generate_workload(nav, cfg, app.domains)
kinds = Counter(nav.kinds[e.request] for e in log)
print(f"\n{len(log)} requests over {len({e.session for e in log})} sessions, "
      f"read fraction {kinds['read'] / len(log):.3f}")
assert prerequisite_violations(nav, log) == []

records = execute_synthetic(app, log, seed=cfg.seed)
d = trace_digest(records)
print(f"trace: {d.records} calls, {d.methods} methods, span {d.span[1] - d.span[0]} ns")

# The JSONL form round-trips exactly.
text = dump_trace(records)
assert parse_trace_stream(io.StringIO(text)).records == records
print("first line:", text.splitlines()[0])

print("\nper-method profile (calls, mean total ns, distinct inputs, label):")
manifest = ground_truth_manifest(app)
for name, p in sorted(build_profiles(records).items(), key=lambda kv: -kv[1].count):
    print(f"  {p.count:5d} {p.mean_total:10.0f} {len(p.groups):5d}  {manifest[name]:13} {name}")
