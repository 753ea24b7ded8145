"""Ask both recommenders for advice on the same trace and compare them."""
from memorec.apl import AplConfig, compute_metrics, recommend_apl
from memorec.evaluate import classify, compare
from memorec.mem import MemConfig, recommend_mem
from memorec.profiler import build_profiles
from memorec.study import bundled_shop
from memorec.synthetic import execute_synthetic, ground_truth_manifest
from memorec.workload import WorkloadConfig, generate_workload

nav, app, dev = bundled_shop()
log = generate_workload(nav, WorkloadConfig(seed=5, users=5, requests=3000), app.domains)
records = execute_synthetic(app, log, seed=5)
manifest = ground_truth_manifest(app)

print("cacheability metrics")
print(f"  {'method':45} {'freq':>6} {'exp ns':>8} {'share':>5} {'change':>6}")
for name, m in sorted(compute_metrics(build_profiles(records)).items()):
    print(f"  {name:45} {m.frequency:6d} {m.expensiveness:8.0f} {m.shareability:5d} {m.changeability:6.3f}")

apl = recommend_apl(records, AplConfig())
mem = recommend_mem(records, MemConfig(kernel="iterative"))

for rs in (apl, mem):
    print(f"\n{rs.source} recommendations")
    for r in rs:
        extra = f"whitelist {len(r.whitelist)}" if r.whitelist else f"hint {r.hint.size}"
        print(f"  {r.score:14.0f}  {manifest[r.method]:13} {r.method}  ({extra})")
    c = classify(rs, dev, manifest)
    print(f"  novel={c.count('novel')} existing={c.count('existing')} invalid={c.count('invalid')}")

o = compare(apl, mem)
print("\nshared:", ", ".join(o.shared) or "-")
print("APL only:", ", ".join(o.only_a) or "-")
print("MEM only:", ", ".join(o.only_b) or "-")
