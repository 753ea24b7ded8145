"""Run the learn-then-test comparison end to end and write every artifact.

Usage: python demos/05_full_study.py [output-dir]
"""
import sys
import tempfile
from pathlib import Path

from memorec.study import bundled_shop, run_study, write_study
from memorec.workload import WorkloadConfig

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="memorec-study-"))
nav, app, dev = bundled_shop()
result = run_study(nav, app, WorkloadConfig(seed=1, users=5, requests=5000), dev=dev)
files = write_study(result, out, "md")

for name in ("APL", "MEM"):
    c = result.classifications[name]
    print(f"{name}: {len(c.rows)} recommended, {c.count('invalid')} invalid, "
          f"usefulness {c.usefulness_rate if c.usefulness_rate is not None else 'n/a'}")
print()
print((out / "report" / "report.md").read_text())
print(f"{len(files)} files written under {out}")
