"""Labeling recommendations against a purity manifest and writing reports."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .recommendations import RecommendationSet
from .replay import CachingPlan, ReplayMetrics, metrics_csv, simulate_throughput

__all__ = [
    "CATEGORIES",
    "INVALID_CATEGORIES",
    "ManifestError",
    "LabeledRecommendation",
    "Classification",
    "Overlap",
    "classify",
    "compare",
    "emit_report",
    "load_manifest",
    "dump_manifest",
]

CATEGORIES = (
    "pure",
    "db-write",
    "external-call",
    "file-write",
    "static-mutation",
    "parameter-mutation",
    "time-varying",
    "random",
    "getter",
)
INVALID_CATEGORIES = frozenset(
    {"db-write", "external-call", "file-write", "static-mutation", "parameter-mutation", "random"}
)


class ManifestError(ValueError):
    pass


def load_manifest(path) -> dict[str, str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    bad = {m: c for m, c in doc.items() if c not in CATEGORIES}
    if bad:
        raise ManifestError(f"unknown categories: {bad}")
    return dict(doc)


def dump_manifest(manifest: Mapping[str, str]) -> str:
    return json.dumps(dict(sorted(manifest.items())), indent=2) + "\n"


@dataclass(frozen=True)
class LabeledRecommendation:
    approach: str
    method: str
    label: str
    useful: bool
    hits: int


@dataclass(frozen=True)
class Classification:
    approach: str
    rows: tuple[LabeledRecommendation, ...]

    def count(self, label: str) -> int:
        return sum(r.label == label for r in self.rows)

    @property
    def useful(self) -> int:
        return sum(r.useful for r in self.rows)

    @property
    def valid_methods(self) -> list[str]:
        return [r.method for r in self.rows if r.label != "invalid"]

    @property
    def usefulness_rate(self) -> float | None:
        valid = self.count("novel") + self.count("existing")
        return self.useful / valid if valid else None


def classify(
    recs: RecommendationSet,
    dev: CachingPlan,
    manifest: Mapping[str, str],
    metrics: ReplayMetrics | None = None,
) -> Classification:
    """Label each recommendation novel, existing or invalid, and mark hits.

    ``metrics`` should come from replaying the valid part of ``recs`` on the
    testing trace; without it nothing counts as useful.
    """
    unknown = sorted(r.method for r in recs if r.method not in manifest)
    if unknown:
        raise ManifestError(f"methods missing from the purity manifest: {unknown}")
    dev_methods = set(dev.methods)
    rows = []
    for r in recs:
        if manifest[r.method] in INVALID_CATEGORIES:
            label = "invalid"
        elif r.method in dev_methods:
            label = "existing"
        else:
            label = "novel"
        hits = 0
        if metrics is not None and r.method in metrics.methods:
            hits = metrics.methods[r.method].hits
        rows.append(LabeledRecommendation(recs.source, r.method, label, label != "invalid" and hits > 0, hits))
    return Classification(recs.source, tuple(rows))


@dataclass(frozen=True)
class Overlap:
    a: str
    b: str
    shared: tuple[str, ...]
    only_a: tuple[str, ...]
    only_b: tuple[str, ...]
    whitelist_sizes_a: Mapping[str, int | None]
    whitelist_sizes_b: Mapping[str, int | None]


def _wl_sizes(s: RecommendationSet) -> dict[str, int | None]:
    return {e.method: None if e.whitelist is None else len(e.whitelist) for e in s}


def compare(a: RecommendationSet, b: RecommendationSet, names: tuple[str, str] | None = None) -> Overlap:
    ma, mb = set(a.methods), set(b.methods)
    na, nb = names or (a.source, b.source)
    return Overlap(
        na,
        nb,
        tuple(sorted(ma & mb)),
        tuple(sorted(ma - mb)),
        tuple(sorted(mb - ma)),
        _wl_sizes(a),
        _wl_sizes(b),
    )


CLASSIFICATION_COLUMNS = ("approach", "method", "label", "useful", "hits")
SUMMARY_COLUMNS = ("approach", "novel", "existing", "invalid", "useful", "usefulness_rate", "total")
OVERLAP_COLUMNS = ("a", "b", "shared", "only_a", "only_b", "shared_methods", "only_a_methods", "only_b_methods")
THROUGHPUT_COLUMNS = (
    "plan", "baseline_ns", "simulated_ns", "hits", "misses", "additions", "discards", "relative_throughput",
)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _rate(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def _summary_rows(classifications):
    for c in classifications:
        yield (
            c.approach,
            c.count("novel"),
            c.count("existing"),
            c.count("invalid"),
            c.useful,
            _rate(c.usefulness_rate),
            len(c.rows),
        )


def _table(fmt: str, header, rows) -> str:
    rows = [[str(x) for x in r] for r in rows]
    if fmt == "md":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(x.ljust(w) for x, w in zip(r, widths)) for r in rows]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def emit_report(
    classifications: Sequence[Classification],
    comparisons: Sequence[Overlap],
    metrics: Sequence[ReplayMetrics],
    destination,
    fmt: str = "csv",
) -> list[Path]:
    """Write classification, summary, overlap, metrics and throughput tables.

    CSVs are always written; ``fmt`` picks the rendering of the
    human-readable summary (``csv`` gives plain text, ``md`` Markdown).
    """
    if fmt not in ("csv", "md"):
        raise ValueError(f"unknown report format {fmt!r}")
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)

    throughput = simulate_throughput(metrics) if metrics else []
    tp_rows = [
        (t.plan, t.baseline_ns, f"{t.simulated_ns:.1f}", t.hits, t.misses, t.additions, t.discards,
         f"{t.relative_throughput:.6f}")
        for t in throughput
    ]
    cls_rows = [(r.approach, r.method, r.label, str(r.useful).lower(), r.hits) for c in classifications for r in c.rows]
    ov_rows = [
        (o.a, o.b, len(o.shared), len(o.only_a), len(o.only_b), ";".join(o.shared), ";".join(o.only_a), ";".join(o.only_b))
        for o in comparisons
    ]
    files = {
        "classification.csv": _csv(CLASSIFICATION_COLUMNS, cls_rows),
        "summary.csv": _csv(SUMMARY_COLUMNS, _summary_rows(classifications)),
        "overlap.csv": _csv(OVERLAP_COLUMNS, ov_rows),
        "metrics.csv": metrics_csv(metrics),
        "throughput.csv": _csv(THROUGHPUT_COLUMNS, tp_rows),
    }
    title = "# Caching recommendation report\n\n" if fmt == "md" else "Caching recommendation report\n\n"
    sections = [
        ("Recommendations", SUMMARY_COLUMNS, list(_summary_rows(classifications))),
        ("Throughput", THROUGHPUT_COLUMNS, tp_rows),
        ("Overlap", OVERLAP_COLUMNS[:5], [r[:5] for r in ov_rows]),
    ]
    body = title
    for name, header, rows in sections:
        body += (f"## {name}\n\n" if fmt == "md" else f"{name}\n\n") + _table(fmt, header, rows) + "\n"
    files["report.md" if fmt == "md" else "report.txt"] = body

    written = []
    for name, text in files.items():
        path = dest / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
