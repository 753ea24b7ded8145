"""Recommendation sets shared by both recommenders, and their JSON form."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .canonical import CanonicalValue, parse_canonical

__all__ = ["CacheImplHint", "Recommendation", "RecommendationSet", "SOURCES"]

SOURCES = ("APL", "MEM", "DEV")


@dataclass(frozen=True)
class CacheImplHint:
    scope: str = "global"
    size: str = "multi"
    getter: bool = False

    def __post_init__(self):
        if self.scope not in ("instance", "global"):
            raise ValueError(f"bad scope {self.scope!r}")
        if self.size not in ("single", "multi"):
            raise ValueError(f"bad size {self.size!r}")


Whitelist = frozenset[tuple[CanonicalValue, ...]]


@dataclass(frozen=True)
class Recommendation:
    method: str
    score: float
    whitelist: Whitelist | None = None
    hint: CacheImplHint | None = None
    subsumes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.whitelist is not None and not self.whitelist:
            raise ValueError(f"{self.method}: empty whitelist")
        if not math.isfinite(self.score):
            raise ValueError(f"{self.method}: non-finite score")


def _sorted_whitelist(wl: Whitelist) -> list[list[str]]:
    return sorted([v.render() for v in key] for key in wl)


@dataclass(frozen=True)
class RecommendationSet:
    source: str
    entries: tuple[Recommendation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        object.__setattr__(self, "entries", tuple(self.entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def methods(self) -> list[str]:
        return [e.method for e in self.entries]

    def get(self, method: str) -> Recommendation | None:
        for e in self.entries:
            if e.method == method:
                return e
        return None

    def restrict(self, methods: Iterable[str]) -> "RecommendationSet":
        keep = set(methods)
        return RecommendationSet(self.source, tuple(e for e in self.entries if e.method in keep))

    def to_dict(self) -> dict:
        out = []
        for e in self.entries:
            out.append(
                {
                    "method": e.method,
                    "score": e.score,
                    "whitelist": None if e.whitelist is None else _sorted_whitelist(e.whitelist),
                    "hint": None
                    if e.hint is None
                    else {"scope": e.hint.scope, "size": e.hint.size, "getter": e.hint.getter},
                    "subsumes": list(e.subsumes),
                }
            )
        return {"source": self.source, "recommendations": out}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "RecommendationSet":
        entries = []
        for e in doc.get("recommendations", []):
            wl = e.get("whitelist")
            hint = e.get("hint")
            entries.append(
                Recommendation(
                    method=e["method"],
                    score=float(e.get("score", 0.0)),
                    whitelist=None
                    if wl is None
                    else frozenset(tuple(parse_canonical(x) for x in key) for key in wl),
                    hint=None if hint is None else CacheImplHint(**hint),
                    subsumes=tuple(e.get("subsumes", ())),
                )
            )
        return cls(doc["source"], tuple(entries))

    @classmethod
    def load(cls, path) -> "RecommendationSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
