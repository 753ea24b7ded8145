"""Canonical, comparable renderings of structured method inputs and outputs.

A value graph (Python objects, dicts, lists, or explicitly tagged
:class:`RawObject` nodes) is flattened into a finite tree of four node
kinds: scalars, composites, cycle markers and truncated leaves.  Two
canonical values are equal exactly when their text renderings are equal.

Rendering grammar::

    value     := composite | cycle | pruned | truncated | scalar
    composite := "{" [ field ("," field)* ] "}"
    field     := text ":" value
    cycle     := "@ref:/" [ text ("/" text)* ]
    pruned    := "@..."
    truncated := "~" text
    scalar    := text

``text`` escapes each of ``\\ { } , : @ ~ /`` with a backslash.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable

__all__ = [
    "CanonicalValue",
    "Scalar",
    "Composite",
    "CycleRef",
    "Truncated",
    "Pruned",
    "PRUNED",
    "RawObject",
    "TruncationPolicy",
    "canonicalize",
    "parse_canonical",
    "as_value_tree",
    "prune",
    "CanonicalSyntaxError",
]

_SPECIAL = frozenset("\\{},:@~/")


def _escape(text: str) -> str:
    if not any(ch in _SPECIAL for ch in text):
        return text
    return "".join("\\" + ch if ch in _SPECIAL else ch for ch in text)


class CanonicalValue:
    """Base class of canonical tree nodes; equality is rendering equality."""

    __slots__ = ("_text",)
    kind = "value"

    def render(self) -> str:
        text = self._text
        if text is None:
            text = self._text = self._render()
        return text

    def _render(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def depth(self) -> int:
        return 1

    def __eq__(self, other):
        if not isinstance(other, CanonicalValue):
            return NotImplemented
        return self.render() == other.render()

    def __hash__(self):
        return hash(self.render())

    def __lt__(self, other):
        if not isinstance(other, CanonicalValue):
            return NotImplemented
        return self.render() < other.render()

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"{type(self).__name__}({self.render()!r})"


class Scalar(CanonicalValue):
    __slots__ = ("text",)
    kind = "scalar"

    def __init__(self, text: str):
        self._text = None
        self.text = text

    def _render(self):
        return _escape(self.text)


class Truncated(CanonicalValue):
    """Opaque leaf standing in for an object outside the application packages."""

    __slots__ = ("text",)
    kind = "truncated"

    def __init__(self, text: str):
        self._text = None
        self.text = text

    def _render(self):
        return "~" + _escape(self.text)


class CycleRef(CanonicalValue):
    """Back-reference to a strict ancestor, addressed by field path from the root."""

    __slots__ = ("path",)
    kind = "cycle"

    def __init__(self, path: Iterable[str] = ()):
        self._text = None
        self.path = tuple(path)

    def _render(self):
        return "@ref:/" + "/".join(_escape(p) for p in self.path)


class Pruned(CanonicalValue):
    """Placeholder for a subtree cut off by depth-limited comparison."""

    __slots__ = ()
    kind = "pruned"

    def __init__(self):
        self._text = "@..."


PRUNED = Pruned()


class Composite(CanonicalValue):
    __slots__ = ("fields", "_depth")
    kind = "composite"

    def __init__(self, fields: Iterable[tuple[str, CanonicalValue]] = ()):
        self._text = None
        self.fields = tuple((str(k), v) for k, v in fields)
        self._depth = 1 + max((v.depth for _, v in self.fields), default=0)

    @property
    def depth(self) -> int:
        return self._depth

    def _render(self):
        return "{" + ",".join(_escape(k) + ":" + v.render() for k, v in self.fields) + "}"


# --------------------------------------------------------------------------
# parsing


class CanonicalSyntaxError(ValueError):
    pass


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0

    def fail(self, msg):
        raise CanonicalSyntaxError(f"{msg} at offset {self.i} in {self.s!r}")

    def text(self, stops: str) -> str:
        s, out = self.s, []
        while self.i < len(s):
            ch = s[self.i]
            if ch == "\\":
                if self.i + 1 >= len(s):
                    self.fail("dangling escape")
                out.append(s[self.i + 1])
                self.i += 2
            elif ch in stops:
                break
            elif ch in "{}:@~":
                self.fail(f"unescaped {ch!r}")
            else:
                out.append(ch)
                self.i += 1
        return "".join(out)

    def value(self, stops: str) -> CanonicalValue:
        s = self.s
        if s.startswith("{", self.i):
            self.i += 1
            fields = []
            if s.startswith("}", self.i):
                self.i += 1
                return Composite(())
            while True:
                name = self.text(":,}/")
                if not s.startswith(":", self.i):
                    self.fail("expected ':'")
                self.i += 1
                fields.append((name, self.value(",}")))
                if s.startswith(",", self.i):
                    self.i += 1
                elif s.startswith("}", self.i):
                    self.i += 1
                    return Composite(fields)
                else:
                    self.fail("expected ',' or '}'")
        if s.startswith("@ref:/", self.i):
            self.i += 6
            path = []
            if self.i < len(s) and s[self.i] not in stops:
                while True:
                    path.append(self.text(stops + "/:"))
                    if s.startswith("/", self.i):
                        self.i += 1
                    else:
                        break
            return CycleRef(path)
        if s.startswith("@...", self.i):
            self.i += 4
            return PRUNED
        if s.startswith("~", self.i):
            self.i += 1
            return Truncated(self.text(stops + "/:"))
        return Scalar(self.text(stops + "/:"))


@lru_cache(maxsize=65536)
def parse_canonical(text: str) -> CanonicalValue:
    """Parse a rendering produced by :meth:`CanonicalValue.render`."""
    p = _Parser(text)
    v = p.value("")
    if p.i != len(text):
        p.fail("trailing characters")
    return v


# --------------------------------------------------------------------------
# canonicalization


@dataclass(eq=False)
class RawObject:
    """A typed node of a value graph carrying an explicit package tag.

    Objects whose package belongs to the application are expanded field by
    field; anything else collapses to ``text`` (or the type name).
    """

    package: str
    fields: dict[str, Any] = field(default_factory=dict)
    text: str | None = None
    type_name: str = "object"


def _norm_prefix(p: str) -> str:
    return p.strip().strip(".")


def _matches(package: str, prefix: str) -> bool:
    return package == prefix or package.startswith(prefix + ".")


@dataclass(frozen=True)
class TruncationPolicy:
    """Package prefixes deciding which objects are explored recursively."""

    application: tuple[str, ...] = ()
    internal: tuple[str, ...] = ("builtins", "java", "javax")

    def __post_init__(self):
        app = tuple(_norm_prefix(p) for p in self.application if _norm_prefix(p))
        internal = tuple(_norm_prefix(p) for p in self.internal if _norm_prefix(p))
        for a in app:
            for b in internal:
                if _matches(a, b) or _matches(b, a):
                    raise ValueError(f"application prefix {a!r} overlaps internal prefix {b!r}")
        object.__setattr__(self, "application", app)
        object.__setattr__(self, "internal", internal)

    def is_application(self, package: str | None) -> bool:
        if not package:
            return False
        return any(_matches(package, p) for p in self.application)


def _scalar_text(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _object_fields(obj) -> list[tuple[str, Any]] | None:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return [(f.name, getattr(obj, f.name)) for f in dataclasses.fields(obj)]
    if hasattr(obj, "__dict__"):
        return list(vars(obj).items())
    slots = getattr(type(obj), "__slots__", None)
    if slots is not None:
        if isinstance(slots, str):
            slots = (slots,)
        return [(s, getattr(obj, s)) for s in slots if hasattr(obj, s)]
    return None


def canonicalize(value: Any, policy: TruncationPolicy | None = None) -> CanonicalValue:
    """Flatten a possibly cyclic value graph into a :class:`CanonicalValue`.

    Field order is the source's declaration (insertion) order.  Edges back
    to an object already on the current path become :class:`CycleRef`
    markers; shared but acyclic references are expanded at each use.
    """
    policy = policy or TruncationPolicy()
    ancestors: dict[int, tuple[str, ...]] = {}

    def visit(v, path):
        if isinstance(v, CanonicalValue):
            return v
        if v is None or isinstance(v, (str, int, float, bool)):
            return Scalar(_scalar_text(v))
        if isinstance(v, (dict, list, tuple, RawObject)) or policy.is_application(
            getattr(type(v), "__module__", None)
        ):
            key = id(v)
            if key in ancestors:
                return CycleRef(ancestors[key])
            if isinstance(v, dict):
                items = [(str(k), x) for k, x in v.items()]
            elif isinstance(v, (list, tuple)):
                items = [(str(i), x) for i, x in enumerate(v)]
            elif isinstance(v, RawObject):
                if not policy.is_application(v.package):
                    return Truncated(v.text if v.text is not None else v.type_name)
                items = list(v.fields.items())
            else:
                items = _object_fields(v)
                if items is None:
                    return Truncated(str(v))
            ancestors[key] = path
            try:
                return Composite((k, visit(x, path + (k,))) for k, x in items)
            finally:
                del ancestors[key]
        return Truncated(str(v))

    return visit(value, ())


def as_value_tree(value: CanonicalValue) -> Any:
    """Rebuild a raw value graph (with real cycles) from a canonical tree."""

    def build(v, ancestors):
        if isinstance(v, Scalar):
            return v.text
        if isinstance(v, Truncated):
            return RawObject(package="", text=v.text)
        if isinstance(v, CycleRef):
            return ancestors[len(v.path)]
        if isinstance(v, Composite):
            node: dict[str, Any] = {}
            chain = ancestors + [node]
            for k, child in v.fields:
                node[k] = build(child, chain)
            return node
        raise TypeError(f"cannot rebuild {v!r}")

    return build(value, [])


def prune(value: CanonicalValue, depth: int) -> CanonicalValue:
    """Cut the tree below ``depth`` levels; removed subtrees become :data:`PRUNED`.

    The root is level 1, so ``prune(v, 1)`` keeps a composite's field names
    but none of its children.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not isinstance(value, Composite) or value.depth <= depth:
        return value
    if depth == 1:
        return Composite((k, PRUNED) for k, _ in value.fields)
    return Composite((k, prune(c, depth - 1)) for k, c in value.fields)
