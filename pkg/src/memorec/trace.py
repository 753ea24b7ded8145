"""Call records, the line-delimited trace format, and nesting validation."""
from __future__ import annotations

import hashlib
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

from .canonical import CanonicalSyntaxError, CanonicalValue, parse_canonical

__all__ = [
    "CallRecord",
    "Trace",
    "TraceDigest",
    "TraceFormatError",
    "NestingError",
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "parse_trace_stream",
    "read_trace",
    "write_trace",
    "dump_trace",
    "save_trace",
    "trace_digest",
    "trace_fingerprint",
    "nest_calls",
]

FORMAT_NAME = "memorec-trace"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CallRecord:
    """One observed method invocation.

    ``start`` and ``end`` are nanoseconds since the trace epoch; ``depth`` is
    the call-nesting level inside the session (0 for request handlers).
    """

    session: str
    method: str
    inputs: tuple[CanonicalValue, ...]
    output: CanonicalValue
    start: int
    end: int
    depth: int = 0
    line: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.inputs, tuple):
            object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.end < self.start:
            raise ValueError(f"{self.method}: end {self.end} precedes start {self.start}")
        if self.depth < 0:
            raise ValueError(f"{self.method}: negative depth {self.depth}")

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def input_key(self) -> tuple[str, ...]:
        return tuple(v.render() for v in self.inputs)

    def to_json(self) -> str:
        obj = {
            "session": self.session,
            "method": self.method,
            "inputs": [v.render() for v in self.inputs],
            "output": self.output.render(),
            "start_ns": self.start,
            "end_ns": self.end,
            "depth": self.depth,
        }
        return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


class TraceFormatError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NestingError(ValueError):
    def __init__(self, record: CallRecord, reason: str):
        where = f" (line {record.line})" if record.line is not None else ""
        super().__init__(
            f"{record.method} in session {record.session!r} at {record.start}{where}: {reason}"
        )
        self.record = record


@dataclass(frozen=True)
class Trace:
    records: tuple[CallRecord, ...]
    epoch_ns: int = 0
    skipped: tuple[TraceFormatError, ...] = ()

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


_FIELDS = ("session", "method", "inputs", "output", "start_ns", "end_ns", "depth")


def _parse_record(obj, lineno: int) -> CallRecord:
    if not isinstance(obj, dict):
        raise TraceFormatError(lineno, "record is not a JSON object")
    for name in _FIELDS:
        if name not in obj:
            raise TraceFormatError(lineno, f"missing field {name!r}")
    if not isinstance(obj["session"], str) or not isinstance(obj["method"], str):
        raise TraceFormatError(lineno, "session and method must be strings")
    inputs = obj["inputs"]
    if not isinstance(inputs, list) or not all(isinstance(x, str) for x in inputs):
        raise TraceFormatError(lineno, "inputs must be a list of canonical renderings")
    if not isinstance(obj["output"], str):
        raise TraceFormatError(lineno, "output must be a canonical rendering")
    for name in ("start_ns", "end_ns", "depth"):
        if not _is_int(obj[name]):
            raise TraceFormatError(lineno, f"{name} must be an integer")
    try:
        return CallRecord(
            session=obj["session"],
            method=obj["method"],
            inputs=tuple(parse_canonical(x) for x in inputs),
            output=parse_canonical(obj["output"]),
            start=obj["start_ns"],
            end=obj["end_ns"],
            depth=obj["depth"],
            line=lineno,
        )
    except (CanonicalSyntaxError, ValueError) as exc:
        raise TraceFormatError(lineno, str(exc)) from None


def _lines(stream) -> Iterable[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = stream.decode("utf-8")
    if isinstance(stream, str):
        return io.StringIO(stream)
    if hasattr(stream, "read"):
        data = stream.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    return stream


def parse_trace_stream(stream, *, on_error: str = "abort") -> Trace:
    """Parse a trace from bytes, text, a file object, or an iterable of lines.

    With ``on_error="skip"`` malformed record lines are collected in
    :attr:`Trace.skipped` instead of raising.  A bad header always aborts.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError("on_error must be 'abort' or 'skip'")
    records: list[CallRecord] = []
    skipped: list[TraceFormatError] = []
    epoch = 0
    header_seen = False
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            err = TraceFormatError(lineno, f"invalid JSON ({exc.msg})")
            if not header_seen or on_error == "abort":
                raise err from None
            skipped.append(err)
            continue
        if not header_seen:
            if (
                not isinstance(obj, dict)
                or obj.get("format") != FORMAT_NAME
                or obj.get("version") != FORMAT_VERSION
                or not _is_int(obj.get("epoch_ns"))
            ):
                raise TraceFormatError(lineno, f"expected {FORMAT_NAME} v{FORMAT_VERSION} header")
            epoch = obj["epoch_ns"]
            header_seen = True
            continue
        try:
            records.append(_parse_record(obj, lineno))
        except TraceFormatError as err:
            if on_error == "abort":
                raise
            skipped.append(err)
    return Trace(tuple(records), epoch, tuple(skipped))


def read_trace(path, *, on_error: str = "abort") -> Trace:
    with open(path, "rb") as fh:
        return parse_trace_stream(fh, on_error=on_error)


def write_trace(records: Iterable[CallRecord], out: IO[str], epoch_ns: int = 0) -> None:
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "epoch_ns": epoch_ns}
    out.write(json.dumps(header, separators=(",", ":")) + "\n")
    for r in records:
        out.write(r.to_json() + "\n")


def dump_trace(records: Iterable[CallRecord], epoch_ns: int = 0) -> str:
    buf = io.StringIO()
    write_trace(records, buf, epoch_ns)
    return buf.getvalue()


def save_trace(records: Iterable[CallRecord], path, epoch_ns: int = 0) -> None:
    Path(path).write_text(dump_trace(records, epoch_ns), encoding="utf-8")


def trace_fingerprint(records: Iterable[CallRecord]) -> str:
    h = hashlib.sha256()
    for r in records:
        h.update(r.to_json().encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class TraceDigest:
    records: int
    methods: int
    sessions: int
    span: tuple[int, int] | None


def trace_digest(records: Iterable[CallRecord]) -> TraceDigest:
    n = 0
    methods, sessions = set(), set()
    lo = hi = None
    for r in records:
        n += 1
        methods.add(r.method)
        sessions.add(r.session)
        lo = r.start if lo is None else min(lo, r.start)
        hi = r.end if hi is None else max(hi, r.end)
    return TraceDigest(n, len(methods), len(sessions), None if n == 0 else (lo, hi))


def nest_calls(records: Sequence[CallRecord]) -> list[int | None]:
    """Return each record's direct parent index, validating the nesting.

    Within a session records are visited in (start, depth) order.  A record
    at depth d+1 must lie inside the innermost open depth-d record, and
    consecutive siblings may touch but not overlap.
    """
    by_session: dict[str, list[int]] = defaultdict(list)
    for i, r in enumerate(records):
        by_session[r.session].append(i)
    parents: list[int | None] = [None] * len(records)
    for idxs in by_session.values():
        idxs.sort(key=lambda i: (records[i].start, records[i].depth, -records[i].end, i))
        stack: list[int] = []
        for i in idxs:
            r = records[i]
            if r.depth > len(stack):
                raise NestingError(r, f"depth {r.depth} but only {len(stack)} enclosing calls")
            sibling = None
            while len(stack) > r.depth:
                sibling = stack.pop()
            if sibling is not None and records[sibling].end > r.start:
                raise NestingError(r, f"overlaps sibling {records[sibling].method}")
            if stack:
                p = records[stack[-1]]
                if not (p.start <= r.start and r.end <= p.end):
                    raise NestingError(r, f"interval not contained in parent {p.method}")
                parents[i] = stack[-1]
            stack.append(i)
    return parents
