"""Trace events and JSON-lines serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List, Union

from .errors import InvalidInputError
from .schemas import TRACE_KINDS


@dataclass(frozen=True)
class TraceEvent:
    ts: int
    kind: str
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ts": self.ts, "kind": self.kind, "data": self.data}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        return cls(d["ts"], d["kind"], d.get("data", {}))


class Trace:
    """Append-only event log written by the controller."""

    def __init__(self):
        self.events: List[TraceEvent] = []

    def emit(self, ts: int, kind: str, /, **data) -> TraceEvent:
        if kind not in TRACE_KINDS:
            raise ValueError(f"unknown trace kind {kind!r}")
        ev = TraceEvent(int(ts), kind, data)
        self.events.append(ev)
        return ev

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def of_kind(self, *kinds: str) -> List[TraceEvent]:
        return [e for e in self.events if e.kind in kinds]


def dumps_jsonl(records: Iterable) -> str:
    lines = []
    for r in records:
        if hasattr(r, "to_json"):
            lines.append(r.to_json())
        else:
            lines.append(json.dumps(r, separators=(",", ":"), allow_nan=False))
    return "".join(line + "\n" for line in lines)


def write_jsonl(path: Union[str, Path], records: Iterable) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_jsonl(records))


def read_trace(path: Union[str, Path]) -> List[TraceEvent]:
    """Load a trace file; raises InvalidInputError on malformed lines."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                events.append(TraceEvent(int(d["ts"]), str(d["kind"]), dict(d["data"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise InvalidInputError(f"{path}:{lineno}: malformed trace line ({e})") from None
    return events
