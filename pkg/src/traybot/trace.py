"""JSONL event traces and golden-trace comparison.

Each line is one JSON object with keys in a fixed order: ``tick``, ``clock``,
``kind`` and then the kind-specific payload in emission order. Floats are
written with exactly six decimals (Python's correctly rounded formatting,
ties to even) so identical runs give identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

EVENT_KINDS = (
    "StateChange",
    "Command",
    "Pick",
    "Release",
    "BakeDone",
    "DroppedTray",
    "Fault",
    "EnergySample",
)


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    clock: float
    kind: str
    payload: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"tick": self.tick, "clock": self.clock, "kind": self.kind, **self.payload}


@dataclass(frozen=True)
class Divergence:
    tick: int
    field: str


def _fmt_float(x: float) -> str:
    text = f"{x:.6f}"
    if text.startswith("-") and float(text) == 0:
        text = text[1:]
    return text


def _encode(value) -> str:
    if value is None or isinstance(value, (bool, str)):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, dict):
        items = ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__} in a trace")


def encode_event(event: TraceEvent) -> str:
    return _encode(event.as_dict())


def dumps_trace(events: Iterable[TraceEvent]) -> str:
    return "".join(encode_event(e) + "\n" for e in events)


def write_trace(events: Iterable[TraceEvent], path: str | Path) -> None:
    Path(path).write_bytes(dumps_trace(events).encode("utf-8"))


def loads_trace(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def read_trace(path: str | Path) -> list[dict]:
    return loads_trace(Path(path).read_text(encoding="utf-8"))


def _flatten(obj: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def _normalize(event) -> dict:
    if isinstance(event, TraceEvent):
        # go through the wire format so floats compare at trace precision
        return json.loads(encode_event(event))
    return event


def compare_traces(actual: Sequence, golden: Sequence) -> Divergence | None:
    """Return None when the traces match, else the earliest differing field.

    Events may be TraceEvents or the dicts read back from a JSONL file.
    """
    actual = [_normalize(e) for e in actual]
    golden = [_normalize(e) for e in golden]
    for a, g in zip(actual, golden):
        fa, fg = _flatten(a), _flatten(g)
        tick = g.get("tick", a.get("tick", 0))
        for key in list(fg) + [k for k in fa if k not in fg]:
            if key not in fa or key not in fg or fa[key] != fg[key]:
                return Divergence(tick, key)
    if len(actual) != len(golden):
        shorter = actual if len(actual) < len(golden) else golden
        return Divergence(shorter[-1]["tick"] if shorter else 0, "length")
    return None
