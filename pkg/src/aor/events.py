"""Append-only session events: envelope, JSONL log, and the log validator.

Every pipeline step and user command lands here as one or more events with a
gapless, strictly increasing sequence number and a virtual timestamp.  The
log alone is sufficient to rebuild session state (see ``session.replay_log``),
which makes the whole pipeline auditable and bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import LogValidationError

KINDS = (
    "FrameProcessed",
    "ProxySpawned",
    "ProxyUpdated",
    "StateChanged",
    "MllmRequested",
    "MllmReplied",
    "ComparerCompleted",
    "WidgetCreated",
    "WidgetFired",
    "Shared",
    "Error",
)

_LEGAL_TRANSITIONS = {
    ("bubble", "menu"),  # select
    ("menu", "bubble"),  # dismiss
}


def _transition_legal(src: str, dst: str) -> bool:
    if (src, dst) in _LEGAL_TRANSITIONS:
        return True
    if src == "menu" and dst.startswith("action:"):
        return True
    if src.startswith("action:") and dst == "menu":
        return True
    return False


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    ts: float
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.seq < 1:
            raise ValueError(f"seq must be >= 1, got {self.seq}")

    def to_json(self) -> str:
        doc = {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @staticmethod
    def from_json(line: str) -> "SessionEvent":
        doc = json.loads(line)
        return SessionEvent(seq=doc["seq"], ts=doc["ts"], kind=doc["kind"], payload=doc["payload"])


class EventLogWriter:
    """Appends events to a JSONL file, flushing per event."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = self.path.open("w", encoding="utf-8")

    def append(self, event: SessionEvent) -> None:
        self._file.write(event.to_json())
        self._file.write("\n")
        self._file.flush()

    def close(self) -> None:
        self._file.close()


def read_log(path) -> list[SessionEvent]:
    events = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(SessionEvent.from_json(line))
        except (ValueError, KeyError) as e:
            raise LogValidationError(f"{path}:{lineno}: malformed event ({e})") from e
    return events


def validate_log(events: Iterable[SessionEvent]) -> None:
    """Reject seq gaps, timestamp regressions, and illegal state transitions.

    Raises :class:`LogValidationError` naming the first bad sequence number.
    """
    expected_seq = 1
    last_ts: Optional[float] = None
    proxy_states: dict[str, str] = {}
    widgets: set[str] = set()

    for ev in events:
        if ev.seq != expected_seq:
            raise LogValidationError(f"seq {ev.seq}: expected {expected_seq} (gap or reorder)")
        expected_seq += 1
        if last_ts is not None and ev.ts < last_ts:
            raise LogValidationError(f"seq {ev.seq}: timestamp {ev.ts} < {last_ts}")
        last_ts = ev.ts

        if ev.kind == "ProxySpawned":
            pid = ev.payload["proxy"]
            if pid in proxy_states:
                raise LogValidationError(f"seq {ev.seq}: proxy {pid} spawned twice")
            proxy_states[pid] = "bubble"
        elif ev.kind == "StateChanged":
            pid = ev.payload["proxy"]
            src, dst = ev.payload["from"], ev.payload["to"]
            current = proxy_states.get(pid)
            if current is None:
                raise LogValidationError(f"seq {ev.seq}: state change for unknown proxy {pid}")
            if current != src:
                raise LogValidationError(f"seq {ev.seq}: proxy {pid} is {current}, event claims {src}")
            if not _transition_legal(src, dst):
                raise LogValidationError(f"seq {ev.seq}: illegal transition {src} -> {dst}")
            proxy_states[pid] = dst
        elif ev.kind == "WidgetCreated":
            widgets.add(ev.payload["widget"])
        elif ev.kind == "WidgetFired":
            wid = ev.payload["widget"]
            if wid not in widgets:
                raise LogValidationError(f"seq {ev.seq}: fired unknown widget {wid}")
