"""The context-menu action taxonomy and the anchored widgets.

Four fixed categories holding a fixed action set; nothing registers new
actions at runtime.  Widgets live on proxies and advance against the
injected session clock: timers count up from creation, countdowns count
down and fire exactly once on reaching zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ClockError, ValidationError

# (category, action) pairs; order is the menu order
ACTION_CATALOG: tuple[tuple[str, str], ...] = (
    ("information", "info"),
    ("information", "ask"),
    ("compare", "compare"),
    ("share", "send_to_contact"),
    ("share", "add_to_shopping_list"),
    ("anchor", "note"),
    ("anchor", "timer"),
    ("anchor", "countdown"),
)

CATEGORIES: tuple[str, ...] = ("information", "compare", "share", "anchor")
ACTION_IDS: tuple[str, ...] = tuple(action for _, action in ACTION_CATALOG)

VISIBILITY_PRIVATE = "private"
VISIBILITY_PUBLIC = "public"


def parse_visibility(value: str) -> str:
    """"private", "public", or "group:<name>"."""
    if value in (VISIBILITY_PRIVATE, VISIBILITY_PUBLIC):
        return value
    if value.startswith("group:") and len(value) > len("group:"):
        return value
    raise ValidationError(f"visibility must be private, public, or group:<name>, got {value!r}")


@dataclass
class Widget:
    """A note, timer, or countdown anchored to a proxy."""

    id: str
    proxy_id: str
    kind: str  # "note" | "timer" | "countdown"
    created_at: float
    text: str = ""
    visibility: str = VISIBILITY_PRIVATE
    duration: float = 0.0
    fired: bool = False

    def elapsed(self, now: float) -> float:
        return max(0.0, now - self.created_at)

    def remaining(self, now: float) -> float:
        return max(0.0, self.duration - self.elapsed(now))

    def expiry(self) -> float:
        return self.created_at + self.duration


def make_widget(widget_id: str, proxy_id: str, action: str, args: dict, now: float) -> Widget:
    """Validate action args and build the widget for an anchor action."""
    if action == "note":
        text = str(args.get("text", ""))
        if not text.strip():
            raise ValidationError("note text must be non-empty")
        visibility = parse_visibility(str(args.get("visibility", VISIBILITY_PRIVATE)))
        return Widget(id=widget_id, proxy_id=proxy_id, kind="note", created_at=now, text=text, visibility=visibility)
    if action == "timer":
        return Widget(id=widget_id, proxy_id=proxy_id, kind="timer", created_at=now)
    if action == "countdown":
        try:
            duration = float(args["duration"])
        except (KeyError, TypeError, ValueError):
            raise ValidationError("countdown requires a numeric duration in seconds") from None
        if duration <= 0:
            raise ValidationError(f"countdown duration must be positive, got {duration}")
        return Widget(id=widget_id, proxy_id=proxy_id, kind="countdown", created_at=now, duration=duration)
    raise ValidationError(f"{action!r} is not an anchor action")


class WidgetBoard:
    """All widgets of a session plus the tick that advances them."""

    def __init__(self):
        self._widgets: dict[str, Widget] = {}
        self._next_serial = 1
        self._last_tick: Optional[float] = None

    def __len__(self) -> int:
        return len(self._widgets)

    def widgets(self) -> list[Widget]:
        return list(self._widgets.values())

    def get(self, widget_id: str) -> Widget:
        return self._widgets[widget_id]

    def next_id(self) -> str:
        wid = f"w{self._next_serial:03d}"
        self._next_serial += 1
        return wid

    def add(self, widget: Widget) -> None:
        self._widgets[widget.id] = widget
        serial = int(widget.id.lstrip("w"))
        self._next_serial = max(self._next_serial, serial + 1)

    def tick(self, now: float) -> list[str]:
        """Advance to ``now``; ids of countdowns that fired, in id order.

        A countdown fires exactly once, on the first tick at or past its
        expiry.  The clock must not regress.
        """
        if self._last_tick is not None and now < self._last_tick:
            raise ClockError(f"clock moved backwards: {now} < {self._last_tick}")
        self._last_tick = now
        fired: list[str] = []
        for wid in sorted(self._widgets):
            w = self._widgets[wid]
            if w.kind == "countdown" and not w.fired and now >= w.expiry():
                w.fired = True
                fired.append(wid)
        return fired

    def mark_fired(self, widget_id: str) -> None:
        self._widgets[widget_id].fired = True


@dataclass(frozen=True)
class ShoppingEntry:
    proxy_id: str
    label: str
    refined_label: Optional[str]
    crop_ref: str
    added_at: float

    def to_dict(self) -> dict:
        return {
            "proxy": self.proxy_id,
            "label": self.label,
            "refined_label": self.refined_label,
            "crop": self.crop_ref,
            "added_at": self.added_at,
        }


@dataclass(frozen=True)
class SharePayload:
    recipient: str
    message: str
    proxy_snapshot: dict
    shared_at: float

    def __post_init__(self):
        if not self.recipient:
            raise ValidationError("share recipient must be non-empty")

    def to_dict(self) -> dict:
        return {
            "recipient": self.recipient,
            "message": self.message,
            "proxy": self.proxy_snapshot,
            "shared_at": self.shared_at,
        }


def append_jsonl(path: Path, record: dict) -> None:
    """Append one record to a JSONL sink; parents created on demand."""
    import json

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False))
        f.write("\n")
