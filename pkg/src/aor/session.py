"""The session: per-frame pipeline, command handling, and event-log replay.

One SessionEngine owns all mutable state and is the only writer.  Each frame
step and each user command appends events; ``SessionState.apply_event`` is
the inverse direction, folding a log back into state with no detector or
MLLM in the loop.  Runs are deterministic under the virtual clock: the same
scene, trace, and recorded replies produce a byte-identical event log, so
timing measurements go to a metrics sidecar instead of the log.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Optional

import numpy as np

from .actions import ACTION_IDS, SharePayload, ShoppingEntry, Widget, WidgetBoard, append_jsonl, make_widget
from .anchoring import DEFAULT_DEDUP_RADIUS, ObjectProxy, ProxyRegistry, ProxyState, localize
from .comparer import marked_proxy_ids, order_by_screen_x, run_compare
from .conversation import ActionFailed, ConversationStore, refined_label_from_summary
from .detection import (
    Detection,
    FilterPolicy,
    HttpDetector,
    ScriptedDetector,
    apply_policy,
)
from .errors import (
    AorError,
    BackendUnavailableError,
    EmptyCropError,
    StateTransitionError,
    UnknownProxyError,
    ValidationError,
)
from .events import EventLogWriter, SessionEvent, read_log, validate_log
from .geometry import WorldPoint, project
from .mllm import (
    AuditLog,
    LiveBackend,
    MllmClient,
    MockBackend,
    RecordingBackend,
    ReplayBackend,
    ReplayStore,
    Turn,
)
from .prompts import INFO_SUMMARY
from .scene import CropImage, Rect, SceneDirectory, crop, load_scene

COMMAND_KINDS = ("select", "dismiss", "dispatch", "compare")


class VirtualClock:
    """Deterministic session time; advances only when told to."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def advance(self, dt: float) -> float:
        if dt < 0:
            raise ValueError(f"clock must not move backwards (dt={dt})")
        self._now += dt
        return self._now


class WallClock:
    """Real elapsed time since construction; for interactive serving."""

    def __init__(self):
        self._start = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._start

    def advance(self, dt: float) -> float:
        return self.now()


def _percentile(values: list[float], q: float) -> float:
    """Nearest-rank percentile; q in (0, 100]."""
    if not values:
        raise ValueError("no values")
    ordered = sorted(values)
    rank = max(1, int(-(-q * len(ordered) // 100)))  # ceil without floats
    return ordered[rank - 1]


def summarize_metrics(core_ms: list[float]) -> dict:
    return {
        "frames": len(core_ms),
        "p50_ms": round(_percentile(core_ms, 50), 4),
        "p95_ms": round(_percentile(core_ms, 95), 4),
        "max_ms": round(max(core_ms), 4),
    }


@dataclass
class SessionConfig:
    scene: Path
    state_dir: Path
    detector: str = "scripted"  # "scripted" | "http:<url>"
    mllm: str = "mock"  # "mock" | "mock:fixed:<text>" | "replay:<path>" | "live:<url>"
    session_id: str = "session"
    policy: FilterPolicy = dataclass_field(default_factory=FilterPolicy)
    dedup_radius: float = DEFAULT_DEDUP_RADIUS
    cadence: float = 30.0  # frames per second of virtual time
    detect_every: int = 1
    stale_after: Optional[int] = None
    clock: str = "virtual"  # "virtual" | "wall"
    record: Optional[Path] = None  # wrap the MLLM backend and record replies here

    def __post_init__(self):
        self.scene = Path(self.scene)
        self.state_dir = Path(self.state_dir)
        if self.cadence <= 0:
            raise ValidationError(f"cadence must be positive, got {self.cadence}")
        if self.detect_every < 1:
            raise ValidationError(f"detect_every must be >= 1, got {self.detect_every}")
        if self.clock not in ("virtual", "wall"):
            raise ValidationError(f"clock must be virtual or wall, got {self.clock!r}")


def make_detector(spec: str, scene: SceneDirectory):
    if spec == "scripted":
        return ScriptedDetector(scene)
    if spec.startswith("http:") or spec.startswith("https:"):
        return HttpDetector(url=spec)
    raise ValidationError(f"unknown detector spec {spec!r}")


def make_mllm_backend(spec: str, record: Optional[Path] = None):
    if spec == "mock":
        backend = MockBackend(mode="echo")
    elif spec.startswith("mock:fixed:"):
        backend = MockBackend(mode="fixed", text=spec[len("mock:fixed:"):])
    elif spec == "mock:fail":
        backend = MockBackend(mode="fail")
    elif spec.startswith("replay:"):
        backend = ReplayBackend(ReplayStore.load(spec[len("replay:"):]))
    elif spec.startswith("live:"):
        backend = LiveBackend(url=spec[len("live:"):])
    else:
        raise ValidationError(f"unknown MLLM spec {spec!r}")
    if record is not None:
        store = ReplayStore.load(record) if Path(record).is_file() else ReplayStore()
        backend = RecordingBackend(inner=backend, store=store, path=Path(record))
    return backend


class SessionState:
    """Everything a viewer needs, reconstructible from the event log alone.

    ``apply_event`` folds one event; crop pixel data is not part of state
    equality, so folded proxies carry zeroed pixels of the recorded bbox
    shape.
    """

    def __init__(self, dedup_radius: float = DEFAULT_DEDUP_RADIUS, denylist: frozenset[str] = frozenset()):
        self.registry = ProxyRegistry(dedup_radius)
        self.conversations = ConversationStore(denylist)
        self.board = WidgetBoard()
        self.comparisons: list[dict] = []
        self.shopping: list[dict] = []
        self.shares: list[dict] = []
        self.frame = -1
        self.clock = 0.0
        self.seq = 0
        self.projections: dict[str, Optional[list[float]]] = {}
        self._comparison_serial = 0

    def next_comparison_id(self) -> str:
        self._comparison_serial += 1
        return f"cmp-{self._comparison_serial:03d}"

    # -- fold --------------------------------------------------------------

    def apply_event(self, ev: SessionEvent) -> None:
        self.seq = ev.seq
        self.clock = ev.ts
        p = ev.payload
        handler = getattr(self, f"_apply_{ev.kind.lower()}", None)
        if handler is None:
            raise ValidationError(f"no fold handler for event kind {ev.kind}")
        handler(p)

    def _apply_frameprocessed(self, p: dict) -> None:
        self.frame = p["frame"]
        self.projections = dict(p["projections"])

    def _apply_proxyspawned(self, p: dict) -> None:
        bbox = Rect.from_list(p["bbox"])
        placeholder = CropImage(
            frame_index=p["frame"],
            bbox=bbox,
            pixels=np.zeros((bbox.h, bbox.w, 3), dtype=np.uint8),
        )
        self.registry.restore(
            ObjectProxy(
                id=p["proxy"],
                label=p["label"],
                world_pos=WorldPoint(*p["world_pos"]),
                crop=placeholder,
                bbox_area=bbox.area,
                first_seen=p["frame"],
                last_seen=p["frame"],
            )
        )

    def _apply_proxyupdated(self, p: dict) -> None:
        if p.get("removed"):
            self.registry.remove(p["proxy"])
            return
        proxy = self.registry.get(p["proxy"])
        if "conversation" in p:
            cid, _ = self.conversations.ensure_session(proxy)
            proxy.conversation = cid
            return
        if "refined_label" in p:
            proxy.refined_label = p["refined_label"]
            return
        # re-sighting
        proxy.last_seen = max(proxy.last_seen, p["frame"])
        if p.get("crop_replaced"):
            bbox = Rect.from_list(p["bbox"])
            proxy.crop = CropImage(
                frame_index=p["frame"],
                bbox=bbox,
                pixels=np.zeros((bbox.h, bbox.w, 3), dtype=np.uint8),
            )
            proxy.bbox_area = bbox.area

    def _apply_statechanged(self, p: dict) -> None:
        self.registry.get(p["proxy"]).state = ProxyState.decode(p["to"])

    def _apply_mllmrequested(self, p: dict) -> None:
        cid = p["conversation"]
        if cid.startswith("conv-"):
            self.conversations.get(cid).append(
                Turn(role="user", text=p["prompt"], image_refs=tuple(p["images"]))
            )

    def _apply_mllmreplied(self, p: dict) -> None:
        cid = p["conversation"]
        if cid.startswith("conv-"):
            self.conversations.get(cid).append(Turn(role="assistant", text=p["text"]))

    def _apply_error(self, p: dict) -> None:
        cid = p.get("conversation", "")
        if cid.startswith("conv-"):
            self.conversations.get(cid).append(Turn(role="assistant", text="", error=p["reason"]))

    def _apply_comparercompleted(self, p: dict) -> None:
        self.comparisons.append(dict(p))
        serial = int(p["job"].split("-", 1)[1])
        self._comparison_serial = max(self._comparison_serial, serial)
        if p["indices"] is not None:
            self.registry.mark(list(p["marked"]))

    def _apply_widgetcreated(self, p: dict) -> None:
        self.board.add(
            Widget(
                id=p["widget"],
                proxy_id=p["proxy"],
                kind=p["kind"],
                created_at=p["created_at"],
                text=p["text"],
                visibility=p["visibility"],
                duration=p["duration"],
            )
        )

    def _apply_widgetfired(self, p: dict) -> None:
        self.board.mark_fired(p["widget"])

    def _apply_shared(self, p: dict) -> None:
        entry = {k: v for k, v in p.items() if k != "channel"}
        if p["channel"] == "shopping_list":
            self.shopping.append(entry)
        else:
            self.shares.append(entry)

    # -- snapshot ----------------------------------------------------------

    def snapshot(self) -> dict:
        proxies = []
        for proxy in sorted(self.registry.proxies(), key=lambda p: p.id):
            proxies.append(
                {
                    "id": proxy.id,
                    "label": proxy.label,
                    "refined_label": proxy.refined_label,
                    "state": proxy.state.encode(),
                    "marked": proxy.marked,
                    "conversation": proxy.conversation,
                    "world_pos": [proxy.world_pos[0], proxy.world_pos[1], proxy.world_pos[2]],
                    "first_seen": proxy.first_seen,
                    "last_seen": proxy.last_seen,
                    "bbox": proxy.crop.bbox.to_list(),
                    "crop": f"crops/{proxy.id}.png",
                }
            )
        conversations = []
        for conv in self.conversations.all():
            conversations.append(
                {
                    "id": conv.id,
                    "proxy": conv.proxy_id,
                    "turns": [
                        {
                            "role": t.role,
                            "text": t.text,
                            "images": list(t.image_refs),
                            "error": t.error,
                        }
                        for t in conv.turns
                    ],
                }
            )
        widgets = []
        for w in sorted(self.board.widgets(), key=lambda w: w.id):
            widgets.append(
                {
                    "id": w.id,
                    "proxy": w.proxy_id,
                    "kind": w.kind,
                    "created_at": w.created_at,
                    "text": w.text,
                    "visibility": w.visibility,
                    "duration": w.duration,
                    "fired": w.fired,
                }
            )
        return {
            "seq": self.seq,
            "clock": self.clock,
            "frame": self.frame,
            "proxies": proxies,
            "projections": dict(self.projections),
            "conversations": conversations,
            "widgets": widgets,
            "comparisons": [dict(c) for c in self.comparisons],
            "shopping": [dict(s) for s in self.shopping],
            "shares": [dict(s) for s in self.shares],
        }


def replay_log(path) -> SessionState:
    """Fold an event log into session state; backends never run.

    The log is validated first (sequence gaps, clock regressions, illegal
    transitions all reject).
    """
    events = read_log(path)
    validate_log(events)
    state = SessionState()
    for ev in events:
        state.apply_event(ev)
    return state


class SessionEngine:
    """Single-writer session runtime over one recorded scene."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.scene = load_scene(config.scene)
        self.detector = make_detector(config.detector, self.scene)
        config.state_dir.mkdir(parents=True, exist_ok=True)
        self.crops_dir = config.state_dir / "crops"
        self.crops_dir.mkdir(exist_ok=True)
        # appending sinks start fresh so a rerun into the same directory
        # leaves no stale records behind
        for sink in ("mllm-audit.jsonl", "metrics.jsonl", "shopping.jsonl", "outbox/shares.jsonl"):
            (config.state_dir / sink).unlink(missing_ok=True)
        audit = AuditLog(config.state_dir / "mllm-audit.jsonl")
        self.client = MllmClient(make_mllm_backend(config.mllm, config.record), audit)
        self.state = SessionState(config.dedup_radius, config.policy.denylist)
        self.clock = VirtualClock() if config.clock == "virtual" else WallClock()
        self.log_path = config.state_dir / f"session-{config.session_id}.events.jsonl"
        self._writer = EventLogWriter(self.log_path)
        self.events: list[SessionEvent] = []
        self.core_ms: list[float] = []
        self.metrics_path = config.state_dir / "metrics.jsonl"
        self.finished = False
        self._queue: deque[dict] = deque()
        self._lock = threading.RLock()

    # -- plumbing ----------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> SessionEvent:
        ev = SessionEvent(seq=self.state.seq + 1, ts=self.clock.now(), kind=kind, payload=payload)
        self.state.seq = ev.seq
        self.state.clock = ev.ts
        self.events.append(ev)
        self._writer.append(ev)
        return ev

    def snapshot(self) -> dict:
        with self._lock:
            return self.state.snapshot()

    def events_since(self, seq: int) -> list[SessionEvent]:
        with self._lock:
            return [ev for ev in self.events if ev.seq > seq]

    def frames_remaining(self) -> bool:
        return self.state.frame + 1 < self.scene.frame_count

    def close(self) -> None:
        self._writer.close()

    def _write_crop(self, proxy_id: str, image: CropImage) -> None:
        (self.crops_dir / f"{proxy_id}.png").write_bytes(image.png_bytes())

    # -- frame pipeline ----------------------------------------------------

    def step(self) -> list[SessionEvent]:
        """Process the next frame; returns the events it produced."""
        with self._lock:
            if self.finished:
                raise ValidationError("session already finished")
            if not self.frames_remaining():
                raise ValidationError("no frames remain")
            k = self.state.frame + 1
            color = self.scene.color(k)
            depth = self.scene.depth(k)
            pose = self.scene.pose(k)
            intr = self.scene.intrinsics
            self.clock.advance(1.0 / self.config.cadence)

            pending: list[tuple[str, dict]] = []
            detected = k % self.config.detect_every == 0
            dets: list[Detection] = []
            if detected:
                try:
                    dets = self.detector.detect(color, k)
                except BackendUnavailableError as e:
                    pending.append(("Error", {"reason": str(e), "stage": "detector", "frame": k}))
                    dets = []

            new_crops: list[tuple[str, CropImage]] = []
            dropped: list[dict] = []

            # timed region: policy, localization, dedup upsert; detector I/O,
            # frame decode, and PNG writes are excluded by design
            t0 = time.perf_counter()
            kept, suppressed = apply_policy(dets, self.config.policy)
            for det in kept:
                wp = localize(det, depth, intr, pose)
                if wp is None:
                    dropped.append({"label": det.label, "reason": "no-depth"})
                    continue
                try:
                    crop_img = crop(color, det.bbox)
                except EmptyCropError:
                    dropped.append({"label": det.label, "reason": "empty-crop"})
                    continue
                crop_img = CropImage(frame_index=k, bbox=crop_img.bbox, pixels=crop_img.pixels)
                pid, spawned = self.registry.upsert(det.label, wp, crop_img, k)
                proxy = self.registry.get(pid)
                if spawned:
                    pending.append(
                        (
                            "ProxySpawned",
                            {
                                "proxy": pid,
                                "label": det.label,
                                "world_pos": [wp.x, wp.y, wp.z],
                                "frame": k,
                                "bbox": crop_img.bbox.to_list(),
                                "crop": f"crops/{pid}.png",
                            },
                        )
                    )
                    new_crops.append((pid, crop_img))
                else:
                    replaced = proxy.crop is crop_img
                    update: dict = {"proxy": pid, "frame": k, "crop_replaced": replaced}
                    if replaced:
                        update["bbox"] = crop_img.bbox.to_list()
                        new_crops.append((pid, crop_img))
                    pending.append(("ProxyUpdated", update))

            if detected and self.config.stale_after is not None:
                for pid in self.registry.stale_ids(k, self.config.stale_after):
                    self.registry.remove(pid)
                    pending.append(
                        ("ProxyUpdated", {"proxy": pid, "removed": True, "reason": "stale", "frame": k})
                    )

            projections: dict[str, Optional[list[float]]] = {}
            for proxy in sorted(self.registry.proxies(), key=lambda p: p.id):
                pix = project(proxy.world_pos, pose, intr)
                projections[proxy.id] = None if pix is None else [pix.u, pix.v]
            core_ms = (time.perf_counter() - t0) * 1000.0

            for wid in self.state.board.tick(self.clock.now()):
                pending.append(("WidgetFired", {"widget": wid}))

            pending.append(
                (
                    "FrameProcessed",
                    {
                        "frame": k,
                        "detected": detected,
                        "kept": len(kept),
                        "suppressed": [
                            {"label": s.detection.label, "confidence": s.detection.confidence, "reason": s.reason}
                            for s in suppressed
                        ],
                        "dropped": dropped,
                        "clipped": [d.label for d in kept if d.clipped],
                        "projections": projections,
                    },
                )
            )

            for pid, image in new_crops:
                self._write_crop(pid, image)
            self.state.frame = k
            self.state.projections = projections

            out = [self._emit(kind, payload) for kind, payload in pending]
            frame_seq = out[-1].seq
            self.core_ms.append(core_ms)
            append_jsonl(self.metrics_path, {"frame": k, "seq": frame_seq, "core_ms": round(core_ms, 4)})
            return out

    @property
    def registry(self) -> ProxyRegistry:
        return self.state.registry

    # -- commands ----------------------------------------------------------

    def submit(self, command: dict) -> None:
        """Queue a command from another thread; the run loop applies it."""
        with self._lock:
            self._queue.append(command)

    def drain(self) -> list[SessionEvent]:
        out: list[SessionEvent] = []
        with self._lock:
            while self._queue:
                out.extend(self.handle(self._queue.popleft()))
        return out

    def handle(self, command: dict) -> list[SessionEvent]:
        """Apply one command; invalid input becomes an Error event, never an
        exception, so a bad viewer cannot take the session down."""
        with self._lock:
            before = self.state.seq
            if not isinstance(command, dict) or not isinstance(command.get("kind"), str):
                self._emit("Error", {"reason": "malformed command", "command": None})
                return self.events_since(before)
            kind = command["kind"]
            if self.finished:
                self._emit("Error", {"reason": "session finished", "command": kind})
                return self.events_since(before)
            if kind not in COMMAND_KINDS:
                self._emit("Error", {"reason": f"unknown command kind {kind!r}", "command": kind})
                return self.events_since(before)
            try:
                if kind == "select":
                    self._cmd_select(command)
                elif kind == "dismiss":
                    self._cmd_dismiss(command)
                elif kind == "dispatch":
                    self._cmd_dispatch(command)
                else:
                    self._cmd_compare(command)
            except AorError as e:
                self._emit("Error", {"reason": str(e), "command": kind})
            return self.events_since(before)

    def _cmd_select(self, command: dict) -> None:
        pid = str(command.get("proxy", ""))
        self.registry.select(pid)
        proxy = self.registry.get(pid)
        self._emit("StateChanged", {"proxy": pid, "from": "bubble", "to": "menu", "cause": "select"})
        if proxy.conversation is None:
            cid, _ = self.state.conversations.ensure_session(proxy)
            proxy.conversation = cid
            self._emit("ProxyUpdated", {"proxy": pid, "conversation": cid})

    def _cmd_dismiss(self, command: dict) -> None:
        pid = str(command.get("proxy", ""))
        self.registry.dismiss(pid)
        self._emit("StateChanged", {"proxy": pid, "from": "menu", "to": "bubble", "cause": "dismiss"})

    def _begin(self, pid: str, action: str) -> None:
        self.registry.begin_action(pid, action)
        self._emit(
            "StateChanged", {"proxy": pid, "from": "menu", "to": f"action:{action}", "cause": "dispatch"}
        )

    def _end(self, pid: str, action: str, cause: str) -> None:
        self.registry.end_action(pid)
        self._emit(
            "StateChanged", {"proxy": pid, "from": f"action:{action}", "to": "menu", "cause": cause}
        )

    def _cmd_dispatch(self, command: dict) -> None:
        pid = str(command.get("proxy", ""))
        action = str(command.get("action", ""))
        args = command.get("args") or {}
        proxy = self.registry.get(pid)
        if action not in ACTION_IDS:
            raise ValidationError(f"unknown action {action!r}")
        if action == "compare":
            raise ValidationError("compare runs through the compare command with explicit proxy ids")
        if not isinstance(args, dict):
            raise ValidationError("args must be an object")

        if action in ("info", "ask"):
            self._dispatch_query(proxy, action, args)
        elif action in ("note", "timer", "countdown"):
            self._dispatch_widget(proxy, action, args)
        elif action == "add_to_shopping_list":
            self._dispatch_shopping(proxy, action)
        else:
            self._dispatch_share(proxy, action, args)

    def _dispatch_query(self, proxy: ObjectProxy, action: str, args: dict) -> None:
        if action == "info":
            prompt = INFO_SUMMARY.render()
        else:
            prompt = str(args.get("text", ""))
            if not prompt.strip():
                raise ValidationError("ask requires non-empty text")
        store = self.state.conversations
        self._begin(proxy.id, action)
        if proxy.conversation is None:
            # defensive: select normally created the session already
            cid, _ = store.ensure_session(proxy)
            proxy.conversation = cid
            self._emit("ProxyUpdated", {"proxy": proxy.id, "conversation": cid})
        req = store.build_request(proxy, prompt)
        self._emit(
            "MllmRequested",
            {
                "conversation": proxy.conversation,
                "proxy": proxy.id,
                "purpose": action,
                "prompt": prompt,
                "labels": req.labels(),
                "images": [f"crops/{proxy.id}.png"],
                "fingerprint": req.fingerprint(),
            },
        )
        try:
            if action == "info":
                text = store.summarize(self.client, proxy)
            else:
                text = store.ask(self.client, proxy, prompt)
        except ActionFailed as e:
            self._emit(
                "Error",
                {
                    "reason": str(e),
                    "command": "dispatch",
                    "action": action,
                    "conversation": proxy.conversation,
                    "proxy": proxy.id,
                },
            )
            self._end(proxy.id, action, "error")
            return
        self._emit(
            "MllmReplied",
            {
                "conversation": proxy.conversation,
                "proxy": proxy.id,
                "purpose": action,
                "text": text,
                "backend": self.client.backend.name,
            },
        )
        if action == "info":
            refined = refined_label_from_summary(text)
            if refined and refined != proxy.refined_label:
                proxy.refined_label = refined
                self._emit("ProxyUpdated", {"proxy": proxy.id, "refined_label": refined})
        self._end(proxy.id, action, "complete")

    def _dispatch_widget(self, proxy: ObjectProxy, action: str, args: dict) -> None:
        widget = make_widget("w000", proxy.id, action, args, self.clock.now())
        self._begin(proxy.id, action)
        widget.id = self.state.board.next_id()
        self.state.board.add(widget)
        self._emit(
            "WidgetCreated",
            {
                "widget": widget.id,
                "proxy": proxy.id,
                "kind": widget.kind,
                "created_at": widget.created_at,
                "text": widget.text,
                "visibility": widget.visibility,
                "duration": widget.duration,
            },
        )
        self._end(proxy.id, action, "complete")

    def _dispatch_shopping(self, proxy: ObjectProxy, action: str) -> None:
        self._begin(proxy.id, action)
        entry = ShoppingEntry(
            proxy_id=proxy.id,
            label=proxy.label,
            refined_label=proxy.refined_label,
            crop_ref=f"crops/{proxy.id}.png",
            added_at=self.clock.now(),
        ).to_dict()
        self.state.shopping.append(entry)
        append_jsonl(self.config.state_dir / "shopping.jsonl", entry)
        self._emit("Shared", {"channel": "shopping_list", **entry})
        self._end(proxy.id, action, "complete")

    def _dispatch_share(self, proxy: ObjectProxy, action: str, args: dict) -> None:
        recipient = str(args.get("recipient", ""))
        message = str(args.get("message", ""))
        payload = SharePayload(
            recipient=recipient,
            message=message,
            proxy_snapshot={
                "id": proxy.id,
                "label": proxy.label,
                "refined_label": proxy.refined_label,
                "crop": f"crops/{proxy.id}.png",
            },
            shared_at=self.clock.now(),
        ).to_dict()
        self._begin(proxy.id, action)
        self.state.shares.append(payload)
        append_jsonl(self.config.state_dir / "outbox" / "shares.jsonl", payload)
        self._emit("Shared", {"channel": "contact", **payload})
        self._end(proxy.id, action, "complete")

    def _cmd_compare(self, command: dict) -> None:
        ids = command.get("proxies")
        prompt = command.get("prompt")
        if not isinstance(ids, list) or len(ids) < 2:
            raise ValidationError("compare requires at least 2 proxy ids")
        ids = [str(i) for i in ids]
        if len(set(ids)) != len(ids):
            raise ValidationError("compare proxy ids must be distinct")
        if not isinstance(prompt, str) or not prompt.strip():
            raise ValidationError("compare requires a non-empty prompt")
        proxies = [self.registry.get(pid) for pid in ids]

        anchor = ids[0]  # the proxy whose menu launched the comparison
        self._begin(anchor, "compare")
        screen_x = {
            pid: (self.state.projections.get(pid) or [float("inf")])[0] for pid in ids
        }
        ordered = order_by_screen_x(proxies, screen_x)
        job = run_compare(
            self.client, ordered, prompt, self.config.policy.denylist, self.state.next_comparison_id()
        )
        self._write_crop(job.id, job.stitched)
        for ex in job.exchanges:
            self._emit(
                "MllmRequested",
                {
                    "conversation": job.id,
                    "proxy": anchor,
                    "purpose": ex["purpose"],
                    "prompt": ex["prompt"],
                    "labels": ex["labels"],
                    "images": [f"crops/{job.id}.png"],
                    "fingerprint": ex["fingerprint"],
                },
            )
            if ex["error"] is not None:
                self._emit(
                    "Error",
                    {"reason": ex["error"], "command": "compare", "conversation": job.id, "proxy": anchor},
                )
            else:
                self._emit(
                    "MllmReplied",
                    {
                        "conversation": job.id,
                        "proxy": anchor,
                        "purpose": ex["purpose"],
                        "text": ex["text"],
                        "backend": self.client.backend.name,
                    },
                )
        marked = marked_proxy_ids(job)
        if job.indices is not None:
            self.registry.mark(marked)
        result = {
            "job": job.id,
            "proxies": job.proxy_ids,
            "prompt": prompt,
            "answer": job.answer,
            "indices": job.indices,
            "marked": marked,
            "error": job.error,
            "requests": job.requests,
        }
        self.state.comparisons.append(result)
        self._emit("ComparerCompleted", dict(result))
        self._end(anchor, "compare", "complete" if job.error is None else "error")

    # -- batch driving -----------------------------------------------------

    def run(self, trace: Optional[list[dict]] = None) -> None:
        """Process every frame, applying trace commands after their frame."""
        rows = list(trace or [])
        last = self.scene.frame_count - 1
        by_frame: dict[int, list[dict]] = {}
        for row in rows:
            frame = min(max(int(row["frame"]), 0), last)
            by_frame.setdefault(frame, []).append(row["command"])
        while self.frames_remaining():
            self.step()
            for cmd in by_frame.get(self.state.frame, ()):
                self.handle(cmd)
            self.drain()
        self.finished = True


def load_trace(path) -> list[dict]:
    """Trace file: JSONL rows ``{"frame": int, "command": {...}}``."""
    import json

    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            rows.append({"frame": int(row["frame"]), "command": dict(row["command"])})
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"{path}:{lineno}: bad trace row ({e})") from e
    return rows
