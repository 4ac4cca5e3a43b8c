"""Multimodal LLM transport: live HTTP, scripted mock, and record/replay.

Every outbound request passes the privacy gate at construction time: a
request carrying a denylisted image label cannot be built.  Every query is
audited to a redacted JSONL log (fingerprints, labels, byte counts, latency;
never prompt text or image bytes).

Wire format of the live backend (an adapter maps it onto whichever hosted
model the operator configures):

    POST <url>  {"conversation_id", "prompt", "history": [{"role", "text"}],
                 "images": ["<base64 PNG>", ...]}
    -> 200      {"text": "..."}
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol

import httpx

from .errors import MllmTimeoutError, PrivacyViolationError, ReplayMissError
from .scene import CropImage

DEFAULT_TIMEOUT_S = 10.0


@dataclass(frozen=True)
class Turn:
    role: str  # "user" | "assistant"
    text: str
    image_refs: tuple[str, ...] = ()
    error: Optional[str] = None

    def __post_init__(self):
        if self.role not in ("user", "assistant"):
            raise ValueError(f"turn role must be user or assistant, got {self.role!r}")


@dataclass(frozen=True)
class ImageAttachment:
    """A crop plus the detector labels of the objects it shows."""

    crop: CropImage
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("attachment must carry at least one source label")


@dataclass(frozen=True)
class MllmRequest:
    """An outbound query; construction enforces the privacy policy.

    ``denylist`` is the active filter policy's denylist; any attachment whose
    source labels intersect it makes the request unconstructible.
    """

    conversation_id: str
    prompt: str
    turns: tuple[Turn, ...]
    images: tuple[ImageAttachment, ...]
    denylist: frozenset[str]

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        for att in self.images:
            blocked = set(att.labels) & self.denylist
            if blocked:
                raise PrivacyViolationError(
                    f"attachment labeled {sorted(blocked)} may not be sent to the MLLM"
                )

    def fingerprint(self) -> str:
        """Stable hash over prompt, turn texts, and image content hashes.

        Order-sensitive over turns and images; image hashes cover raw pixels,
        not PNG bytes, so the value is identical across platforms/encoders.
        """
        doc = {
            "prompt": self.prompt,
            "turns": [[t.role, t.text] for t in self.turns],
            "images": [att.crop.pixel_sha256() for att in self.images],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def labels(self) -> list[str]:
        out: list[str] = []
        for att in self.images:
            out.extend(att.labels)
        return out

    def image_bytes(self) -> int:
        return sum(att.crop.pixels.nbytes for att in self.images)


@dataclass(frozen=True)
class MllmReply:
    text: str
    latency_ms: float
    backend: str

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency must be non-negative")


class MllmBackend(Protocol):
    name: str

    def query(self, req: MllmRequest) -> str: ...


@dataclass
class MockBackend:
    """Scripted backend for tests and offline runs.

    ``mode``: "echo" returns the prompt verbatim; "fixed" returns ``text``;
    "fail" raises.  ``rules`` may override per request.
    """

    mode: str = "echo"
    text: str = ""
    rules: list[Callable[[MllmRequest], Optional[str]]] = field(default_factory=list)
    name: str = "mock"

    def query(self, req: MllmRequest) -> str:
        for rule in self.rules:
            out = rule(req)
            if out is not None:
                return out
        if self.mode == "echo":
            return req.prompt
        if self.mode == "fixed":
            return self.text
        if self.mode == "fail":
            raise MllmTimeoutError("mock backend configured to fail")
        raise ValueError(f"unknown mock mode {self.mode!r}")


class ReplayStore:
    """Fingerprint -> recorded reply map with JSONL persistence."""

    def __init__(self, entries: Optional[dict[str, str]] = None):
        self.entries: dict[str, str] = dict(entries or {})

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self.entries

    def get(self, fingerprint: str) -> Optional[str]:
        return self.entries.get(fingerprint)

    def put(self, fingerprint: str, text: str) -> None:
        self.entries[fingerprint] = text

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            for fp in sorted(self.entries):
                f.write(json.dumps({"fingerprint": fp, "text": self.entries[fp]}, ensure_ascii=False))
                f.write("\n")

    @staticmethod
    def load(path) -> "ReplayStore":
        store = ReplayStore()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            store.put(row["fingerprint"], row["text"])
        return store


@dataclass
class ReplayBackend:
    """Answers from recorded fixtures; misses name the fingerprint so the
    missing exchange can be recorded."""

    store: ReplayStore
    name: str = "replay"

    def query(self, req: MllmRequest) -> str:
        text = self.store.get(req.fingerprint())
        if text is None:
            raise ReplayMissError(f"no recorded reply for fingerprint {req.fingerprint()}")
        return text


@dataclass
class RecordingBackend:
    """Wraps another backend and persists every (fingerprint, reply)."""

    inner: MllmBackend
    store: ReplayStore
    path: Optional[Path] = None
    name: str = "record"

    def query(self, req: MllmRequest) -> str:
        fp = req.fingerprint()
        cached = self.store.get(fp)
        if cached is not None:
            return cached
        text = self.inner.query(req)
        self.store.put(fp, text)
        if self.path is not None:
            self.store.save(self.path)
        return text


@dataclass
class LiveBackend:
    """POSTs the documented JSON body to a hosted endpoint.

    One retry on timeout; the 10 s default bounds tail latency without
    hanging the session.
    """

    url: str
    token: Optional[str] = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    retries: int = 1
    name: str = "live"

    def query(self, req: MllmRequest) -> str:
        body = {
            "conversation_id": req.conversation_id,
            "prompt": req.prompt,
            "history": [{"role": t.role, "text": t.text} for t in req.turns],
            "images": [base64.b64encode(att.crop.png_bytes()).decode("ascii") for att in req.images],
        }
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_exc: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                resp = httpx.post(self.url, json=body, headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                return str(resp.json()["text"])
            except httpx.TimeoutException as e:
                last_exc = e
                continue
            except (httpx.HTTPError, KeyError, ValueError) as e:
                raise MllmTimeoutError(f"live MLLM at {self.url}: {e}") from e
        raise MllmTimeoutError(f"live MLLM at {self.url} timed out after {self.retries + 1} attempts") from last_exc


class AuditLog:
    """Append-only redacted query log; one atomic record per query."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        with self._lock:
            self.records.append(record)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(line + "\n")


class MllmClient:
    """Query entrypoint: measures latency and writes the audit record."""

    def __init__(self, backend: MllmBackend, audit: Optional[AuditLog] = None):
        self.backend = backend
        self.audit = audit or AuditLog()

    def query(self, req: MllmRequest) -> MllmReply:
        start = time.perf_counter()
        try:
            text = self.backend.query(req)
        finally:
            latency_ms = (time.perf_counter() - start) * 1000.0
            self.audit.append(
                {
                    "fingerprint": req.fingerprint(),
                    "labels": req.labels(),
                    "image_bytes": req.image_bytes(),
                    "prompt_chars": len(req.prompt),
                    "latency_ms": round(latency_ms, 3),
                    "backend": self.backend.name,
                }
            )
        return MllmReply(text=text, latency_ms=latency_ms, backend=self.backend.name)
