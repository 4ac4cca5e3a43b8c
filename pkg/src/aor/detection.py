"""Per-frame 2D detection backends and the privacy/relevance filter policy.

Two backends exist: the scripted backend replays a scene's ground-truth
rows deterministically, and the external backend posts frames to a detector
service over HTTP (see ``docs/detector-api.md``).  Regions matching the
denylist never travel further than this module boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

import httpx

from .errors import BackendUnavailableError
from .scene import ColorFrame, Rect, SceneDirectory

# 80-class vocabulary of the common object-detection benchmark the default
# detector models are trained on.
COCO_LABELS: tuple[str, ...] = (
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
    "truck", "boat", "traffic light", "fire hydrant", "stop sign",
    "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag",
    "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard",
    "tennis racket", "bottle", "wine glass", "cup", "fork", "knife", "spoon",
    "bowl", "banana", "apple", "sandwich", "orange", "broccoli", "carrot",
    "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote",
    "keyboard", "cell phone", "microwave", "oven", "toaster", "sink",
    "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
)


@dataclass(frozen=True)
class ClassVocabulary:
    labels: tuple[str, ...] = COCO_LABELS

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("vocabulary labels must be unique")

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Detection:
    """A labeled, scored 2D bounding box on one frame."""

    label: str
    confidence: float
    bbox: Rect
    frame_index: int
    clipped: bool = False

    def __post_init__(self):
        if not self.label:
            raise ValueError("detection label must be non-empty")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class FilterPolicy:
    """Which detections may proceed toward cloud-facing components.

    ``denylist`` labels are never forwarded to the MLLM client; ``allowlist``,
    when non-empty, restricts processing to the listed labels.
    """

    denylist: frozenset[str] = frozenset({"person"})
    allowlist: frozenset[str] = frozenset()
    min_confidence: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "denylist", frozenset(self.denylist))
        object.__setattr__(self, "allowlist", frozenset(self.allowlist))
        if self.denylist & self.allowlist:
            raise ValueError(f"denylist and allowlist overlap: {sorted(self.denylist & self.allowlist)}")
        if not (0.0 <= self.min_confidence <= 1.0):
            raise ValueError(f"min_confidence {self.min_confidence} outside [0, 1]")

    def suppression_reason(self, det: Detection) -> Optional[str]:
        """None when the detection passes; otherwise why it was suppressed."""
        if det.confidence < self.min_confidence:
            return "below-confidence"
        if det.label in self.denylist:
            return "denylisted"
        if self.allowlist and det.label not in self.allowlist:
            return "not-allowlisted"
        return None


@dataclass(frozen=True)
class Suppressed:
    detection: Detection
    reason: str


def apply_policy(
    dets: list[Detection], policy: FilterPolicy
) -> tuple[list[Detection], list[Suppressed]]:
    """Partition detections into (kept, suppressed) preserving input order."""
    kept: list[Detection] = []
    suppressed: list[Suppressed] = []
    for det in dets:
        reason = policy.suppression_reason(det)
        if reason is None:
            kept.append(det)
        else:
            suppressed.append(Suppressed(det, reason))
    return kept, suppressed


class DetectorBackend(Protocol):
    name: str

    def detect(self, frame: ColorFrame, frame_index: int) -> list[Detection]: ...


@dataclass
class ScriptedDetector:
    """Replays the scene's ground-truth detection rows, bit-stable across runs."""

    scene: SceneDirectory
    name: str = "scripted"

    def detect(self, frame: ColorFrame, frame_index: int) -> list[Detection]:
        out = []
        for gt in self.scene.detections_for(frame_index):
            out.append(
                Detection(
                    label=gt.label,
                    confidence=gt.confidence,
                    bbox=gt.bbox,
                    frame_index=frame_index,
                )
            )
        return out


def _clip_detection(label: str, confidence: float, bbox: Rect, frame: ColorFrame, frame_index: int) -> Optional[Detection]:
    frame_rect = Rect(0, 0, frame.width, frame.height)
    clipped = bbox.intersect(frame_rect)
    if clipped.area == 0:
        return None
    return Detection(
        label=label,
        confidence=confidence,
        bbox=clipped,
        frame_index=frame_index,
        clipped=clipped != bbox,
    )


@dataclass
class HttpDetector:
    """Queries a detector service: POST PNG body, JSON detections back.

    Out-of-bounds boxes are clipped to the frame (the clip is flagged on the
    Detection and logged by the pipeline); boxes entirely outside are dropped.
    One request is in flight at a time (frame-serial).
    """

    url: str
    timeout: float = 5.0
    name: str = "http"

    def detect(self, frame: ColorFrame, frame_index: int) -> list[Detection]:
        import io

        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(frame.pixels, mode="RGB").save(buf, format="PNG")
        try:
            resp = httpx.post(
                self.url,
                content=buf.getvalue(),
                headers={"Content-Type": "image/png"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            rows = resp.json()
        except (httpx.HTTPError, ValueError) as e:
            raise BackendUnavailableError(f"detector at {self.url}: {e}") from e

        out: list[Detection] = []
        for row in rows:
            det = _clip_detection(
                label=str(row["label"]),
                confidence=float(row["confidence"]),
                bbox=Rect.from_list(row["bbox"]),
                frame=frame,
                frame_index=frame_index,
            )
            if det is not None:
                out.append(det)
        return out
