"""Recorded RGB-D scene directories: loading, validation, and cropping.

A scene directory stands in for the live camera and SLAM stack.  Layout
(see ``docs/scene-format.md``):

    scene.json          manifest: intrinsics, frame count, relative paths
    frames/%06d.png     color, 8-bit RGB
    depth/%06d.png      16-bit grayscale, millimeters, 0 = invalid
    poses.jsonl         one line per frame: 12 numbers, row-major 3x4 [R|t]
    detections.jsonl    optional ground truth: {frame, label, bbox, confidence}

A loaded SceneDirectory is immutable and shareable across concurrent readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import EmptyCropError, SceneLoadError
from .geometry import CameraIntrinsics, DepthFrame, Pose

# Files accept a looser orthonormality than the Pose type; anything inside
# this gate is snapped to the nearest exact rotation on load.
POSE_FILE_TOL = 1e-4


@dataclass(frozen=True)
class Rect:
    """Pixel-aligned rectangle, x/y top-left corner, w/h extent."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"rect extent must be non-negative, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def intersect(self, other: "Rect") -> "Rect":
        x0 = max(self.x, other.x)
        y0 = max(self.y, other.y)
        x1 = min(self.x + self.w, other.x + other.w)
        y1 = min(self.y + self.h, other.y + other.h)
        return Rect(x0, y0, max(0, x1 - x0), max(0, y1 - y0))

    def to_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @staticmethod
    def from_list(xywh) -> "Rect":
        x, y, w, h = (int(v) for v in xywh)
        return Rect(x, y, w, h)


@dataclass(frozen=True)
class ColorFrame:
    """8-bit RGB pixels, shape (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame size must be at least 1x1, got {self.width}x{self.height}")
        if px.shape != (self.height, self.width, 3):
            raise ValueError(f"pixel buffer shape {px.shape} != ({self.height}, {self.width}, 3)")
        object.__setattr__(self, "pixels", px)
        px.setflags(write=False)

    @staticmethod
    def from_array(pixels: np.ndarray) -> "ColorFrame":
        h, w = pixels.shape[:2]
        return ColorFrame(width=w, height=h, pixels=pixels)


@dataclass(frozen=True)
class CropImage:
    """RGB crop of one frame region; ``bbox`` is the clipped source rect."""

    frame_index: int
    bbox: Rect
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.size == 0:
            raise ValueError("crop must be non-empty")
        if px.shape != (self.bbox.h, self.bbox.w, 3):
            raise ValueError(f"crop shape {px.shape} does not match bbox {self.bbox}")
        object.__setattr__(self, "pixels", px)
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.bbox.w

    @property
    def height(self) -> int:
        return self.bbox.h

    def png_bytes(self) -> bytes:
        import io

        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    def pixel_sha256(self) -> str:
        """Content hash over raw pixels and dimensions; PNG-encoder independent."""
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}:".encode())
        h.update(self.pixels.tobytes())
        return h.hexdigest()


def crop(frame: ColorFrame, bbox: Rect) -> CropImage:
    """Crop the intersection of ``bbox`` with the frame; pixels are bit-equal
    to the source over that region."""
    clipped = bbox.intersect(Rect(0, 0, frame.width, frame.height))
    if clipped.area == 0:
        raise EmptyCropError(f"bbox {bbox.to_list()} does not intersect {frame.width}x{frame.height} frame")
    region = frame.pixels[clipped.y : clipped.y + clipped.h, clipped.x : clipped.x + clipped.w]
    return CropImage(frame_index=-1, bbox=clipped, pixels=region.copy())


@dataclass(frozen=True)
class GroundTruthDetection:
    frame: int
    label: str
    bbox: Rect
    confidence: float


@dataclass(frozen=True)
class SceneDirectory:
    """A validated recorded scene.  Frames are decoded lazily and cached."""

    path: Path
    name: str
    intrinsics: CameraIntrinsics
    frame_count: int
    color_paths: tuple[Path, ...]
    depth_paths: tuple[Path, ...]
    poses: tuple[Pose, ...]
    ground_truth: tuple[GroundTruthDetection, ...]

    def color(self, index: int) -> ColorFrame:
        self._check_index(index)
        arr = np.asarray(Image.open(self.color_paths[index]).convert("RGB"))
        return ColorFrame.from_array(arr)

    def depth(self, index: int) -> DepthFrame:
        self._check_index(index)
        img = Image.open(self.depth_paths[index])
        arr = np.asarray(img)
        if arr.dtype != np.uint16:
            raise SceneLoadError(f"{self.depth_paths[index]}: depth PNG must be 16-bit, got {arr.dtype}")
        return DepthFrame.from_millimeters(arr)

    def pose(self, index: int) -> Pose:
        self._check_index(index)
        return self.poses[index]

    def detections_for(self, index: int) -> list[GroundTruthDetection]:
        return [d for d in self.ground_truth if d.frame == index]

    def _check_index(self, index: int) -> None:
        if not (0 <= index < self.frame_count):
            raise IndexError(f"frame {index} outside 0..{self.frame_count - 1}")


def _load_manifest(path: Path) -> dict:
    manifest_path = path / "scene.json"
    if not manifest_path.is_file():
        raise SceneLoadError(f"{manifest_path}: manifest missing")
    try:
        return json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise SceneLoadError(f"{manifest_path}: malformed JSON ({e})") from e


def _load_pose_line(line: str, source: str) -> Pose:
    values = json.loads(line)
    if not isinstance(values, list) or len(values) != 12:
        raise SceneLoadError(f"{source}: pose line must hold 12 numbers")
    mat = np.asarray(values, dtype=np.float64).reshape(3, 4)
    rot, tra = mat[:, :3], mat[:, 3]
    if not np.isfinite(mat).all():
        raise SceneLoadError(f"{source}: non-finite pose entries")
    err = float(np.abs(rot.T @ rot - np.eye(3)).max())
    if err > POSE_FILE_TOL or np.linalg.det(rot) < 0:
        raise SceneLoadError(f"{source}: invalid rotation (orthonormality error {err:.2e}, det {np.linalg.det(rot):.4f})")
    # snap to the nearest exact rotation so the Pose invariant (1e-6) holds
    u, _, vt = np.linalg.svd(rot)
    rot = u @ vt
    if np.linalg.det(rot) < 0:
        raise SceneLoadError(f"{source}: invalid rotation (det -1 after projection)")
    return Pose(rot, tra)


def load_scene(path) -> SceneDirectory:
    """Load and eagerly validate a scene directory.

    Every frame must have a color image, a depth image, and a pose; image
    dimensions must match the manifest intrinsics.  Errors name the offending
    file.  Loading is deterministic: the same directory bytes produce a
    structurally identical SceneDirectory.
    """
    path = Path(path)
    if not path.is_dir():
        raise SceneLoadError(f"{path}: scene directory does not exist")
    manifest = _load_manifest(path)

    try:
        intr = manifest["intrinsics"]
        k = CameraIntrinsics(
            fx=float(intr["fx"]),
            fy=float(intr["fy"]),
            cx=float(intr["cx"]),
            cy=float(intr["cy"]),
            width=int(intr["width"]),
            height=int(intr["height"]),
        )
        frame_count = int(manifest["frame_count"])
    except (KeyError, TypeError, ValueError) as e:
        raise SceneLoadError(f"{path / 'scene.json'}: {e}") from e
    if frame_count < 1:
        raise SceneLoadError(f"{path / 'scene.json'}: frame_count must be >= 1")

    frames_dir = path / manifest.get("frames_dir", "frames")
    depth_dir = path / manifest.get("depth_dir", "depth")

    color_paths, depth_paths = [], []
    for i in range(frame_count):
        cp = frames_dir / f"{i:06d}.png"
        dp = depth_dir / f"{i:06d}.png"
        if not cp.is_file():
            raise SceneLoadError(f"{cp}: color frame missing")
        if not dp.is_file():
            raise SceneLoadError(f"{dp}: depth frame missing")
        color_paths.append(cp)
        depth_paths.append(dp)
    extra = sorted(frames_dir.glob("*.png"))
    if len(extra) != frame_count:
        surplus = [p for p in extra if p not in color_paths]
        raise SceneLoadError(f"{surplus[0] if surplus else frames_dir}: extra frame beyond frame_count={frame_count}")

    poses_path = path / "poses.jsonl"
    if not poses_path.is_file():
        raise SceneLoadError(f"{poses_path}: poses file missing")
    lines = [ln for ln in poses_path.read_text().splitlines() if ln.strip()]
    if len(lines) != frame_count:
        raise SceneLoadError(f"{poses_path}: {len(lines)} pose lines for {frame_count} frames")
    poses = [_load_pose_line(ln, f"{poses_path}:{i + 1}") for i, ln in enumerate(lines)]

    # dimension check against the first frame of each stream; per-frame decode
    # would be wasteful and PNG headers are cheap to read
    for i in (0, frame_count - 1):
        with Image.open(color_paths[i]) as img:
            if img.size != (k.width, k.height):
                raise SceneLoadError(
                    f"{color_paths[i]}: size {img.size[0]}x{img.size[1]} != intrinsics {k.width}x{k.height}"
                )
        with Image.open(depth_paths[i]) as img:
            if img.size != (k.width, k.height):
                raise SceneLoadError(
                    f"{depth_paths[i]}: size {img.size[0]}x{img.size[1]} != intrinsics {k.width}x{k.height}"
                )

    ground_truth: list[GroundTruthDetection] = []
    det_path = path / "detections.jsonl"
    if det_path.is_file():
        for lineno, ln in enumerate(det_path.read_text().splitlines(), start=1):
            if not ln.strip():
                continue
            try:
                row = json.loads(ln)
                det = GroundTruthDetection(
                    frame=int(row["frame"]),
                    label=str(row["label"]),
                    bbox=Rect.from_list(row["bbox"]),
                    confidence=float(row.get("confidence", 1.0)),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise SceneLoadError(f"{det_path}:{lineno}: {e}") from e
            if not (0 <= det.frame < frame_count):
                raise SceneLoadError(f"{det_path}:{lineno}: frame {det.frame} out of range")
            ground_truth.append(det)

    return SceneDirectory(
        path=path,
        name=path.name,
        intrinsics=k,
        frame_count=frame_count,
        color_paths=tuple(color_paths),
        depth_paths=tuple(depth_paths),
        poses=tuple(poses),
        ground_truth=tuple(ground_truth),
    )
