"""Deterministic synthetic RGB-D scene generator.

The world model is a set of fronto-parallel textured rectangles (billboards)
in front of a backdrop plane, viewed by a camera translating along x.  Depth
is analytic, so expected localizations are computable in closed form; color
is procedural and identical across runs, so crop hashes are stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw

from .geometry import CameraIntrinsics

# matches the look of a consumer depth camera stream
DEFAULT_BACKDROP_Z = 1.5


@dataclass(frozen=True)
class Billboard:
    """A flat textured object: world rect centered at (x, y) at depth z."""

    label: str
    x: float
    y: float
    z: float
    w: float
    h: float
    base: tuple[int, int, int]
    accent: tuple[int, int, int]
    confidence: float = 0.9

    def world_rect(self) -> tuple[float, float, float, float]:
        return (self.x - self.w / 2, self.y - self.h / 2, self.w, self.h)


@dataclass(frozen=True)
class SceneSpec:
    name: str
    intrinsics: CameraIntrinsics
    frame_count: int
    camera_step_x: float
    billboards: tuple[Billboard, ...]
    backdrop_z: float = DEFAULT_BACKDROP_Z
    backdrop_color: tuple[int, int, int] = (203, 198, 190)

    def camera_x(self, frame: int) -> float:
        return self.camera_step_x * frame


def billboard_texture(b: Billboard, px_w: int, px_h: int) -> np.ndarray:
    """Procedural product-like texture: gradient body, label band, stripes."""
    img = Image.new("RGB", (px_w, px_h))
    draw = ImageDraw.Draw(img)
    for row in range(px_h):
        t = row / max(1, px_h - 1)
        shade = tuple(int(c * (0.75 + 0.25 * (1 - t))) for c in b.base)
        draw.line([(0, row), (px_w, row)], fill=shade)
    band_top = int(px_h * 0.38)
    band_bot = int(px_h * 0.62)
    draw.rectangle([0, band_top, px_w, band_bot], fill=b.accent)
    for col in range(0, px_w, 7):
        draw.line([(col, band_top + 2), (col, band_bot - 2)], fill=b.base)
    draw.rectangle([0, 0, px_w - 1, px_h - 1], outline=(30, 30, 30))
    return np.asarray(img, dtype=np.uint8)


def project_rect(
    spec: SceneSpec, b: Billboard, frame: int
) -> tuple[int, int, int, int]:
    """Integer pixel rect of a billboard in a frame: (u0, v0, w, h)."""
    k = spec.intrinsics
    tx = spec.camera_x(frame)
    x0, y0, w, h = b.world_rect()
    u0 = round(k.fx * (x0 - tx) / b.z + k.cx)
    v0 = round(k.fy * y0 / b.z + k.cy)
    u1 = round(k.fx * (x0 + w - tx) / b.z + k.cx)
    v1 = round(k.fy * (y0 + h) / b.z + k.cy)
    return (u0, v0, u1 - u0, v1 - v0)


def expected_world_pos(b: Billboard) -> tuple[float, float, float]:
    """Where localization should place the billboard: its center point.

    Valid because the generator paints billboard-exact depth, so a raycast
    at the projected bbox center lands on the plane z = b.z.
    """
    return (b.x, b.y, b.z)


def render_frame(spec: SceneSpec, frame: int) -> tuple[np.ndarray, np.ndarray]:
    """Color (H, W, 3) uint8 and depth (H, W) uint16 in millimeters."""
    k = spec.intrinsics
    color = np.zeros((k.height, k.width, 3), dtype=np.uint8)
    color[:, :] = spec.backdrop_color
    # subtle horizontal shading so the backdrop is not a single flat value
    shade = (np.linspace(0.92, 1.0, k.width) * 255).astype(np.uint8)
    color[:, :, 2] = np.minimum(color[:, :, 2], shade)
    depth = np.full((k.height, k.width), round(spec.backdrop_z * 1000), dtype=np.uint16)

    for b in sorted(spec.billboards, key=lambda b: -b.z):  # far to near
        u0, v0, w, h = project_rect(spec, b, frame)
        cu0, cv0 = max(0, u0), max(0, v0)
        cu1, cv1 = min(k.width, u0 + w), min(k.height, v0 + h)
        if cu1 <= cu0 or cv1 <= cv0:
            continue
        tex = billboard_texture(b, w, h)
        color[cv0:cv1, cu0:cu1] = tex[cv0 - v0 : cv1 - v0, cu0 - u0 : cu1 - u0]
        depth[cv0:cv1, cu0:cu1] = round(b.z * 1000)
    return color, depth


def write_scene(spec: SceneSpec, out_dir) -> Path:
    """Write a complete scene directory; overwrites existing files."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "depth").mkdir(parents=True, exist_ok=True)
    k = spec.intrinsics

    manifest = {
        "name": spec.name,
        "intrinsics": {
            "fx": k.fx,
            "fy": k.fy,
            "cx": k.cx,
            "cy": k.cy,
            "width": k.width,
            "height": k.height,
        },
        "frame_count": spec.frame_count,
    }
    (out / "scene.json").write_text(json.dumps(manifest, indent=2) + "\n")

    pose_lines = []
    det_lines = []
    for frame in range(spec.frame_count):
        color, depth = render_frame(spec, frame)
        Image.fromarray(color, mode="RGB").save(out / "frames" / f"{frame:06d}.png")
        Image.fromarray(depth).save(out / "depth" / f"{frame:06d}.png")
        tx = spec.camera_x(frame)
        pose_lines.append(json.dumps([1, 0, 0, tx, 0, 1, 0, 0, 0, 0, 1, 0]))
        for b in spec.billboards:
            u0, v0, w, h = project_rect(spec, b, frame)
            clipped_u0, clipped_v0 = max(0, u0), max(0, v0)
            clipped_w = min(k.width, u0 + w) - clipped_u0
            clipped_h = min(k.height, v0 + h) - clipped_v0
            if clipped_w <= 0 or clipped_h <= 0:
                continue
            det_lines.append(
                json.dumps(
                    {
                        "frame": frame,
                        "label": b.label,
                        "bbox": [clipped_u0, clipped_v0, clipped_w, clipped_h],
                        "confidence": b.confidence,
                    }
                )
            )
    (out / "poses.jsonl").write_text("\n".join(pose_lines) + "\n")
    (out / "detections.jsonl").write_text("\n".join(det_lines) + "\n")
    return out


def box_scene_spec() -> SceneSpec:
    """Small 3-frame scene: one box on a backdrop; loader/geometry fixture."""
    k = CameraIntrinsics(fx=260.0, fy=260.0, cx=159.5, cy=119.5, width=320, height=240)
    return SceneSpec(
        name="synthetic-box",
        intrinsics=k,
        frame_count=3,
        camera_step_x=0.02,
        billboards=(
            Billboard(
                label="book",
                x=0.05,
                y=0.02,
                z=0.9,
                w=0.22,
                h=0.16,
                base=(176, 112, 54),
                accent=(240, 222, 180),
            ),
        ),
        backdrop_z=1.4,
    )


def desk_scene_spec() -> SceneSpec:
    """The full desk walkthrough: nine objects, eight frames, 640x480.

    The camera pans right to left across a shelf of products; one region
    shows a person and must never survive the filter stage.
    """
    k = CameraIntrinsics(fx=525.0, fy=525.0, cx=319.5, cy=239.5, width=640, height=480)
    b = Billboard
    return SceneSpec(
        name="desk",
        intrinsics=k,
        frame_count=8,
        camera_step_x=0.012,
        billboards=(
            # top shelf
            b("bottle", x=-0.42, y=-0.21, z=1.25, w=0.11, h=0.26, base=(58, 36, 24), accent=(196, 34, 30)),   # soy sauce
            b("bowl", x=-0.13, y=-0.16, z=1.25, w=0.22, h=0.13, base=(120, 124, 132), accent=(90, 94, 100)),  # pot
            b("book", x=0.16, y=-0.20, z=1.25, w=0.16, h=0.22, base=(30, 80, 160), accent=(250, 210, 60)),    # pasta box
            b("potted plant", x=0.45, y=-0.22, z=1.25, w=0.15, h=0.24, base=(40, 120, 60), accent=(150, 90, 50)),
            # bottom shelf, the three drinks ordered left to right
            b("cup", x=-0.35, y=0.16, z=1.05, w=0.12, h=0.14, base=(235, 235, 240), accent=(70, 130, 200)),   # milk
            b("bottle", x=-0.05, y=0.13, z=1.05, w=0.10, h=0.24, base=(180, 150, 110), accent=(110, 70, 40)), # oat drink
            b("wine glass", x=0.28, y=0.14, z=1.05, w=0.09, h=0.20, base=(225, 215, 205), accent=(140, 40, 60)),
            b("bottle", x=0.55, y=0.15, z=1.05, w=0.10, h=0.22, base=(240, 160, 40), accent=(60, 140, 60)),   # juice
            # a person stands far left; privacy filter must drop every sighting
            b("person", x=-0.95, y=0.0, z=1.45, w=0.30, h=0.62, base=(90, 70, 120), accent=(220, 190, 160)),
        ),
        backdrop_z=1.5,
    )
