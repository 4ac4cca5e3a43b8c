"""Pinhole camera math for 2D-to-3D localization.

Conventions (standard computer vision):
  Camera frame: x right, y down, z forward along the optical axis.
  Image frame:  u right, v down, origin at the top-left pixel center.
  Pose:         camera-to-world, ``world = R @ cam + t``.

All functions are pure and operate on immutable inputs, so they are safe to
call from any number of concurrent contexts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidDepthError, OutOfBoundsError

ROTATION_TOL = 1e-6


class PixelPoint(NamedTuple):
    u: float
    v: float


class CameraPoint(NamedTuple):
    x: float
    y: float
    z: float


class WorldPoint(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class CameraIntrinsics:
    """Rectified pinhole intrinsics in pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame size must be at least 1x1, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} frame"
            )

    def contains(self, p: PixelPoint) -> bool:
        return 0 <= p.u < self.width and 0 <= p.v < self.height


def _orthonormality_error(rotation: np.ndarray) -> float:
    return float(np.abs(rotation.T @ rotation - np.eye(3)).max())


@dataclass(frozen=True)
class Pose:
    """Rigid camera-to-world transform: rotation (3x3) and translation (meters)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        tra = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.isfinite(rot).all() and np.isfinite(tra).all()):
            raise ValueError("pose entries must be finite")
        if _orthonormality_error(rot) > ROTATION_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > ROTATION_TOL:
            raise ValueError(f"rotation determinant {np.linalg.det(rot):.6f} != +1")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tra)
        rot.setflags(write=False)
        tra.setflags(write=False)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def to_world(self, p: CameraPoint) -> WorldPoint:
        w = self.rotation @ np.array(p, dtype=np.float64) + self.translation
        return WorldPoint(float(w[0]), float(w[1]), float(w[2]))

    def to_camera(self, w: WorldPoint) -> CameraPoint:
        c = self.rotation.T @ (np.array(w, dtype=np.float64) - self.translation)
        return CameraPoint(float(c[0]), float(c[1]), float(c[2]))


@dataclass(frozen=True)
class DepthFrame:
    """Per-pixel depth in meters with a validity mask.

    ``depth`` holds finite positive values wherever ``valid`` is True; invalid
    pixels carry 0.  Shapes are (height, width).
    """

    width: int
    height: int
    depth: np.ndarray
    valid: np.ndarray = field(repr=False)

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if depth.shape != (self.height, self.width) or valid.shape != depth.shape:
            raise ValueError(
                f"depth shape {depth.shape} does not match {self.height}x{self.width}"
            )
        if valid.any():
            vals = depth[valid]
            if not np.isfinite(vals).all() or (vals <= 0).any():
                raise ValueError("valid depths must be finite and positive")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "valid", valid)
        depth.setflags(write=False)
        valid.setflags(write=False)

    @staticmethod
    def from_meters(depth_m: np.ndarray) -> "DepthFrame":
        """Build from a float array; non-finite or non-positive pixels become invalid."""
        depth_m = np.asarray(depth_m, dtype=np.float64)
        valid = np.isfinite(depth_m) & (depth_m > 0)
        clean = np.where(valid, depth_m, 0.0)
        h, w = depth_m.shape
        return DepthFrame(width=w, height=h, depth=clean, valid=valid)

    @staticmethod
    def from_millimeters(depth_mm: np.ndarray) -> "DepthFrame":
        """Decode the 16-bit unsigned millimeter file encoding; 0 means invalid."""
        depth_mm = np.asarray(depth_mm)
        valid = depth_mm > 0
        depth = np.where(valid, depth_mm.astype(np.float64) / 1000.0, 0.0)
        h, w = depth_mm.shape
        return DepthFrame(width=w, height=h, depth=depth, valid=valid)


def backproject(p: PixelPoint, d: float, k: CameraIntrinsics) -> CameraPoint:
    """Lift a pixel at depth ``d`` meters into the camera frame."""
    if not (math.isfinite(d) and d > 0):
        raise InvalidDepthError(f"depth must be positive and finite, got {d}")
    if not k.contains(p):
        raise OutOfBoundsError(f"pixel ({p.u}, {p.v}) outside {k.width}x{k.height} frame")
    return CameraPoint(
        (p.u - k.cx) * d / k.fx,
        (p.v - k.cy) * d / k.fy,
        d,
    )


def project(w: WorldPoint, pose: Pose, k: CameraIntrinsics) -> Optional[PixelPoint]:
    """Project a world point into the image; ``None`` when behind the camera.

    The result may lie outside the frame bounds; callers clip.
    """
    c = pose.to_camera(w)
    if c.z <= 0:
        return None
    return PixelPoint(k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy)


def sample_depth(df: DepthFrame, p: PixelPoint, window: int = 5) -> Optional[float]:
    """Median of valid depths in the window x window neighborhood around ``p``.

    The neighborhood is clipped at the frame border.  Returns ``None`` when it
    contains no valid sample.  The median rejects single-pixel speckle common
    in depth-from-motion maps.
    """
    if window not in (1, 3, 5, 7):
        raise ValueError(f"window must be one of 1, 3, 5, 7, got {window}")
    # round-half-up, explicit to keep platform-independent behavior
    u = int(math.floor(p.u + 0.5))
    v = int(math.floor(p.v + 0.5))
    if not (0 <= u < df.width and 0 <= v < df.height):
        raise OutOfBoundsError(f"pixel ({p.u}, {p.v}) outside {df.width}x{df.height} depth frame")
    half = window // 2
    u0, u1 = max(0, u - half), min(df.width, u + half + 1)
    v0, v1 = max(0, v - half), min(df.height, v + half + 1)
    patch = df.depth[v0:v1, u0:u1]
    mask = df.valid[v0:v1, u0:u1]
    if not mask.any():
        return None
    return float(np.median(patch[mask]))


def raycast_to_world(
    p: PixelPoint,
    df: DepthFrame,
    k: CameraIntrinsics,
    pose: Pose,
    window: int = 5,
) -> Optional[WorldPoint]:
    """Sample depth at ``p``, back-project, and transform into world space.

    Returns ``None`` when the depth neighborhood holds no valid sample.
    """
    d = sample_depth(df, p, window)
    if d is None:
        return None
    return pose.to_world(backproject(p, d, k))
