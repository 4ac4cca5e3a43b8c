"""Desk-scale augmented object intelligence over recorded RGB-D scenes.

Detected objects become world-anchored interactive proxies, each coupled to
its own multimodal-LLM conversation; a companion viewer drives them through
a context menu of object-centric actions.
"""

from .anchoring import ObjectProxy, ProxyRegistry, ProxyState
from .detection import Detection, FilterPolicy, apply_policy
from .errors import AorError
from .events import SessionEvent, read_log, validate_log
from .geometry import CameraIntrinsics, DepthFrame, PixelPoint, Pose, WorldPoint
from .scene import SceneDirectory, load_scene
from .session import SessionConfig, SessionEngine, SessionState, load_trace, replay_log

__version__ = "0.1.0"

__all__ = [
    "AorError",
    "CameraIntrinsics",
    "Detection",
    "DepthFrame",
    "FilterPolicy",
    "ObjectProxy",
    "PixelPoint",
    "Pose",
    "ProxyRegistry",
    "ProxyState",
    "SceneDirectory",
    "SessionConfig",
    "SessionEngine",
    "SessionEvent",
    "SessionState",
    "WorldPoint",
    "apply_policy",
    "load_scene",
    "load_trace",
    "read_log",
    "replay_log",
    "validate_log",
    "__version__",
]
