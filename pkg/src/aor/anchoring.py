"""World-anchored object proxies: registry, dedup, and the bubble lifecycle.

A proxy starts as a bubble (minimal indicator), opens into a context menu on
selection, and enters an action-active state while an action runs:

    bubble --select--> menu --dispatch--> action
    bubble <--dismiss- menu <--complete-- action

An anchor's world position is fixed at first localization; later sightings
only refresh ``last_seen`` and may upgrade the stored crop.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .detection import Detection
from .errors import StateTransitionError, UnknownProxyError
from .geometry import CameraIntrinsics, DepthFrame, PixelPoint, Pose, WorldPoint, raycast_to_world
from .scene import CropImage

DEFAULT_DEDUP_RADIUS = 0.3


class StateKind(enum.Enum):
    BUBBLE = "bubble"
    MENU = "menu"
    ACTION = "action"


@dataclass(frozen=True)
class ProxyState:
    kind: StateKind
    action: Optional[str] = None

    def __post_init__(self):
        if (self.kind is StateKind.ACTION) != (self.action is not None):
            raise ValueError("action id present iff state is action-active")

    def encode(self) -> str:
        return f"action:{self.action}" if self.kind is StateKind.ACTION else self.kind.value

    @staticmethod
    def decode(text: str) -> "ProxyState":
        if text.startswith("action:"):
            return ProxyState(StateKind.ACTION, text.split(":", 1)[1])
        return ProxyState(StateKind(text))


BUBBLE = ProxyState(StateKind.BUBBLE)
MENU = ProxyState(StateKind.MENU)


@dataclass
class ObjectProxy:
    """Runtime stand-in for one detected physical object."""

    id: str
    label: str
    world_pos: WorldPoint
    crop: CropImage
    bbox_area: int
    first_seen: int
    last_seen: int
    state: ProxyState = BUBBLE
    refined_label: Optional[str] = None
    conversation: Optional[str] = None
    marked: bool = False

    def distance_to(self, p: WorldPoint) -> float:
        return math.dist(self.world_pos, p)


def localize(
    det: Detection, df: DepthFrame, k: CameraIntrinsics, pose: Pose
) -> Optional[WorldPoint]:
    """World position of a detection via a raycast at its bbox center.

    ``None`` when the depth neighborhood is invalid; the caller drops the
    detection for this frame and logs the event.
    """
    cu, cv = det.bbox.center()
    # bbox center of a clipped box can sit on the frame edge; clamp inside
    cu = min(max(cu, 0.0), k.width - 1.0)
    cv = min(max(cv, 0.0), k.height - 1.0)
    return raycast_to_world(PixelPoint(cu, cv), df, k, pose)


class ProxyRegistry:
    """All live proxies plus the same-label spatial dedup rule.

    Invariant: no two proxies share a label with world distance below
    ``dedup_radius``.  Mutation happens only from the session's single
    event-application context; snapshots served to viewers are plain data.
    """

    def __init__(self, dedup_radius: float = DEFAULT_DEDUP_RADIUS):
        if dedup_radius <= 0:
            raise ValueError(f"dedup_radius must be positive, got {dedup_radius}")
        self.dedup_radius = dedup_radius
        self._proxies: dict[str, ObjectProxy] = {}
        self._next_serial = 1

    def __len__(self) -> int:
        return len(self._proxies)

    def __contains__(self, proxy_id: str) -> bool:
        return proxy_id in self._proxies

    def proxies(self) -> list[ObjectProxy]:
        return list(self._proxies.values())

    def get(self, proxy_id: str) -> ObjectProxy:
        try:
            return self._proxies[proxy_id]
        except KeyError:
            raise UnknownProxyError(f"no proxy {proxy_id!r}") from None

    def upsert(
        self,
        label: str,
        world_pos: WorldPoint,
        crop: CropImage,
        frame_index: int,
        bbox_area: Optional[int] = None,
    ) -> tuple[str, bool]:
        """Match against existing same-label proxies within the dedup radius.

        A match refreshes ``last_seen`` and replaces the stored crop iff the
        new bbox is larger; otherwise a new proxy spawns in bubble state.
        Returns ``(proxy id, spawned)``.
        """
        area = crop.bbox.area if bbox_area is None else bbox_area
        best: Optional[ObjectProxy] = None
        best_dist = self.dedup_radius
        for proxy in self._proxies.values():
            if proxy.label != label:
                continue
            d = proxy.distance_to(world_pos)
            if d < best_dist:
                best, best_dist = proxy, d
        if best is not None:
            best.last_seen = max(best.last_seen, frame_index)
            if area > best.bbox_area:
                best.crop = crop
                best.bbox_area = area
            return best.id, False

        proxy_id = f"p{self._next_serial:03d}"
        self._next_serial += 1
        self._proxies[proxy_id] = ObjectProxy(
            id=proxy_id,
            label=label,
            world_pos=world_pos,
            crop=crop,
            bbox_area=area,
            first_seen=frame_index,
            last_seen=frame_index,
        )
        return proxy_id, True

    def restore(self, proxy: ObjectProxy) -> None:
        """Reinsert a proxy during event-log replay, keeping serials in sync."""
        self._proxies[proxy.id] = proxy
        serial = int(proxy.id.lstrip("p"))
        self._next_serial = max(self._next_serial, serial + 1)

    def remove(self, proxy_id: str) -> None:
        self.get(proxy_id)
        del self._proxies[proxy_id]

    def stale_ids(self, current_frame: int, stale_after: int) -> list[str]:
        return [p.id for p in self._proxies.values() if current_frame - p.last_seen > stale_after]

    # -- lifecycle ---------------------------------------------------------

    def select(self, proxy_id: str) -> ProxyState:
        """bubble -> menu."""
        proxy = self.get(proxy_id)
        if proxy.state.kind is not StateKind.BUBBLE:
            raise StateTransitionError(f"{proxy_id}: select requires bubble state, is {proxy.state.encode()}")
        proxy.state = MENU
        return proxy.state

    def dismiss(self, proxy_id: str) -> ProxyState:
        """menu -> bubble."""
        proxy = self.get(proxy_id)
        if proxy.state.kind is not StateKind.MENU:
            raise StateTransitionError(f"{proxy_id}: dismiss requires open menu, is {proxy.state.encode()}")
        proxy.state = BUBBLE
        return proxy.state

    def begin_action(self, proxy_id: str, action: str) -> ProxyState:
        """menu -> action-active."""
        proxy = self.get(proxy_id)
        if proxy.state.kind is not StateKind.MENU:
            raise StateTransitionError(f"{proxy_id}: dispatch requires open menu, is {proxy.state.encode()}")
        proxy.state = ProxyState(StateKind.ACTION, action)
        return proxy.state

    def end_action(self, proxy_id: str) -> ProxyState:
        """action-active -> menu (on completion or cancellation)."""
        proxy = self.get(proxy_id)
        if proxy.state.kind is not StateKind.ACTION:
            raise StateTransitionError(f"{proxy_id}: no action active, is {proxy.state.encode()}")
        proxy.state = MENU
        return proxy.state

    def mark(self, proxy_ids: list[str]) -> None:
        """Set the comparer highlight on exactly the listed proxies.

        Unknown ids raise before any mutation.
        """
        for pid in proxy_ids:
            self.get(pid)
        wanted = set(proxy_ids)
        for proxy in self._proxies.values():
            proxy.marked = proxy.id in wanted

    def marked_ids(self) -> list[str]:
        return [p.id for p in self._proxies.values() if p.marked]
