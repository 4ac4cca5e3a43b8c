"""Proxy registry: dedup, anchor immutability, and the lifecycle machine."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aor.anchoring import BUBBLE, MENU, ProxyRegistry, ProxyState, StateKind, localize
from aor.detection import Detection
from aor.errors import StateTransitionError, UnknownProxyError
from aor.geometry import CameraIntrinsics, DepthFrame, Pose, WorldPoint
from aor.scene import Rect

from conftest import make_crop


def upsert(reg, label="cup", pos=(0.0, 0.0, 1.0), frame=0, area=None):
    crop = make_crop()
    return reg.upsert(label, WorldPoint(*pos), crop, frame, bbox_area=area)


class TestDedup:
    def test_same_label_within_radius_updates(self):
        reg = ProxyRegistry()
        pid, spawned = upsert(reg)
        assert spawned and pid == "p001"
        pid2, spawned2 = upsert(reg, pos=(0.1, 0.0, 1.0), frame=3)
        assert pid2 == pid and not spawned2
        assert len(reg) == 1
        assert reg.get(pid).last_seen == 3

    def test_same_label_outside_radius_spawns(self):
        reg = ProxyRegistry()
        upsert(reg)
        pid, spawned = upsert(reg, pos=(0.31, 0.0, 1.0))
        assert spawned and pid == "p002"

    def test_different_label_same_spot_spawns(self):
        reg = ProxyRegistry()
        upsert(reg, label="cup")
        pid, spawned = upsert(reg, label="bowl")
        assert spawned

    def test_nearest_match_wins(self):
        reg = ProxyRegistry()
        a, _ = upsert(reg, pos=(0.0, 0.0, 1.0))
        b, _ = upsert(reg, pos=(0.5, 0.0, 1.0))
        pid, spawned = upsert(reg, pos=(0.4, 0.0, 1.0))
        assert not spawned and pid == b

    def test_anchor_position_never_moves(self):
        reg = ProxyRegistry()
        pid, _ = upsert(reg, pos=(0.0, 0.0, 1.0))
        upsert(reg, pos=(0.2, 0.0, 1.0), frame=5)
        assert reg.get(pid).world_pos == WorldPoint(0.0, 0.0, 1.0)

    def test_crop_replaced_only_when_larger(self):
        reg = ProxyRegistry()
        pid, _ = upsert(reg, area=100)
        first_crop = reg.get(pid).crop
        upsert(reg, area=50, frame=1)
        assert reg.get(pid).crop is first_crop
        upsert(reg, area=200, frame=2)
        assert reg.get(pid).crop is not first_crop
        assert reg.get(pid).bbox_area == 200

    def test_ids_are_sequential(self):
        reg = ProxyRegistry()
        ids = [upsert(reg, pos=(i, 0.0, 1.0))[0] for i in range(5)]
        assert ids == ["p001", "p002", "p003", "p004", "p005"]

    def test_restore_syncs_serial(self):
        reg = ProxyRegistry()
        pid, _ = upsert(reg)
        proxy = reg.get(pid)
        fresh = ProxyRegistry()
        fresh.restore(proxy)
        pid2, _ = upsert(fresh, pos=(5.0, 0.0, 1.0))
        assert pid2 == "p002"

    def test_stale_ids(self):
        reg = ProxyRegistry()
        a, _ = upsert(reg, pos=(0.0, 0.0, 1.0), frame=0)
        b, _ = upsert(reg, pos=(1.0, 0.0, 1.0), frame=9)
        assert reg.stale_ids(current_frame=10, stale_after=5) == [a]


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["cup", "bowl", "book"]),
            st.floats(min_value=-1.0, max_value=1.0),
            st.floats(min_value=-1.0, max_value=1.0),
        ),
        min_size=1,
        max_size=60,
    )
)
@settings(max_examples=120, deadline=None)
def test_property_no_same_label_pair_within_radius(points):
    reg = ProxyRegistry(dedup_radius=0.3)
    for i, (label, x, y) in enumerate(points):
        upsert(reg, label=label, pos=(x, y, 1.0), frame=i)
    proxies = reg.proxies()
    for a, b in itertools.combinations(proxies, 2):
        if a.label == b.label:
            assert math.dist(a.world_pos, b.world_pos) >= 0.3


class TestLifecycle:
    def test_full_cycle(self):
        reg = ProxyRegistry()
        pid, _ = upsert(reg)
        assert reg.get(pid).state == BUBBLE
        assert reg.select(pid) == MENU
        state = reg.begin_action(pid, "info")
        assert state == ProxyState(StateKind.ACTION, "info")
        assert reg.end_action(pid) == MENU
        assert reg.dismiss(pid) == BUBBLE

    @pytest.mark.parametrize(
        "setup,illegal",
        [
            ([], "dismiss"),  # bubble: only select is legal
            ([], "begin"),
            ([], "end"),
            (["select"], "select"),  # menu: no re-select
            (["select"], "end"),
            (["select", "begin"], "select"),  # action-active: only end
            (["select", "begin"], "begin"),
            (["select", "begin"], "dismiss"),
        ],
    )
    def test_illegal_transitions_raise_without_mutation(self, setup, illegal):
        reg = ProxyRegistry()
        pid, _ = upsert(reg)
        ops = {
            "select": lambda: reg.select(pid),
            "dismiss": lambda: reg.dismiss(pid),
            "begin": lambda: reg.begin_action(pid, "info"),
            "end": lambda: reg.end_action(pid),
        }
        for op in setup:
            ops[op]()
        before = reg.get(pid).state
        with pytest.raises(StateTransitionError):
            ops[illegal]()
        assert reg.get(pid).state == before

    def test_unknown_proxy(self):
        reg = ProxyRegistry()
        with pytest.raises(UnknownProxyError):
            reg.select("p999")

    def test_state_encoding_round_trip(self):
        for state in (BUBBLE, MENU, ProxyState(StateKind.ACTION, "compare")):
            assert ProxyState.decode(state.encode()) == state

    def test_action_state_requires_action_id(self):
        with pytest.raises(ValueError):
            ProxyState(StateKind.ACTION)
        with pytest.raises(ValueError):
            ProxyState(StateKind.BUBBLE, "info")


class TestMark:
    def test_mark_sets_exactly(self):
        reg = ProxyRegistry()
        a, _ = upsert(reg, pos=(0.0, 0.0, 1.0))
        b, _ = upsert(reg, pos=(1.0, 0.0, 1.0))
        c, _ = upsert(reg, pos=(2.0, 0.0, 1.0))
        reg.mark([a, c])
        assert reg.marked_ids() == [a, c]
        reg.mark([b])
        assert reg.marked_ids() == [b]

    def test_unknown_id_rejected_before_any_change(self):
        reg = ProxyRegistry()
        a, _ = upsert(reg)
        reg.mark([a])
        with pytest.raises(UnknownProxyError):
            reg.mark([a, "p999"])
        assert reg.marked_ids() == [a]


class TestLocalize:
    def test_raycast_at_bbox_center(self):
        k = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
        df = DepthFrame.from_meters(np.full((48, 64), 2.0))
        d = Detection(label="cup", confidence=0.9, bbox=Rect(30, 20, 20, 16), frame_index=0)
        # center (40, 28): x = (40-32)*2/100 = 0.16, y = (28-24)*2/100 = 0.08
        w = localize(d, df, k, Pose.identity())
        assert w.x == pytest.approx(0.16)
        assert w.y == pytest.approx(0.08)
        assert w.z == pytest.approx(2.0)

    def test_center_on_edge_is_clamped(self):
        k = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
        df = DepthFrame.from_meters(np.full((48, 64), 1.0))
        d = Detection(label="cup", confidence=0.9, bbox=Rect(54, 38, 20, 20), frame_index=0)
        assert localize(d, df, k, Pose.identity()) is not None

    def test_invalid_depth_returns_none(self):
        k = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
        df = DepthFrame.from_meters(np.zeros((48, 64)))
        d = Detection(label="cup", confidence=0.9, bbox=Rect(10, 10, 10, 10), frame_index=0)
        assert localize(d, df, k, Pose.identity()) is None
