"""Camera math: hand-computed cases first, then property checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aor.errors import InvalidDepthError, OutOfBoundsError
from aor.geometry import (
    CameraIntrinsics,
    DepthFrame,
    PixelPoint,
    Pose,
    WorldPoint,
    backproject,
    project,
    raycast_to_world,
    sample_depth,
)

K = CameraIntrinsics(fx=500.0, fy=480.0, cx=320.0, cy=240.0, width=640, height=480)

# rotation by +90 degrees about z: x -> y
ROT_Z90 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


class TestBackproject:
    def test_hand_computed_point(self):
        # x = (400 - 320) * 2.0 / 500 = 0.32
        # y = (300 - 240) * 2.0 / 480 = 0.25
        p = backproject(PixelPoint(400.0, 300.0), 2.0, K)
        assert p.x == pytest.approx(0.32, abs=1e-12)
        assert p.y == pytest.approx(0.25, abs=1e-12)
        assert p.z == 2.0

    def test_principal_point_maps_to_axis(self):
        p = backproject(PixelPoint(320.0, 240.0), 1.5, K)
        assert p.x == 0.0 and p.y == 0.0 and p.z == 1.5

    def test_rejects_nonpositive_depth(self):
        with pytest.raises(InvalidDepthError):
            backproject(PixelPoint(10.0, 10.0), 0.0, K)
        with pytest.raises(InvalidDepthError):
            backproject(PixelPoint(10.0, 10.0), -1.0, K)
        with pytest.raises(InvalidDepthError):
            backproject(PixelPoint(10.0, 10.0), float("nan"), K)

    def test_rejects_out_of_frame_pixel(self):
        with pytest.raises(OutOfBoundsError):
            backproject(PixelPoint(640.0, 10.0), 1.0, K)
        with pytest.raises(OutOfBoundsError):
            backproject(PixelPoint(-0.01, 10.0), 1.0, K)


class TestProject:
    def test_identity_pose_hand_values(self):
        # u = 500 * 0.32 / 2.0 + 320 = 400;  v = 480 * 0.25 / 2.0 + 240 = 300
        pix = project(WorldPoint(0.32, 0.25, 2.0), Pose.identity(), K)
        assert pix.u == pytest.approx(400.0, abs=1e-9)
        assert pix.v == pytest.approx(300.0, abs=1e-9)

    def test_point_behind_camera_is_none(self):
        assert project(WorldPoint(0.0, 0.0, -0.1), Pose.identity(), K) is None
        assert project(WorldPoint(0.0, 0.0, 0.0), Pose.identity(), K) is None

    def test_translated_pose(self):
        pose = Pose(np.eye(3), np.array([0.5, 0.0, 0.0]))
        # camera-frame x = 0.82 - 0.5 = 0.32 at z = 2
        pix = project(WorldPoint(0.82, 0.25, 2.0), pose, K)
        assert pix.u == pytest.approx(400.0, abs=1e-9)

    def test_rotated_pose_hand_values(self):
        pose = Pose(ROT_Z90, np.array([1.0, 2.0, 3.0]))
        # world (0.75, 2.32, 5.0): subtract t -> (-0.25, 0.32, 2.0),
        # R^T rotates by -90: (0.32, 0.25, 2.0) -> pixel (400, 300)
        pix = project(WorldPoint(0.75, 2.32, 5.0), pose, K)
        assert pix.u == pytest.approx(400.0, abs=1e-9)
        assert pix.v == pytest.approx(300.0, abs=1e-9)


class TestPose:
    def test_to_world_hand_values(self):
        pose = Pose(ROT_Z90, np.array([1.0, 2.0, 3.0]))
        w = pose.to_world((0.32, 0.25, 2.0))
        # R @ (0.32, 0.25, 2.0) = (-0.25, 0.32, 2.0), plus t
        assert w.x == pytest.approx(0.75, abs=1e-12)
        assert w.y == pytest.approx(2.32, abs=1e-12)
        assert w.z == pytest.approx(5.0, abs=1e-12)

    def test_rejects_non_orthonormal_rotation(self):
        bad = np.eye(3) * 1.01
        with pytest.raises(ValueError):
            Pose(bad, np.zeros(3))

    def test_rejects_reflection(self):
        mirror = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError):
            Pose(mirror, np.zeros(3))

    def test_arrays_are_read_only(self):
        pose = Pose.identity()
        with pytest.raises(ValueError):
            pose.rotation[0, 0] = 2.0


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


class TestRoundTrip:
    def test_project_backproject_identity_pose(self):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            u = rng.uniform(0, K.width - 1e-6)
            v = rng.uniform(0, K.height - 1e-6)
            d = rng.uniform(0.05, 10.0)
            cam = backproject(PixelPoint(u, v), d, K)
            pix = project(WorldPoint(cam.x, cam.y, cam.z), Pose.identity(), K)
            assert math.hypot(pix.u - u, pix.v - v) < 1e-6

    def test_round_trip_under_rigid_motion(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            pose = Pose(random_rotation(rng), rng.uniform(-5, 5, size=3))
            u = rng.uniform(0, K.width - 1e-6)
            v = rng.uniform(0, K.height - 1e-6)
            d = rng.uniform(0.05, 10.0)
            w = pose.to_world(backproject(PixelPoint(u, v), d, K))
            pix = project(w, pose, K)
            assert pix is not None
            assert math.hypot(pix.u - u, pix.v - v) < 1e-6


class TestSampleDepth:
    def test_median_over_valid_neighbors(self):
        # 3x3 window at (1, 1): valid values {1.0, 2.0, 4.0} -> median 2.0
        depth = np.zeros((4, 4))
        depth[0, 0] = 1.0
        depth[1, 1] = 2.0
        depth[2, 2] = 4.0
        df = DepthFrame.from_meters(depth)
        assert sample_depth(df, PixelPoint(1.0, 1.0), window=3) == pytest.approx(2.0)

    def test_even_count_averages(self):
        depth = np.zeros((4, 4))
        depth[0, 0] = 1.0
        depth[2, 2] = 4.0
        df = DepthFrame.from_meters(depth)
        # valid set {1.0, 4.0} -> median 2.5
        assert sample_depth(df, PixelPoint(1.0, 1.0), window=3) == pytest.approx(2.5)

    def test_window_clipped_at_border(self):
        depth = np.zeros((6, 6))
        depth[0, 0] = 3.0
        df = DepthFrame.from_meters(depth)
        # 5x5 window at the corner only reaches rows/cols 0..2
        assert sample_depth(df, PixelPoint(0.0, 0.0), window=5) == pytest.approx(3.0)
        assert sample_depth(df, PixelPoint(5.0, 5.0), window=5) is None

    def test_all_invalid_returns_none(self):
        df = DepthFrame.from_meters(np.zeros((5, 5)))
        assert sample_depth(df, PixelPoint(2.0, 2.0)) is None

    def test_center_rounds_half_up(self):
        depth = np.zeros((1, 4))
        depth[0, 2] = 7.0
        df = DepthFrame.from_meters(depth)
        # u = 1.5 rounds to pixel 2, not 1
        assert sample_depth(df, PixelPoint(1.5, 0.0), window=1) == pytest.approx(7.0)
        assert sample_depth(df, PixelPoint(1.49, 0.0), window=1) is None

    def test_rejects_bad_window(self):
        df = DepthFrame.from_meters(np.ones((3, 3)))
        with pytest.raises(ValueError):
            sample_depth(df, PixelPoint(1.0, 1.0), window=4)

    def test_out_of_bounds_center(self):
        df = DepthFrame.from_meters(np.ones((3, 3)))
        with pytest.raises(OutOfBoundsError):
            sample_depth(df, PixelPoint(3.0, 1.0))


class TestRaycast:
    def test_hits_constant_plane(self):
        df = DepthFrame.from_meters(np.full((480, 640), 2.0))
        w = raycast_to_world(PixelPoint(400.0, 300.0), df, K, Pose.identity())
        assert w.x == pytest.approx(0.32)
        assert w.y == pytest.approx(0.25)
        assert w.z == pytest.approx(2.0)

    def test_invalid_neighborhood_is_none(self):
        df = DepthFrame.from_meters(np.zeros((480, 640)))
        assert raycast_to_world(PixelPoint(400.0, 300.0), df, K, Pose.identity()) is None


@given(
    u=st.floats(min_value=0, max_value=639.999),
    v=st.floats(min_value=0, max_value=479.999),
    d=st.floats(min_value=0.05, max_value=10.0),
)
@settings(max_examples=200, deadline=None)
def test_property_backproject_project_inverse(u, v, d):
    cam = backproject(PixelPoint(u, v), d, K)
    pix = project(WorldPoint(*cam), Pose.identity(), K)
    assert abs(pix.u - u) < 1e-6 and abs(pix.v - v) < 1e-6


@given(d=st.floats(min_value=0.01, max_value=50.0))
@settings(max_examples=100, deadline=None)
def test_property_depth_preserved(d):
    cam = backproject(PixelPoint(100.0, 100.0), d, K)
    assert cam.z == d
