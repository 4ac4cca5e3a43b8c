import numpy as np
import pytest

from aor.geometry import CameraIntrinsics
from aor.scene import ColorFrame, CropImage, Rect, load_scene

from pathlib import Path

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def desk_scene():
    return load_scene(FIXTURES / "scenes" / "desk")


@pytest.fixture(scope="session")
def box_scene():
    return load_scene(FIXTURES / "scenes" / "synthetic-box")


@pytest.fixture
def intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fx=500.0, fy=480.0, cx=320.0, cy=240.0, width=640, height=480)


def make_crop(w: int = 8, h: int = 6, value: int = 50, frame_index: int = 0, x: int = 0, y: int = 0) -> CropImage:
    pixels = np.full((h, w, 3), value, dtype=np.uint8)
    return CropImage(frame_index=frame_index, bbox=Rect(x, y, w, h), pixels=pixels)


def make_frame(w: int = 64, h: int = 48, value: int = 90) -> ColorFrame:
    return ColorFrame.from_array(np.full((h, w, 3), value, dtype=np.uint8))
