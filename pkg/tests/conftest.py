from __future__ import annotations

import math

import numpy as np
import pytest

from frenet_racer.track import BUNDLED_TRACKS, TrackGeometry, bundled_track


def straight_track(length: float = 20.0, half_width: float = 1.0, step: float = 1.0) -> TrackGeometry:
    xs = np.arange(0.0, length + 1e-9, step)
    pts = np.stack([xs, np.zeros_like(xs)], axis=1)
    w = np.full(len(xs), half_width)
    return TrackGeometry(pts, w, w, closed=False, name="straight")


def circle_track(radius: float = 5.0, n: int = 20, half_width: float = 1.0) -> TrackGeometry:
    ang = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    w = np.full(n, half_width)
    return TrackGeometry(pts, w, w, closed=True, name="circle")


@pytest.fixture(scope="session")
def tracks() -> dict[str, TrackGeometry]:
    return {name: bundled_track(name) for name in BUNDLED_TRACKS}


@pytest.fixture(scope="session")
def porto(tracks) -> TrackGeometry:
    return tracks["porto"]


@pytest.fixture
def straight() -> TrackGeometry:
    return straight_track()


@pytest.fixture
def circle() -> TrackGeometry:
    return circle_track()
