from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import circle_track, straight_track
from oracles import CorridorOracle, nearest_on_polyline, ray_march
from frenet_racer.track import (
    LidarConfig,
    OutOfCorridorError,
    TrackGeometry,
    TrackParseError,
    TrackValidationError,
    bundled_track,
    centerline_progress,
    check_collision,
    FrenetPose,
    lidar_scan,
    load_track,
    to_cartesian,
    to_frenet,
    wrap_angle,
)


def _csv(rows, header="# x_m,y_m,w_tr_left_m,w_tr_right_m"):
    body = "\n".join(",".join(str(v) for v in r) for r in rows)
    return f"{header}\n{body}\n" if header else body + "\n"


# ------------------------------------------------------------------ loading


def test_straight_polyline_length_and_open():
    track = load_track(_csv([(0, 0, 1, 1), (1, 0, 1, 1), (2, 0, 1, 1)]))
    assert track.total_length == pytest.approx(2.0)
    assert not track.closed


def test_circle_length_close_to_circumference():
    ang = np.linspace(0, 2 * math.pi, 21)
    rows = [(5 * math.cos(a), 5 * math.sin(a), 1.0, 1.0) for a in ang]
    track = load_track(_csv(rows))
    assert track.closed
    assert track.centerline.shape[0] == 20
    assert abs(track.total_length - 2 * math.pi * 5) / (2 * math.pi * 5) <= 0.01


def test_bundled_lengths(tracks):
    expected = {"porto": 30.7, "barcelona": 236.8, "monaco": 178.3}
    for name, length in expected.items():
        assert tracks[name].total_length == pytest.approx(length, rel=0.05)
        assert tracks[name].closed


def test_header_reorders_columns():
    text = "x_m,y_m,w_tr_right_m,w_tr_left_m\n0,0,0.5,2\n1,0,0.5,2\n2,0,0.5,2\n"
    track = load_track(text)
    assert np.all(track.w_left == 2.0) and np.all(track.w_right == 0.5)


def test_parse_error_reports_line():
    text = _csv([(0, 0, 1, 1), (1, 0, 1, 1)]) + "2,zero,1,1\n"
    with pytest.raises(TrackParseError) as info:
        load_track(text)
    assert info.value.line == 4


def test_too_few_rows():
    with pytest.raises(TrackValidationError):
        load_track(_csv([(0, 0, 1, 1), (1, 0, 1, 1)]))


def test_self_intersecting_boundary_rejected():
    # a figure-eight centerline
    t = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    pts = np.stack([5 * np.sin(t), 5 * np.sin(t) * np.cos(t)], axis=1)
    w = np.full(len(t), 0.3)
    with pytest.raises(TrackValidationError):
        TrackGeometry(pts, w, w, closed=True)


def test_missing_bundled_track():
    with pytest.raises(FileNotFoundError):
        bundled_track("nowhere")


def test_assets_override(tmp_path, monkeypatch):
    (tmp_path / "tracks").mkdir()
    (tmp_path / "tracks" / "tiny.csv").write_text(_csv([(0, 0, 1, 1), (1, 0, 1, 1), (2, 0, 1, 1)]))
    monkeypatch.setenv("FRENET_RACER_ASSETS", str(tmp_path))
    assert bundled_track("tiny").total_length == pytest.approx(2.0)


# ------------------------------------------------------------------ frenet


def test_straight_examples(straight):
    assert to_frenet(straight, 4.0, 0.5, 0.0) == pytest.approx((4.0, 0.5, 0.0))
    assert to_frenet(straight, 0.0, 0.0, 0.0) == pytest.approx((0.0, 0.0, 0.0))
    assert to_cartesian(straight, 1.5, -0.25) == pytest.approx((1.5, -0.25, 0.0))
    assert to_cartesian(straight, 0.0, 0.0) == pytest.approx((0.0, 0.0, 0.0))


def test_left_normal_is_positive(straight):
    assert to_frenet(straight, 3.0, 0.2, 0.0).n > 0.0
    assert to_frenet(straight, 3.0, -0.2, 0.0).n < 0.0


def test_heading_wraps(straight):
    pose = to_frenet(straight, 3.0, 0.0, 3 * math.pi / 2)
    assert pose.psi == pytest.approx(-math.pi / 2)
    assert to_frenet(straight, 3.0, 0.0, -math.pi).psi == pytest.approx(math.pi)


def test_wrap_on_closed_loop():
    track = circle_track(radius=10 / (2 * math.pi), n=64, half_width=0.3)
    L = track.total_length
    assert to_cartesian(track, 2.5 + L, 0.1) == pytest.approx(to_cartesian(track, 2.5, 0.1))


def test_out_of_corridor(straight):
    with pytest.raises(OutOfCorridorError):
        to_frenet(straight, 5.0, 2.5, 0.0)


def test_circle_round_trip_against_nearest_point(circle):
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = rng.uniform(0, circle.total_length)
        n = rng.uniform(-0.95, 0.95)
        x, y, _ = to_cartesian(circle, s, n)
        pose = to_frenet(circle, x, y, 0.0)
        xr, yr, _ = to_cartesian(circle, pose.s, pose.n)
        assert math.hypot(xr - x, yr - y) <= 1e-6
        dist, s_near = nearest_on_polyline(circle, x, y)
        # the foot point lies on the polyline, so |n| is never below the exact distance
        assert abs(pose.n) >= dist - 1e-9
        assert abs(pose.n) - dist <= 0.02


@pytest.mark.parametrize("name", ["porto", "barcelona", "monaco", "test_oval"])
def test_round_trip_bundled(tracks, name):
    track = tracks[name]
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(300):
        s = rng.uniform(0, track.total_length)
        wl, wr = track.half_widths(s)
        n = rng.uniform(-0.999 * wr, 0.999 * wl)
        x, y, _ = to_cartesian(track, s, n)
        pose = to_frenet(track, x, y, 0.0)
        xr, yr, _ = to_cartesian(track, pose.s, pose.n)
        worst = max(worst, math.hypot(xr - x, yr - y))
        assert pose.n == pytest.approx(n, abs=1e-6)
    assert worst <= 1e-6


def test_hint_matches_global_search(porto):
    rng = np.random.default_rng(2)
    for _ in range(300):
        s = rng.uniform(0, porto.total_length)
        n = rng.uniform(-0.75, 0.75)
        x, y, _ = to_cartesian(porto, s, n)
        hint = porto.wrap_s(s + rng.uniform(-0.3, 0.3))
        a = to_frenet(porto, x, y, 0.4)
        b = to_frenet(porto, x, y, 0.4, s_hint=hint)
        assert b.n == pytest.approx(a.n, abs=1e-9)
        assert centerline_progress(porto, a.s, b.s) == pytest.approx(0.0, abs=1e-9)
        assert b.psi == pytest.approx(a.psi, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0.0, 19.999), n=st.floats(-0.99, 0.99), h=st.floats(-10.0, 10.0))
def test_straight_round_trip_property(s, n, h):
    track = straight_track()
    x, y, tangent = to_cartesian(track, s, n)
    pose = to_frenet(track, x, y, h)
    assert pose.s == pytest.approx(s, abs=1e-9)
    assert pose.n == pytest.approx(n, abs=1e-9)
    assert pose.psi == pytest.approx(wrap_angle(h - tangent), abs=1e-9)
    assert -math.pi < pose.psi <= math.pi


# ------------------------------------------------------------------ lidar


def test_lidar_perpendicular_beams(straight):
    cfg = LidarConfig(n_beams=3, fov=math.pi, max_range=10.0)
    ranges = lidar_scan(straight, 10.0, 0.0, 0.0, cfg)
    assert ranges[0] == pytest.approx(1.0)
    assert ranges[2] == pytest.approx(1.0)
    assert ranges[1] == pytest.approx(10.0)


def test_lidar_saturates():
    track = straight_track(length=200.0, step=10.0)
    cfg = LidarConfig(max_range=10.0)
    ranges = lidar_scan(track, 5.0, 0.0, 0.0, cfg)
    assert ranges[10] == 10.0 or ranges[9] == 10.0
    assert ranges.max() == 10.0


def test_lidar_noise_clamped_and_seeded(porto):
    cfg = LidarConfig(noise_std=5.0)
    x, y, h = to_cartesian(porto, 3.0, 0.0)
    a = lidar_scan(porto, x, y, h, cfg, np.random.default_rng(4))
    b = lidar_scan(porto, x, y, h, cfg, np.random.default_rng(4))
    assert np.array_equal(a, b)
    assert a.min() >= 0.0 and a.max() <= cfg.max_range
    with pytest.raises(ValueError):
        lidar_scan(porto, x, y, h, cfg)


def test_lidar_on_boundary_reads_zero(straight):
    ranges = lidar_scan(straight, 5.0, 1.0, 0.0, LidarConfig())
    assert ranges.min() == pytest.approx(0.0, abs=1e-12)


def test_lidar_matches_ray_march(porto):
    cfg = LidarConfig()
    oracle = CorridorOracle(porto)
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = rng.uniform(0, porto.total_length)
        x, y, tangent = to_cartesian(porto, s, rng.uniform(-0.6, 0.6))
        heading = tangent + rng.uniform(-0.5, 0.5)
        ranges = lidar_scan(porto, x, y, heading, cfg)
        for angle, r in zip(heading + cfg.beam_offsets, ranges):
            assert abs(ray_march(oracle, x, y, angle, cfg.max_range) - r) <= 2e-3


# ------------------------------------------------------------------ collision / progress


def test_collision_examples():
    w = np.full(3, 0.8)
    track = TrackGeometry(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), w, w, closed=False)
    assert not check_collision(track, FrenetPose(1.0, 0.0, 0.0), 0.15)
    assert check_collision(track, FrenetPose(1.0, 0.8, 0.0), 0.0)
    assert not check_collision(track, FrenetPose(1.0, 0.6, 0.0), 0.15)
    assert check_collision(track, FrenetPose(1.0, 0.7, 0.0), 0.15)
    assert check_collision(track, FrenetPose(1.0, -0.7, 0.0), 0.15)


def test_collision_uses_interpolated_width():
    track = TrackGeometry(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
                          np.array([1.0, 2.0, 2.0]), np.array([1.0, 1.0, 1.0]), closed=False)
    assert track.half_widths(0.5) == pytest.approx((1.5, 1.0))
    assert not check_collision(track, FrenetPose(0.5, 1.4, 0.0), 0.0)
    assert check_collision(track, FrenetPose(0.5, 1.5, 0.0), 0.0)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0.0, 20.0), n=st.floats(-2.0, 2.0), extra=st.floats(0.0, 1.0), hw=st.floats(0.0, 0.3))
def test_collision_monotone_in_offset(s, n, extra, hw):
    track = straight_track()
    if check_collision(track, FrenetPose(s, n, 0.0), hw):
        bigger = math.copysign(abs(n) + extra, n)
        assert check_collision(track, FrenetPose(s, bigger, 0.0), hw)


def test_progress_examples():
    track = circle_track(radius=30.7 / (2 * math.pi), n=200)
    L = track.total_length
    assert centerline_progress(track, 5.0, 5.4) == pytest.approx(0.4)
    assert centerline_progress(track, L - 0.2, 0.3) == pytest.approx(0.5)
    assert centerline_progress(track, 5.0, 4.8) == pytest.approx(-0.2)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.0, 30.0), b=st.floats(0.0, 30.0))
def test_progress_bounded_by_half_lap(a, b):
    track = circle_track(radius=30.7 / (2 * math.pi), n=50)
    L = track.total_length
    d = centerline_progress(track, a % L, b % L)
    assert abs(d) <= L / 2 + 1e-12


def test_progress_sums_to_lap(porto):
    s = np.linspace(0.0, porto.total_length, 997) + 3.3
    s = np.mod(s, porto.total_length)
    total = sum(centerline_progress(porto, a, b) for a, b in zip(s[:-1], s[1:]))
    assert total == pytest.approx(porto.total_length, abs=1e-6)
