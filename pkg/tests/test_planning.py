from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import straight_track
from frenet_racer.planning import (
    CubicPath,
    HeadingDegenerateError,
    PlannedTrajectory,
    PlannerConfig,
    plan,
    pure_pursuit_steer,
    scale_action,
    solve_cubic_path,
    straight_trajectory,
    velocity_command,
    velocity_constraint,
)
from frenet_racer.track import FrenetPose, to_cartesian, to_frenet
from frenet_racer.vehicle import VehicleConstraints, VehicleParams, VehicleState, step

C = VehicleConstraints()
P = VehicleParams()


def residuals(path: CubicPath, n0, psi0, n1):
    """Constraint residuals evaluated from the absolute coefficients."""
    A, B, Cc, D = path.coefficients
    f = lambda s: ((A * s + B) * s + Cc) * s + D  # noqa: E731
    fp = lambda s: (3 * A * s + 2 * B) * s + Cc  # noqa: E731
    s0, s1 = path.s0, path.s1
    return (f(s0) - n0, fp(s0) - math.tan(psi0), f(s1) - n1, fp(s1))


def test_zero_constraints_give_zero_path():
    path = solve_cubic_path(0.0, 0.0, 0.0, 2.0, 0.0)
    assert path.coefficients == (0.0, 0.0, 0.0, 0.0)


def test_cubic_against_independent_solve():
    path = solve_cubic_path(0.0, 0.3, 0.1, 2.0, -0.5)
    # Hermite form of the same cubic, written out by hand
    h, n0, m0, n1 = 2.0, 0.3, math.tan(0.1), -0.5
    a = (2 * (n0 - n1) + h * m0) / h**3
    b = (3 * (n1 - n0) - 2 * h * m0) / h**2
    assert path.coefficients == pytest.approx((a, b, m0, n0), abs=1e-12)
    assert path.offset(0.0) == pytest.approx(0.3, abs=1e-12)
    assert path.slope(0.0) == pytest.approx(0.10033, abs=1e-5)
    assert path.offset(2.0) == pytest.approx(-0.5, abs=1e-12)
    assert path.slope(2.0) == pytest.approx(0.0, abs=1e-12)


def test_translation_invariance():
    a = solve_cubic_path(0.0, 0.3, 0.1, 2.0, -0.5)
    b = solve_cubic_path(10.0, 0.3, 0.1, 12.0, -0.5)
    assert a.coefficients != pytest.approx(b.coefficients)
    u = np.linspace(0, 2, 41)
    assert np.allclose(a.offset(u), b.offset(10.0 + u), atol=1e-9, rtol=0)


def test_degenerate_heading():
    with pytest.raises(HeadingDegenerateError):
        solve_cubic_path(0.0, 0.0, math.pi / 2, 2.0, 0.0)
    with pytest.raises(ValueError):
        solve_cubic_path(2.0, 0.0, 0.0, 2.0, 0.0)


@settings(max_examples=300, deadline=None)
@given(s0=st.floats(0.0, 250.0), n0=st.floats(-1.0, 1.0), psi0=st.floats(-1.4, 1.4),
       n1=st.floats(-1.0, 1.0))
def test_cubic_residuals_property(s0, n0, psi0, n1):
    path = solve_cubic_path(s0, n0, psi0, s0 + 2.0, n1)
    local = (path.offset(s0) - n0, path.slope(s0) - math.tan(psi0),
             path.offset(s0 + 2.0) - n1, path.slope(s0 + 2.0))
    assert max(abs(r) for r in local) <= 1e-9


def test_absolute_coefficients_small_s():
    path = solve_cubic_path(1.5, 0.2, -0.3, 3.5, 0.1)
    assert max(abs(r) for r in residuals(path, 0.2, -0.3, 0.1)) <= 1e-9


# ------------------------------------------------------------------ plan


def test_action_scaling():
    assert scale_action(-1.0, 3.0, 5.0) == 3.0
    assert scale_action(1.0, 3.0, 5.0) == 5.0
    assert scale_action(0.0, -2.0, 2.0) == 0.0
    assert scale_action(7.0, 3.0, 5.0) == 5.0


def test_plan_examples():
    track = straight_track(half_width=0.8)
    traj = plan(FrenetPose(3.0, 0.0, 0.0), 0.0, 1.0, track, C)
    assert traj.v_d == 5.0
    assert np.allclose(traj.points[:, 1], 0.0)
    assert plan(FrenetPose(3.0, 0.0, 0.0), 0.0, -1.0, track, C).v_d == 3.0
    traj = plan(FrenetPose(3.0, 0.0, 0.0), 1.0, 0.0, track, C)
    x, y, _ = to_cartesian(track, 5.0, 0.65)
    assert np.hypot(*(traj.points[-1] - (x, y))) <= 1e-6
    assert traj.points.shape == (PlannerConfig().n_samples, 2)
    assert np.all(np.hypot(*np.diff(traj.points, axis=0).T) > 0)


def test_plan_propagates_degenerate_heading():
    track = straight_track()
    with pytest.raises(HeadingDegenerateError):
        plan(FrenetPose(3.0, 0.0, 2.0), 0.0, 0.0, track, C)


def test_straight_fallback():
    traj = straight_trajectory(1.0, 2.0, math.pi / 2, 4.0)
    assert traj.points[-1] == pytest.approx((1.0, 4.0))
    with pytest.raises(ValueError):
        PlannedTrajectory(np.zeros((1, 2)), 4.0)


def test_plan_stays_in_margin_corridor(porto):
    cfg = PlannerConfig()
    rng = np.random.default_rng(0)
    for _ in range(300):
        s = rng.uniform(0, porto.total_length)
        wl, wr = porto.half_widths(s)
        pose = FrenetPose(s, rng.uniform(-wr, wl), rng.uniform(-1.5, 1.5))
        traj = plan(pose, rng.uniform(-1, 1), rng.uniform(-1, 1), porto, C, cfg)
        for (sf, nf), (x, y) in zip(traj.frenet, traj.points):
            left, right = porto.half_widths(sf)
            assert -(right - cfg.margin) - 1e-12 <= nf <= left - cfg.margin + 1e-12
            back = to_frenet(porto, x, y, 0.0, s_hint=sf)
            l2, r2 = porto.half_widths(back.s)
            assert -(r2 - cfg.margin) - 1e-6 <= back.n <= l2 - cfg.margin + 1e-6


# ------------------------------------------------------------------ pure pursuit


def _line(length=40.0):
    xs = np.arange(0.0, length, 0.1)
    return PlannedTrajectory(np.stack([xs, np.zeros_like(xs)], axis=1), 3.0)


def test_pure_pursuit_aligned_is_zero():
    assert pure_pursuit_steer(_line(), 1.0, 0.0, 0.0, P.wheelbase, 0.6, C) == 0.0


def test_pure_pursuit_formula():
    path = PlannedTrajectory(np.array([[0.0, 0.0], [math.sqrt(1 - 0.01), 0.1]]), 3.0)
    delta = pure_pursuit_steer(path, 0.0, 0.0, 0.0, 0.33029, 1.0, C)
    assert delta == pytest.approx(math.atan(0.33029 * 0.2), abs=1e-12)
    assert delta == pytest.approx(0.0660, abs=1e-4)


def test_pure_pursuit_clamps():
    path = PlannedTrajectory(np.array([[0.0, 0.0], [0.1, 0.6]]), 3.0)
    assert pure_pursuit_steer(path, 0.0, 0.0, 0.0, P.wheelbase, 0.6, C) == 0.4189
    path = PlannedTrajectory(np.array([[0.0, 0.0], [0.1, -0.6]]), 3.0)
    assert pure_pursuit_steer(path, 0.0, 0.0, 0.0, P.wheelbase, 0.6, C) == -0.4189


def test_pure_pursuit_degenerate():
    path = PlannedTrajectory(np.array([[0.0, 0.0], [0.0, 0.0]]), 3.0)
    assert pure_pursuit_steer(path, 0.0, 0.0, 0.0, P.wheelbase, 0.6, C) == 0.0


def regulate(offset=0.3, v=3.0, distance=12.0):
    path = _line()
    s = VehicleState(x=0.0, y=offset, v=v)
    xs, ys = [], []
    while s.x < distance:
        delta = pure_pursuit_steer(path, s.x, s.y, s.psi, P.wheelbase, 0.6, C)
        s = step(s, (velocity_command(v, s.v, 1.0, C), delta), P, C)
        xs.append(s.x)
        ys.append(s.y)
    return np.array(xs), np.array(ys)


def test_pure_pursuit_regulation():
    xs, ys = regulate()
    assert np.abs(ys[xs >= 5.0]).max() < 0.01
    assert abs(ys[-1]) <= abs(ys[xs >= 5.0][0]) + 1e-12


# ------------------------------------------------------------------ speed


def test_velocity_command_examples():
    assert velocity_command(4.0, 4.0, 1.0, C) == 0.0
    assert velocity_command(5.0, 4.0, 1.0, C) == pytest.approx(1.902)
    assert velocity_command(3.0, 4.0, 1.0, C) == pytest.approx(-3.17)


@settings(max_examples=200, deadline=None)
@given(v_d=st.floats(3.0, 5.0), v=st.floats(-5.0, 20.0), k=st.floats(0.01, 10.0))
def test_velocity_command_sign(v_d, v, k):
    a = velocity_command(v_d, v, k, C)
    assert np.sign(a) == np.sign(v_d - v)


def test_velocity_convergence():
    s = VehicleState(v=3.0)
    t = 0.0
    while t < 3.0 - 1e-9:
        s = step(s, (velocity_command(5.0, s.v, 1.0, C), 0.0), P, C)
        t += 0.01
    assert abs(s.v - 5.0) < 0.05


def test_velocity_constraint_examples():
    assert velocity_constraint(2.0, 5.0, C) == 0.0
    assert velocity_constraint(-1.0, 3.0, C) == 0.0
    assert velocity_constraint(2.0, 4.0, C) == 2.0


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-20, 20), v=st.floats(-5, 20))
def test_velocity_constraint_idempotent(a, v):
    once = velocity_constraint(a, v, C)
    assert velocity_constraint(once, v, C) == once
