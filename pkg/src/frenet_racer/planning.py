"""
Cubic Frenet path planner and the classical tracking layer.

The planner turns two normalized agent outputs into a short trajectory: a
cubic lateral-offset profile over the next two meters of centerline and a
single desired speed.  Pure pursuit follows the path and a proportional
law tracks the speed; the allowable-velocity band then gates acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .track import FrenetPose, TrackGeometry, to_cartesian
from .vehicle import VehicleConstraints


class HeadingDegenerateError(ValueError):
    """Relative heading of +-pi/2 or beyond; the initial slope is undefined."""


@dataclass(frozen=True)
class PlannerConfig:
    horizon: float = 2.0
    n_samples: int = 20
    margin: float = 0.15

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.margin < 0.0:
            raise ValueError("margin must be non-negative")


@dataclass(frozen=True)
class ControllerConfig:
    lookahead: float = 0.6
    k_v: float = 1.0

    def __post_init__(self) -> None:
        if self.lookahead <= 0.0:
            raise ValueError("lookahead must be positive")
        if self.k_v <= 0.0:
            raise ValueError("k_v must be positive")


@dataclass(frozen=True)
class CubicPath:
    """
    Lateral offset ``f(s) = A s^3 + B s^2 + C s + D`` on ``[s0, s1]``.

    The polynomial is also kept in the shifted variable ``u = s - s0``
    (``a, b, c, d``), which is what :meth:`offset` and :meth:`slope`
    evaluate: far along a long track the absolute form loses digits to
    cancellation.
    """

    s0: float
    s1: float
    a: float
    b: float
    c: float
    d: float

    @property
    def A(self) -> float:
        return self.a

    @property
    def B(self) -> float:
        return self.b - 3.0 * self.a * self.s0

    @property
    def C(self) -> float:
        s0 = self.s0
        return self.c - 2.0 * self.b * s0 + 3.0 * self.a * s0 * s0

    @property
    def D(self) -> float:
        s0 = self.s0
        return self.d - self.c * s0 + self.b * s0 * s0 - self.a * s0 ** 3

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return self.A, self.B, self.C, self.D

    def offset(self, s):
        u = np.asarray(s, dtype=float) - self.s0
        return ((self.a * u + self.b) * u + self.c) * u + self.d

    def slope(self, s):
        u = np.asarray(s, dtype=float) - self.s0
        return (3.0 * self.a * u + 2.0 * self.b) * u + self.c


def solve_cubic_path(s0: float, n0: float, psi0: float, s1: float, n1: float) -> CubicPath:
    """
    Cubic through ``(s0, n0)`` with slope ``tan(psi0)``, ending at ``(s1, n1)``
    parallel to the centerline.

    Raises
    ------
    HeadingDegenerateError
        If ``|psi0| >= pi/2``.
    """
    if not s1 > s0:
        raise ValueError("s1 must exceed s0")
    if abs(psi0) >= 0.5 * math.pi:
        raise HeadingDegenerateError(f"|psi0| = {abs(psi0):.4f} >= pi/2")
    h = s1 - s0
    system = np.array([
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [h ** 3, h ** 2, h, 1.0],
        [3.0 * h ** 2, 2.0 * h, 1.0, 0.0],
    ])
    rhs = np.array([n0, math.tan(psi0), n1, 0.0])
    a, b, c, d = np.linalg.solve(system, rhs)
    return CubicPath(float(s0), float(s1), float(a), float(b), float(c), float(d))


@dataclass(frozen=True, eq=False)
class PlannedTrajectory:
    points: NDArray[np.float64]
    v_d: float
    frenet: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("a trajectory needs at least two 2D points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def scale_action(action: float, low: float, high: float) -> float:
    """Map ``[-1, 1]`` linearly onto ``[low, high]``."""
    action = min(max(float(action), -1.0), 1.0)
    return low + 0.5 * (action + 1.0) * (high - low)


def plan(
    frenet: FrenetPose,
    lateral_action: float,
    velocity_action: float,
    track: TrackGeometry,
    constraints: VehicleConstraints,
    cfg: PlannerConfig = PlannerConfig(),
) -> PlannedTrajectory:
    """
    Build the trajectory for one agent decision.

    The end offset spans the corridor shrunk by ``cfg.margin`` at ``s1``.
    Samples of the cubic are clamped to the same shrunk corridor, so a
    path that starts near a boundary, or bulges while turning back from an
    outward heading, still stays inside.
    """
    s0 = frenet.s
    s1 = s0 + cfg.horizon
    wl, wr = track.half_widths(s1)
    n1 = scale_action(lateral_action, -(wr - cfg.margin), wl - cfg.margin)
    v_d = scale_action(velocity_action, constraints.v_min_allow, constraints.v_max_allow)
    path = solve_cubic_path(s0, frenet.n, frenet.psi, s1, n1)

    s_samples = np.linspace(s0, s1, cfg.n_samples)
    offsets = path.offset(s_samples)
    frenet_pts = np.empty((cfg.n_samples, 2))
    points = np.empty((cfg.n_samples, 2))
    for k, (s, n) in enumerate(zip(s_samples, offsets)):
        left, right = track.half_widths(s)
        n = min(max(float(n), -(right - cfg.margin)), left - cfg.margin)
        frenet_pts[k] = (s, n)
        x, y, _ = to_cartesian(track, s, n)
        points[k] = (x, y)
    return PlannedTrajectory(points, v_d, frenet_pts)


def straight_trajectory(x: float, y: float, heading: float, v_d: float,
                        cfg: PlannerConfig = PlannerConfig()) -> PlannedTrajectory:
    """Fallback path: ``cfg.horizon`` meters straight along the current heading."""
    dist = np.linspace(0.0, cfg.horizon, cfg.n_samples)
    pts = np.stack([x + dist * math.cos(heading), y + dist * math.sin(heading)], axis=1)
    return PlannedTrajectory(pts, v_d)


def pure_pursuit_steer(
    path: PlannedTrajectory,
    x: float,
    y: float,
    heading: float,
    wheelbase: float,
    lookahead: float,
    constraints: VehicleConstraints,
) -> float:
    """
    Pure pursuit steering angle toward the lookahead point.

    The goal is the first path point, scanning forward from the point
    nearest the vehicle, that lies at least ``lookahead`` away; the last
    point is used when none does.
    """
    pts = path.points
    dx = pts[:, 0] - x
    dy = pts[:, 1] - y
    dist2 = dx * dx + dy * dy
    start = int(np.argmin(dist2))
    far = np.nonzero(dist2[start:] >= lookahead * lookahead)[0]
    k = start + int(far[0]) if far.size else pts.shape[0] - 1
    L2 = float(dist2[k])
    if L2 < 1e-12:
        return 0.0
    y_local = -math.sin(heading) * dx[k] + math.cos(heading) * dy[k]
    curvature = 2.0 * y_local / L2
    delta = math.atan(wheelbase * curvature)
    return min(max(delta, constraints.delta_min), constraints.delta_max)


def velocity_command(v_d: float, v: float, k_v: float, constraints: VehicleConstraints) -> float:
    """Proportional speed law with asymmetric gains for speeding up and slowing down."""
    if v_d >= v:
        return k_v * constraints.a_max / constraints.v_max_allow * (v_d - v)
    return k_v * constraints.a_max / constraints.v_min_allow * (v_d - v)


def velocity_constraint(a_long_d: float, v: float, constraints: VehicleConstraints) -> float:
    """Zero the acceleration outside the allowable band, braking included."""
    if v >= constraints.v_max_allow:
        return 0.0
    if v <= constraints.v_min_allow:
        return 0.0
    return a_long_d
