"""
Racing environment wiring the agents to the simulator.

One agent decision is held for ``physics_per_action`` physics steps.  The
end-to-end agent commands (acceleration, steering angle) directly; the
partial end-to-end agent commands (lateral offset, desired speed) which
are turned into a cubic Frenet path tracked by pure pursuit and a
proportional speed controller.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .planning import (
    ControllerConfig,
    HeadingDegenerateError,
    PlannedTrajectory,
    PlannerConfig,
    plan,
    pure_pursuit_steer,
    scale_action,
    straight_trajectory,
    velocity_command,
    velocity_constraint,
)
from .td3 import RewardConstants, compute_reward
from .track import (
    FrenetPose,
    LidarConfig,
    OutOfCorridorError,
    TrackGeometry,
    centerline_progress,
    check_collision,
    lidar_scan,
    to_cartesian,
    to_frenet,
    wrap_angle,
)
from .vehicle import (
    MismatchSpec,
    VehicleConstraints,
    VehicleParams,
    VehicleState,
    apply_mismatch,
    step as vehicle_step,
)

ALGORITHMS = ("end_to_end", "partial")
RUNNING, CRASHED, LAP_COMPLETE, TIMEOUT = "running", "crashed", "lap_complete", "timeout"
OBS_DIM = 24
ACT_DIM = 2


class EpisodeDoneError(RuntimeError):
    """``step`` called on a finished (or never started) episode."""


@dataclass(frozen=True)
class EnvConfig:
    algorithm: str = "partial"
    dt: float = 0.01
    physics_per_action: int = 10
    timeout: float = 60.0
    vehicle_half_width: float = 0.1
    obs_noise_std: float = 0.01
    # "directional" blocks only acceleration that leaves the band; "literal"
    # zeroes any acceleration at or beyond the band edges.
    velocity_constraint_mode: str = "directional"
    lidar: LidarConfig = field(default_factory=LidarConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    reward: RewardConstants = field(default_factory=RewardConstants)

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not 0.0 < self.dt <= 0.02:
            raise ValueError("dt must lie in (0, 0.02]")
        if self.physics_per_action < 1:
            raise ValueError("physics_per_action must be >= 1")
        if self.timeout <= 0.0 or self.vehicle_half_width < 0.0 or self.obs_noise_std < 0.0:
            raise ValueError("timeout must be positive; half-width and noise non-negative")
        if self.velocity_constraint_mode not in ("directional", "literal"):
            raise ValueError("velocity_constraint_mode must be 'directional' or 'literal'")

    @property
    def agent_period(self) -> float:
        return self.dt * self.physics_per_action

    @property
    def obs_dim(self) -> int:
        return 4 + self.lidar.n_beams


def gate_acceleration(a: float, v: float, constraints: VehicleConstraints, mode: str) -> float:
    """Apply the allowable-velocity band in the configured mode."""
    if mode == "literal":
        return velocity_constraint(a, v, constraints)
    if (v >= constraints.v_max_allow and a > 0.0) or (v <= constraints.v_min_allow and a < 0.0):
        return 0.0
    return a


class RacingEnv:
    """Single-episode driver around one track; not safe for concurrent use."""

    def __init__(
        self,
        track: TrackGeometry,
        cfg: EnvConfig = EnvConfig(),
        params: VehicleParams = VehicleParams(),
        constraints: VehicleConstraints = VehicleConstraints(),
    ):
        if min(track.w_left.min(), track.w_right.min()) <= cfg.vehicle_half_width:
            raise ValueError("track is narrower than the vehicle somewhere")
        self.track = track
        self.cfg = cfg
        self.nominal = params
        self.constraints = constraints
        self.params = params
        self.mismatch = MismatchSpec()
        self.state = VehicleState()
        self.frenet = FrenetPose(0.0, 0.0, 0.0)
        self.status = TIMEOUT
        self.rng: np.random.Generator | None = None
        self.eval_mode = False
        self.distance = 0.0
        self.prev_distance = 0.0
        self.physics_steps = 0
        self.agent_steps = 0
        self.trajectory: PlannedTrajectory | None = None
        self.start_s = 0.0
        x0, y0, x1, y1 = track.bbox
        self._origin = np.array([x0, y0])
        self._extent = np.array([x1 - x0, y1 - y0])

    @property
    def algorithm(self) -> str:
        return self.cfg.algorithm

    @property
    def time(self) -> float:
        return self.physics_steps * self.cfg.dt

    def reset(
        self,
        rng: np.random.Generator,
        mismatch: MismatchSpec = MismatchSpec(),
        *,
        eval_mode: bool = False,
        start_s: float | None = None,
    ) -> np.ndarray:
        """Start an episode on the centerline at a uniformly random arclength."""
        self.rng = rng
        self.eval_mode = eval_mode
        self.mismatch = mismatch
        self.params = apply_mismatch(self.nominal, mismatch)
        s = float(rng.uniform(0.0, self.track.total_length)) if start_s is None else float(start_s)
        s = self.track.wrap_s(s)
        x, y, tangent = to_cartesian(self.track, s, 0.0)
        self.state = VehicleState(x, y, 0.0, self.constraints.v_min_allow, tangent, 0.0, 0.0)
        self.frenet = FrenetPose(s, 0.0, 0.0)
        self.start_s = s
        self.distance = 0.0
        self.prev_distance = 0.0
        self.physics_steps = 0
        self.agent_steps = 0
        self.trajectory = None
        self.status = RUNNING
        return self.build_observation(noise=eval_mode)

    def build_observation(self, noise: bool = False) -> np.ndarray:
        """Normalized pose, speed and LiDAR ranges, each in [0, 1]."""
        st = self.state
        obs = np.empty(self.cfg.obs_dim)
        obs[:2] = np.clip((np.array([st.x, st.y]) - self._origin) / self._extent, 0.0, 1.0)
        obs[2] = (wrap_angle(st.psi) + math.pi) / (2.0 * math.pi)
        obs[3] = min(max(st.v / self.constraints.v_max_allow, 0.0), 1.0)
        lidar = self.cfg.lidar
        ranges = lidar_scan(self.track, st.x, st.y, st.psi, lidar, self.rng)
        obs[4:] = ranges / lidar.max_range
        if noise and self.cfg.obs_noise_std > 0.0:
            obs = np.clip(obs + self.rng.normal(0.0, self.cfg.obs_noise_std, obs.shape), 0.0, 1.0)
        return obs

    def _advance(self, cmd: tuple[float, float]) -> bool:
        """One physics step; returns True on contact with the boundary."""
        self.state = vehicle_step(self.state, cmd, self.params, self.constraints, self.cfg.dt)
        self.physics_steps += 1
        st = self.state
        try:
            pose = to_frenet(self.track, st.x, st.y, st.psi, s_hint=self.frenet.s)
        except OutOfCorridorError:
            return True
        self.distance += centerline_progress(self.track, self.frenet.s, pose.s)
        self.frenet = pose
        return check_collision(self.track, pose, self.cfg.vehicle_half_width)

    def _check_running(self) -> None:
        if self.status != RUNNING:
            raise EpisodeDoneError(f"episode is {self.status}; call reset() first")

    def _finish(self, collided: bool, action) -> tuple[np.ndarray, float, bool, dict[str, Any]]:
        self.agent_steps += 1
        progress = self.distance - self.prev_distance
        reward = compute_reward(progress, collided, self.cfg.reward)
        self.prev_distance = self.distance
        lap_time = None
        if collided:
            self.status = CRASHED
        elif self.distance >= self.track.total_length:
            self.status = LAP_COMPLETE
            lap_time = self.physics_steps * self.cfg.dt
        elif self.time >= self.cfg.timeout - 1e-9:
            self.status = TIMEOUT
        obs = self.build_observation(noise=self.eval_mode)
        st = self.state
        info = {
            "status": self.status,
            "t": self.time,
            "x": st.x, "y": st.y, "psi": st.psi, "v": st.v,
            "s": self.frenet.s, "n": self.frenet.n,
            "action": [float(a) for a in action],
            "progress": progress,
            "distance": self.distance,
            "collided": collided,
            "terminal": collided,
            "lap_time": lap_time,
            "physics_steps": self.physics_steps,
        }
        return obs, reward, self.status != RUNNING, info

    def step(self, action) -> tuple[np.ndarray, float, bool, dict[str, Any]]:
        if self.cfg.algorithm == "end_to_end":
            return self.step_end_to_end(action)
        return self.step_partial(action)

    def step_end_to_end(self, action) -> tuple[np.ndarray, float, bool, dict[str, Any]]:
        """Scale the action to (acceleration, steering angle) and hold it for one agent period."""
        self._check_running()
        c = self.constraints
        a_d = scale_action(action[0], -c.a_max, c.a_max)
        delta_d = scale_action(action[1], c.delta_min, c.delta_max)
        collided = False
        for _ in range(self.cfg.physics_per_action):
            a = gate_acceleration(a_d, self.state.v, c, self.cfg.velocity_constraint_mode)
            if self._advance((a, delta_d)):
                collided = True
                break
        return self._finish(collided, action)

    def plan_trajectory(self, action) -> PlannedTrajectory:
        """Plan from the current pose, falling back when the heading is degenerate."""
        try:
            traj = plan(self.frenet, action[0], action[1], self.track, self.constraints,
                        self.cfg.planner)
        except HeadingDegenerateError:
            if self.trajectory is not None:
                return self.trajectory
            v_d = scale_action(action[1], self.constraints.v_min_allow, self.constraints.v_max_allow)
            st = self.state
            traj = straight_trajectory(st.x, st.y, st.psi, v_d, self.cfg.planner)
        return traj

    def step_partial(self, action) -> tuple[np.ndarray, float, bool, dict[str, Any]]:
        """Plan a path and speed, then track them with the classical controllers."""
        self._check_running()
        self.trajectory = self.plan_trajectory(action)
        c = self.constraints
        ctrl = self.cfg.controller
        wheelbase = self.nominal.wheelbase
        collided = False
        for _ in range(self.cfg.physics_per_action):
            st = self.state
            delta_d = pure_pursuit_steer(self.trajectory, st.x, st.y, st.psi, wheelbase,
                                         ctrl.lookahead, c)
            a_d = velocity_command(self.trajectory.v_d, st.v, ctrl.k_v, c)
            a = gate_acceleration(a_d, st.v, c, self.cfg.velocity_constraint_mode)
            if self._advance((a, delta_d)):
                collided = True
                break
        return self._finish(collided, action)


def env_config_from_dict(data: dict[str, Any]) -> EnvConfig:
    """Build an :class:`EnvConfig` from nested plain dictionaries."""
    data = dict(data)
    nested = {"lidar": LidarConfig, "planner": PlannerConfig,
              "controller": ControllerConfig, "reward": RewardConstants}
    for key, cls in nested.items():
        if key in data and isinstance(data[key], dict):
            data[key] = cls(**data[key])
    return EnvConfig(**data)


def env_config_to_dict(cfg: EnvConfig) -> dict[str, Any]:
    return dataclasses.asdict(cfg)
