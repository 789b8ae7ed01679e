"""
Single-track (bicycle) vehicle dynamics with actuator constraints.

The model follows the CommonRoad single-track formulation: linear tire
forces proportional to cornering stiffness, road friction and the
axle loads (including longitudinal load transfer through the CoG height).
Below 0.5 m/s the kinematic single-track model referenced to the CoG is
used, and the two are blended linearly over [0.5, 1.0] m/s.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

GRAVITY = 9.81
KINEMATIC_BELOW = 0.5
DYNAMIC_ABOVE = 1.0


class IntegrationBlowupError(FloatingPointError):
    """Non-finite state produced by the integrator."""

    def __init__(self, message: str, state: "VehicleState"):
        super().__init__(f"{message}: {state}")
        self.state = state


def _check_positive(obj, names) -> None:
    for name in names:
        value = getattr(obj, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ValueError(f"{type(obj).__name__}.{name} must be positive and finite, got {value!r}")


class _Serializable:
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class VehicleParams(_Serializable):
    """Physical parameters identified for a standard F1tenth car."""

    m: float = 3.74
    I_z: float = 0.04712
    l_f: float = 0.1587
    l_r: float = 0.17145
    h_cg: float = 0.074
    C_Sf: float = 4.718
    C_Sr: float = 5.4562
    mu: float = 1.0489

    def __post_init__(self) -> None:
        _check_positive(self, ("m", "I_z", "l_f", "l_r", "h_cg", "C_Sf", "C_Sr", "mu"))

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r


@dataclass(frozen=True)
class VehicleConstraints(_Serializable):
    delta_min: float = -0.4189
    delta_max: float = 0.4189
    ddelta_min: float = -3.2
    ddelta_max: float = 3.2
    v_min_model: float = -5.0
    v_max_model: float = 20.0
    a_max: float = 9.51
    v_switch: float = 7.319
    v_max_allow: float = 5.0
    v_min_allow: float = 3.0

    def __post_init__(self) -> None:
        if not self.delta_min < 0.0 < self.delta_max:
            raise ValueError("steering bounds must straddle zero")
        if not self.ddelta_min < 0.0 < self.ddelta_max:
            raise ValueError("steering-rate bounds must straddle zero")
        if not self.v_min_allow < self.v_max_allow <= self.v_max_model:
            raise ValueError("need v_min_allow < v_max_allow <= v_max_model")
        if self.v_min_model >= self.v_max_model:
            raise ValueError("need v_min_model < v_max_model")
        _check_positive(self, ("a_max", "v_switch"))


class VehicleState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    delta: float = 0.0
    v: float = 0.0
    psi: float = 0.0
    psi_dot: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class MismatchSpec(_Serializable):
    """
    Perturbation applied to the nominal parameters at evaluation time.

    ``added_mass`` is ``(mass_kg, position_m)`` with the position measured
    forward from the rear axle.
    """

    mu_override: float | None = None
    c_sf_scale: float = 1.0
    c_sr_scale: float = 1.0
    added_mass: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.added_mass is not None:
            object.__setattr__(self, "added_mass", tuple(float(v) for v in self.added_mass))

    def is_nominal(self) -> bool:
        return (self.mu_override is None and self.c_sf_scale == 1.0
                and self.c_sr_scale == 1.0 and self.added_mass is None)

    def validate(self, wheelbase: float) -> None:
        if self.mu_override is not None and not 0.0 < self.mu_override <= 2.0:
            raise ValueError(f"mu_override must lie in (0, 2], got {self.mu_override}")
        for name in ("c_sf_scale", "c_sr_scale"):
            value = getattr(self, name)
            if not 0.5 <= value <= 2.0:
                raise ValueError(f"{name} must lie in [0.5, 2], got {value}")
        if self.added_mass is not None:
            if len(self.added_mass) != 2:
                raise ValueError("added_mass must be (mass, position)")
            mass, pos = self.added_mass
            if mass < 0.0:
                raise ValueError("added mass must be non-negative")
            if not 0.0 <= pos <= wheelbase:
                raise ValueError(f"mass position must lie in [0, {wheelbase}], got {pos}")


def apply_mismatch(nominal: VehicleParams, spec: MismatchSpec) -> VehicleParams:
    """
    Build the evaluation parameter set.

    An added point mass moves the CoG along the axis (wheelbase preserved)
    and raises the yaw inertia via the parallel-axis theorem.  The mass is
    assumed to sit at CoG height, so ``h_cg`` is unchanged.
    """
    wheelbase = nominal.wheelbase
    spec.validate(wheelbase)
    changes: dict[str, float] = {}
    if spec.mu_override is not None:
        changes["mu"] = spec.mu_override
    if spec.c_sf_scale != 1.0:
        changes["C_Sf"] = nominal.C_Sf * spec.c_sf_scale
    if spec.c_sr_scale != 1.0:
        changes["C_Sr"] = nominal.C_Sr * spec.c_sr_scale
    if spec.added_mass is not None and spec.added_mass[0] > 0.0:
        m_a, pos = spec.added_mass
        m = nominal.m
        m_total = m + m_a
        cog = (m * nominal.l_r + m_a * pos) / m_total
        changes["m"] = m_total
        # l_r is re-derived from the rounded l_f so that l_f + l_r reproduces
        # the wheelbase bit for bit; it differs from ``cog`` by at most an ulp
        l_f = wheelbase - cog
        changes["l_f"] = l_f
        changes["l_r"] = wheelbase - l_f
        changes["I_z"] = nominal.I_z + m * (cog - nominal.l_r) ** 2 + m_a * (pos - cog) ** 2
    return dataclasses.replace(nominal, **changes)


def constrain_inputs(
    state: VehicleState,
    cmd: tuple[float, float],
    constraints: VehicleConstraints,
    dt: float,
) -> tuple[float, float]:
    """
    Turn a desired (acceleration, steering angle) into feasible inputs.

    Returns ``(a_eff, ddelta_eff)``.  The steering target is reached through
    a rate-limited steering velocity that never carries the angle past its
    bounds.  Acceleration is clipped to ``+-a_max``, with the positive limit
    falling as ``a_max * v_switch / v`` above the switching velocity, and is
    zeroed when it would push the speed past the model bounds.
    """
    c = constraints
    a_d, delta_d = cmd
    delta = state.delta
    target = min(max(delta_d, c.delta_min), c.delta_max)
    rate = min(max((target - delta) / dt, c.ddelta_min), c.ddelta_max)
    if (delta >= c.delta_max and rate > 0.0) or (delta <= c.delta_min and rate < 0.0):
        rate = 0.0

    v = state.v
    pos_limit = c.a_max * c.v_switch / v if v > c.v_switch else c.a_max
    a = min(max(a_d, -c.a_max), pos_limit)
    if (v <= c.v_min_model and a < 0.0) or (v >= c.v_max_model and a > 0.0):
        a = 0.0
    return a, rate


def _kinematic_rhs(delta, v, psi, beta, ddelta, a, p: VehicleParams):
    lwb = p.l_f + p.l_r
    tan_d = math.tan(delta)
    cos_d = math.cos(delta)
    slip = math.atan(tan_d * p.l_r / lwb)
    d_beta = (p.l_r * ddelta) / (lwb * lwb * cos_d * cos_d + p.l_r * p.l_r * math.sin(delta) ** 2)
    dd_psi = (a * math.cos(beta) * tan_d
              - v * math.sin(beta) * d_beta * tan_d
              + v * math.cos(beta) * ddelta / (cos_d * cos_d)) / lwb
    return (
        v * math.cos(slip + psi),
        v * math.sin(slip + psi),
        ddelta,
        a,
        v * math.cos(slip) * tan_d / lwb,
        dd_psi,
        d_beta,
    )


def _dynamic_rhs(delta, v, psi, psi_dot, beta, ddelta, a, p: VehicleParams):
    g = GRAVITY
    lf, lr, h = p.l_f, p.l_r, p.h_cg
    lwb = lf + lr
    mu = p.mu
    load_f = g * lr - a * h
    load_r = g * lf + a * h
    k = mu * p.m / (p.I_z * lwb)
    dd_psi = (-k / v * (lf * lf * p.C_Sf * load_f + lr * lr * p.C_Sr * load_r) * psi_dot
              + k * (lr * p.C_Sr * load_r - lf * p.C_Sf * load_f) * beta
              + k * lf * p.C_Sf * load_f * delta)
    d_beta = ((mu / (v * v * lwb) * (p.C_Sr * load_r * lr - p.C_Sf * load_f * lf) - 1.0) * psi_dot
              - mu / (v * lwb) * (p.C_Sr * load_r + p.C_Sf * load_f) * beta
              + mu / (v * lwb) * p.C_Sf * load_f * delta)
    return (
        v * math.cos(beta + psi),
        v * math.sin(beta + psi),
        ddelta,
        a,
        psi_dot,
        dd_psi,
        d_beta,
    )


def derivatives(state: tuple, ddelta: float, a: float, params: VehicleParams) -> tuple:
    """Right-hand side of the single-track ODE for fixed inputs."""
    _, _, delta, v, psi, psi_dot, beta = state
    speed = abs(v)
    if speed <= KINEMATIC_BELOW:
        return _kinematic_rhs(delta, v, psi, beta, ddelta, a, params)
    dyn = _dynamic_rhs(delta, v, psi, psi_dot, beta, ddelta, a, params)
    if speed >= DYNAMIC_ABOVE:
        return dyn
    w = (speed - KINEMATIC_BELOW) / (DYNAMIC_ABOVE - KINEMATIC_BELOW)
    kin = _kinematic_rhs(delta, v, psi, beta, ddelta, a, params)
    return tuple(w * fd + (1.0 - w) * fk for fd, fk in zip(dyn, kin))


def step(
    state: VehicleState,
    cmd: tuple[float, float],
    params: VehicleParams,
    constraints: VehicleConstraints,
    dt: float = 0.01,
) -> VehicleState:
    """Advance one physics step with RK4 under constant constrained inputs."""
    if not 0.0 < dt <= 0.02:
        raise ValueError(f"dt must lie in (0, 0.02], got {dt}")
    a, ddelta = constrain_inputs(state, cmd, constraints, dt)
    s0 = tuple(state)
    k1 = derivatives(s0, ddelta, a, params)
    s1 = tuple(x + 0.5 * dt * k for x, k in zip(s0, k1))
    k2 = derivatives(s1, ddelta, a, params)
    s2 = tuple(x + 0.5 * dt * k for x, k in zip(s0, k2))
    k3 = derivatives(s2, ddelta, a, params)
    s3 = tuple(x + dt * k for x, k in zip(s0, k3))
    k4 = derivatives(s3, ddelta, a, params)
    out = [x + dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
           for x, q1, q2, q3, q4 in zip(s0, k1, k2, k3, k4)]
    if not all(math.isfinite(v) for v in out):
        raise IntegrationBlowupError("non-finite state after RK4 step", VehicleState(*out))
    c = constraints
    out[2] = min(max(out[2], c.delta_min), c.delta_max)
    out[3] = min(max(out[3], c.v_min_model), c.v_max_model)
    return VehicleState(*out)
