from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frenet_racer.vehicle import (
    IntegrationBlowupError,
    MismatchSpec,
    VehicleConstraints,
    VehicleParams,
    VehicleState,
    apply_mismatch,
    constrain_inputs,
    step,
)

P = VehicleParams()
C = VehicleConstraints()


def test_nominal_tables():
    assert (P.m, P.I_z, P.l_f, P.l_r, P.h_cg, P.C_Sf, P.C_Sr, P.mu) == (
        3.74, 0.04712, 0.1587, 0.17145, 0.074, 4.718, 5.4562, 1.0489)
    assert (C.delta_min, C.delta_max, C.ddelta_min, C.ddelta_max) == (-0.4189, 0.4189, -3.2, 3.2)
    assert (C.v_min_model, C.v_max_model, C.a_max, C.v_switch) == (-5.0, 20.0, 9.51, 7.319)
    assert (C.v_min_allow, C.v_max_allow) == (3.0, 5.0)


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(m=0.0)
    with pytest.raises(ValueError):
        VehicleConstraints(v_min_allow=6.0)


def test_serialization_round_trip():
    assert VehicleParams.from_dict(P.to_dict()) == P
    spec = MismatchSpec(mu_override=0.7, added_mass=(0.5, 0.1))
    assert MismatchSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        VehicleParams.from_dict({"mass": 1.0})


# ------------------------------------------------------------------ constrain_inputs


def test_steering_rate_limited():
    a, rate = constrain_inputs(VehicleState(), (0.0, 0.4189), C, 0.01)
    assert rate == 3.2
    nxt = step(VehicleState(v=3.0), (0.0, 0.4189), P, C, 0.01)
    assert nxt.delta == pytest.approx(0.032, abs=1e-12)


def test_power_limit_above_switch():
    a, _ = constrain_inputs(VehicleState(v=10.0), (9.51, 0.0), C, 0.01)
    assert a == pytest.approx(9.51 * 7.319 / 10.0)
    assert a == pytest.approx(6.96, abs=0.01)


def test_zero_command_at_rest():
    assert constrain_inputs(VehicleState(), (0.0, 0.0), C, 0.01) == (0.0, 0.0)


def test_acceleration_clipped_and_zeroed_at_model_bounds():
    assert constrain_inputs(VehicleState(v=3.0), (50.0, 0.0), C, 0.01)[0] == C.a_max
    assert constrain_inputs(VehicleState(v=3.0), (-50.0, 0.0), C, 0.01)[0] == -C.a_max
    assert constrain_inputs(VehicleState(v=20.0), (1.0, 0.0), C, 0.01)[0] == 0.0
    assert constrain_inputs(VehicleState(v=-5.0), (-1.0, 0.0), C, 0.01)[0] == 0.0


def test_steering_rate_zero_at_bound():
    _, rate = constrain_inputs(VehicleState(delta=C.delta_max), (0.0, 1.0), C, 0.01)
    assert rate == 0.0


# ------------------------------------------------------------------ step


def test_straight_rolling():
    s = step(VehicleState(v=3.0), (0.0, 0.0), P, C, 0.01)
    assert s.x == pytest.approx(0.03, abs=1e-15)
    assert (s.y, s.delta, s.psi, s.psi_dot, s.beta) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_invalid_dt():
    with pytest.raises(ValueError):
        step(VehicleState(v=3.0), (0.0, 0.0), P, C, 0.05)


def test_blowup_carries_state():
    bad = VehicleState(v=3.0, psi_dot=float("inf"))
    with pytest.raises(IntegrationBlowupError) as info:
        step(bad, (0.0, 0.0), P, C)
    assert isinstance(info.value.state, VehicleState)


def _circle_radius(xs, ys):
    # algebraic least-squares circle fit
    A = np.stack([xs, ys, np.ones_like(xs)], axis=1)
    b = xs * xs + ys * ys
    cx2, cy2, c = np.linalg.lstsq(A, b, rcond=None)[0]
    cx, cy = cx2 / 2, cy2 / 2
    return math.sqrt(c + cx * cx + cy * cy)


def _turn(params, delta=0.2, v=3.0, seconds=5.0):
    s = VehicleState(v=v, delta=delta)
    pts = []
    for _ in range(int(seconds / 0.01)):
        s = step(s, (0.0, delta), params, C)
        pts.append((s.x, s.y))
    pts = np.array(pts[len(pts) // 2:])
    return _circle_radius(pts[:, 0], pts[:, 1])


def test_low_speed_curvature_near_kinematic():
    kinematic = math.tan(0.2) / P.wheelbase
    assert abs(1.0 / _turn(P) - kinematic) / kinematic <= 0.10


def test_lower_friction_widens_turn():
    low = dataclasses.replace(P, mu=0.5)
    assert _turn(low) > _turn(P)


def test_constant_speed_without_drag():
    s = VehicleState(v=4.0)
    for _ in range(1000):
        s = step(s, (0.0, 0.0), P, C)
    assert s.v == pytest.approx(4.0, abs=1e-9)


def test_mirror_symmetry():
    a = b = VehicleState(v=3.0)
    for k in range(300):
        d = 0.3 * math.sin(0.05 * k)
        a = step(a, (1.0, d), P, C)
        b = step(b, (1.0, -d), P, C)
    assert a.x == pytest.approx(b.x, abs=1e-9)
    assert a.y == pytest.approx(-b.y, abs=1e-9)
    assert a.psi == pytest.approx(-b.psi, abs=1e-9)
    assert a.beta == pytest.approx(-b.beta, abs=1e-9)


def test_low_speed_start_is_finite():
    s = VehicleState(v=0.0)
    for _ in range(200):
        s = step(s, (2.0, 0.3), P, C)
    assert all(math.isfinite(v) for v in s)
    assert s.v > 1.0


def test_deterministic():
    s = VehicleState(v=3.3, delta=0.1, psi_dot=0.2, beta=0.01)
    assert step(s, (1.0, -0.2), P, C) == step(s, (1.0, -0.2), P, C)


@settings(max_examples=40, deadline=None)
@given(cmds=st.lists(st.tuples(st.floats(-30, 30), st.floats(-2, 2)), min_size=1, max_size=60))
def test_state_bounds_respected(cmds):
    s = VehicleState(v=3.0)
    for cmd in cmds:
        s = step(s, cmd, P, C)
        assert C.delta_min <= s.delta <= C.delta_max
        assert C.v_min_model <= s.v <= C.v_max_model


# ------------------------------------------------------------------ mismatch


def test_empty_spec_is_identity():
    assert apply_mismatch(P, MismatchSpec()) == P


def test_stiffness_scale():
    out = apply_mismatch(P, MismatchSpec(c_sf_scale=1.2))
    assert out.C_Sf == pytest.approx(5.6616, abs=1e-12)
    assert dataclasses.replace(out, C_Sf=P.C_Sf) == P


def test_friction_override():
    assert apply_mismatch(P, MismatchSpec(mu_override=0.5)).mu == 0.5


def test_mass_at_rear_axle():
    out = apply_mismatch(P, MismatchSpec(added_mass=(1.0, 0.0)))
    assert out.m == pytest.approx(4.74)
    assert out.l_r == pytest.approx(3.74 * 0.17145 / 4.74, abs=1e-12)
    assert out.l_r == pytest.approx(0.13529, abs=2e-5)
    assert out.l_f == pytest.approx(0.19486, abs=2e-5)
    assert out.l_f + out.l_r == P.l_f + P.l_r


def test_mass_at_cog_keeps_geometry():
    out = apply_mismatch(P, MismatchSpec(added_mass=(0.5, P.l_r)))
    assert out.l_r == pytest.approx(P.l_r, abs=1e-15)
    assert out.I_z == pytest.approx(P.I_z, abs=1e-15)


@pytest.mark.parametrize("spec", [
    MismatchSpec(mu_override=0.0), MismatchSpec(mu_override=2.5), MismatchSpec(c_sf_scale=0.4),
    MismatchSpec(c_sr_scale=2.1), MismatchSpec(added_mass=(-1.0, 0.1)),
    MismatchSpec(added_mass=(1.0, 0.5)),
])
def test_invalid_mismatch_rejected(spec):
    with pytest.raises(ValueError):
        apply_mismatch(P, spec)


@settings(max_examples=200, deadline=None)
@given(mass=st.floats(0.0, 3.0), frac=st.floats(0.0, 1.0))
def test_wheelbase_preserved(mass, frac):
    out = apply_mismatch(P, MismatchSpec(added_mass=(mass, frac * P.wheelbase)))
    assert out.l_f + out.l_r == P.wheelbase
    assert out.I_z >= P.I_z
