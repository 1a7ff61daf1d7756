import math

import numpy as np
import pytest

from autorvo.dynamics import (
    AgentType,
    DynamicsParams,
    InvalidControl,
    PedestrianControlState,
    VehicleControlState,
    default_params,
    integrate_pedestrian,
    integrate_vehicle,
    reachable_ranges,
    register_steering_map,
    steering_map,
    v_max_braking,
    v_max_centripetal,
    v_max_combined,
)


CAR = default_params(AgentType.CAR)
PED = default_params(AgentType.PEDESTRIAN)


def vehicle_at(p_f=(0.0, 0.0), theta=0.0, v=0.0, phi=0.0, params=CAR):
    return VehicleControlState.from_reference(p_f, theta, v, phi, params.L)


# --- params -------------------------------------------------------------------

def test_defaults_per_type():
    for t in AgentType:
        p = default_params(t)
        assert p.agent_type == t
        assert p.g == 9.8 and p.mu == 0.7 and p.t_react == 1.5
    assert PED.L is None
    assert CAR.phi_max < math.pi / 2


def test_param_validation():
    with pytest.raises(ValueError):
        default_params(AgentType.CAR, phi_max=2.0)
    with pytest.raises(ValueError):
        default_params(AgentType.CAR, v_max_type=-1.0)
    with pytest.raises(ValueError):
        DynamicsParams(agent_type=AgentType.CAR, v_max_type=10,
                       a_throttle=2, a_brake=4)  # missing L/phi_max


# --- integration -----------------------------------------------------------------

def test_straight_line_advance():
    s = vehicle_at(v=1.0)
    out = integrate_vehicle(s, CAR, 1.0, 0.0, 1.0)
    assert np.allclose(out.p_r - s.p_r, [1.0, 0.0], atol=1e-12)
    assert out.theta == pytest.approx(0.0, abs=1e-15)


def test_zero_speed_is_stationary():
    s = vehicle_at(v=0.0, phi=0.2)
    out = integrate_vehicle(s, CAR, 0.0, 0.3, 1.0)
    assert np.allclose(out.p_r, s.p_r, atol=1e-15)
    assert out.theta == s.theta


def test_quarter_circle_arc():
    # v=1, phi=pi/4, L=1: turn rate 1 rad/s, rear axle on a unit circle
    params = default_params(AgentType.CAR, L=1.0, phi_max=1.0)
    s = vehicle_at(p_f=(1.0, 0.0), theta=0.0, v=1.0, params=params)
    assert np.allclose(s.p_r, [0.0, 0.0], atol=1e-15)
    out = integrate_vehicle(s, params, 1.0, math.pi / 4, math.pi / 2, substeps=20)
    assert out.theta == pytest.approx(math.pi / 2, abs=1e-10)
    assert np.allclose(out.p_r, [1.0, 1.0], atol=1e-4)


def test_arc_consistency_random_controls():
    # RK4 against the closed-form circular arc, 1 s with 20 substeps
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.uniform(0.5, 12.0)
        phi = rng.uniform(-CAR.phi_max, CAR.phi_max)
        if abs(phi) < 1e-3:
            continue
        th0 = rng.uniform(-3, 3)
        s = vehicle_at(p_f=(rng.uniform(-5, 5), rng.uniform(-5, 5)), theta=th0, v=v)
        out = integrate_vehicle(s, CAR, v, phi, 1.0, substeps=20)
        om = v * math.tan(phi) / CAR.L
        radius = v / om
        cx = s.p_r[0] - radius * math.sin(th0)
        cy = s.p_r[1] + radius * math.cos(th0)
        th1 = th0 + om * 1.0
        want = np.array([cx + radius * math.sin(th1), cy - radius * math.cos(th1)])
        assert np.allclose(out.p_r, want, atol=1e-4)
        assert out.theta == pytest.approx(th1, abs=1e-9)


def test_axle_distance_preserved():
    s = vehicle_at(v=3.0)
    for _ in range(1000):
        s = integrate_vehicle(s, CAR, 3.0, 0.25, 0.2)
    assert np.hypot(*(s.p_f - s.p_r)) == pytest.approx(CAR.L, abs=1e-6)


def test_invalid_steering_rejected():
    with pytest.raises(InvalidControl):
        integrate_vehicle(vehicle_at(), CAR, 1.0, CAR.phi_max + 0.01, 0.2)


def test_effort_bookkeeping_clamped():
    s = vehicle_at(v=0.0)
    out = integrate_vehicle(s, CAR, 100.0, 0.0, 0.2)
    assert out.u_t == 1.0
    out = integrate_vehicle(vehicle_at(v=10.0), CAR, 0.0, 0.0, 0.2)
    assert out.u_t == -1.0
    assert -1.0 <= out.u_phi <= 1.0


def test_pedestrian_integration():
    s = PedestrianControlState(v=1.0, theta=0.0, p=np.zeros(2))
    out = integrate_pedestrian(s, 0.0, 1.3, 1.0)
    assert np.allclose(out.p, [0.0, 0.0])
    assert out.theta == 1.3
    out = integrate_pedestrian(s, 1.5, math.pi / 2, 2.0)
    assert np.allclose(out.p, [0.0, 3.0], atol=1e-12)


def test_pedestrian_opposite_headings_cancel():
    s = PedestrianControlState(v=0.0, theta=0.0, p=np.zeros(2))
    s = integrate_pedestrian(s, 1.2, 0.7, 1.5)
    s = integrate_pedestrian(s, 1.2, 0.7 + math.pi, 1.5)
    assert np.allclose(s.p, [0.0, 0.0], atol=1e-12)


# --- steering map -----------------------------------------------------------------

def test_steering_map_aligned_zero():
    assert steering_map([1.0, 0.0], [1.0, 0.0], CAR) == 0.0


def test_steering_map_direct_evaluation():
    params = default_params(AgentType.CAR, phi_max=0.6, steer_gain=1.0)
    ang = 0.2
    d = [math.cos(ang), math.sin(ang)]
    assert steering_map([1.0, 0.0], d, params) == pytest.approx(0.2, abs=1e-12)


def test_steering_map_saturates_behind():
    params = default_params(AgentType.CAR, phi_max=0.6, steer_gain=1.0)
    assert steering_map([1.0, 0.0], [-1.0, 1e-9], params) == pytest.approx(0.6)


def test_steering_map_odd():
    rng = np.random.default_rng(9)
    for _ in range(100):
        a = rng.uniform(-1, 1, 2)
        d = rng.uniform(-1, 1, 2)
        if np.hypot(*a) < 1e-6 or np.hypot(*d) < 1e-6:
            continue
        plus = steering_map(a, d, CAR)
        # reflect d across a
        an = a / np.hypot(*a)
        refl = 2 * (d @ an) * an - d
        minus = steering_map(a, refl, CAR)
        assert plus == pytest.approx(-minus, abs=1e-12)


def test_steering_map_pluggable():
    def hard_left(a, d, params):
        return params.phi_max

    register_steering_map(AgentType.TRICYCLE, hard_left)
    try:
        trike = default_params(AgentType.TRICYCLE)
        assert steering_map([1, 0], [1, 0], trike) == trike.phi_max
    finally:
        from autorvo.dynamics import _STEERING_MAPS
        _STEERING_MAPS.pop(AgentType.TRICYCLE)


# --- speed bounds ------------------------------------------------------------------

def test_centripetal_unbounded_straight():
    assert v_max_centripetal(0.0, CAR) == math.inf


def test_centripetal_closed_form():
    # radius 10 m via phi = atan(L / 10)
    params = default_params(AgentType.CAR, L=2.6)
    phi = math.atan(params.L / 10.0)
    assert v_max_centripetal(phi, params) == pytest.approx(math.sqrt(68.6), abs=1e-9)
    assert math.sqrt(68.6) == pytest.approx(8.2825, abs=1e-3)


def test_centripetal_sqrt_scaling():
    params = default_params(AgentType.CAR, L=2.0)
    phi1 = math.atan(params.L / 10.0)
    phi2 = math.atan(params.L / 20.0)
    assert v_max_centripetal(phi2, params) == pytest.approx(
        math.sqrt(2) * v_max_centripetal(phi1, params), rel=1e-12)


def test_braking_zero_clearance():
    assert v_max_braking(0.0, CAR) == 0.0


def test_braking_quadratic_root():
    v = v_max_braking(20.0, CAR)
    assert v == pytest.approx(9.21, abs=0.01)
    # defining equation residual
    gm = CAR.g * CAR.mu
    assert v * CAR.t_react + v * v / (2 * gm) == pytest.approx(20.0, abs=1e-9)


def test_braking_satisfies_defining_inequality():
    rng = np.random.default_rng(13)
    gm = CAR.g * CAR.mu
    for l in rng.uniform(0, 200, 200):
        v = v_max_braking(l, CAR)
        assert v * CAR.t_react + v * v / (2 * gm) <= l + 1e-9


def test_braking_monotone():
    ls = np.linspace(0, 100, 300)
    vs = [v_max_braking(l, CAR) for l in ls]
    assert all(b >= a - 1e-12 for a, b in zip(vs, vs[1:]))


def test_centripetal_monotone_in_steering():
    phis = np.linspace(1e-4, CAR.phi_max, 200)
    vs = [v_max_centripetal(p, CAR) for p in phis]
    assert all(b <= a + 1e-12 for a, b in zip(vs, vs[1:]))


def test_combined_minimum():
    params = default_params(AgentType.CAR, v_max_type=5.0)
    assert v_max_combined(0.0, 1e6, params) == 5.0
    assert v_max_combined(0.3, 0.0, params) == 0.0
    params = default_params(AgentType.CAR, v_max_type=15.0, L=2.6)
    phi = math.atan(params.L / 10.0)
    got = v_max_combined(phi, 20.0, params)
    assert got == pytest.approx(8.2825, abs=1e-3)


def test_pedestrian_combined_ignores_steering():
    assert v_max_combined(0.0, 100.0, PED) == PED.v_max_type
    assert v_max_combined(1.3, 100.0, PED) == PED.v_max_type


# --- reachable ranges ---------------------------------------------------------------

def test_reachable_speed_arithmetic():
    params = default_params(AgentType.CAR, a_throttle=2.0, a_brake=3.0)
    s = vehicle_at(v=0.0)
    (v_lo, v_hi), _ = reachable_ranges(s, params, 0.5)
    assert (v_lo, v_hi) == (0.0, 1.0)


def test_reachable_steering_saturation():
    s = vehicle_at(phi=CAR.phi_max)
    _, (s_lo, s_hi) = reachable_ranges(s, CAR, 0.5)
    assert s_hi == CAR.phi_max
    assert s_lo == pytest.approx(CAR.phi_max - CAR.phi_rate_max * 0.5)


def test_reachable_collapses_as_tau_shrinks():
    s = vehicle_at(v=3.0, phi=0.1)
    (v_lo, v_hi), (s_lo, s_hi) = reachable_ranges(s, CAR, 1e-9)
    assert v_lo == pytest.approx(3.0, abs=1e-6)
    assert v_hi == pytest.approx(3.0, abs=1e-6)
    assert s_lo == pytest.approx(0.1, abs=1e-6)
    assert s_hi == pytest.approx(0.1, abs=1e-6)


def test_reachable_contains_current():
    rng = np.random.default_rng(17)
    for _ in range(100):
        v = rng.uniform(0, CAR.v_max_type)
        phi = rng.uniform(-CAR.phi_max, CAR.phi_max)
        s = vehicle_at(v=v, phi=phi)
        (v_lo, v_hi), (s_lo, s_hi) = reachable_ranges(s, CAR, rng.uniform(0.05, 1.0))
        assert v_lo - 1e-12 <= v <= v_hi + 1e-12
        assert s_lo - 1e-12 <= phi <= s_hi + 1e-12


def test_pedestrian_orientation_full_circle():
    s = PedestrianControlState(v=1.0, theta=0.3, p=np.zeros(2))
    (v_lo, v_hi), (t_lo, t_hi) = reachable_ranges(s, PED, 0.5)
    assert (t_lo, t_hi) == (-math.pi, math.pi)
    assert v_lo == pytest.approx(0.0)
    assert v_hi == pytest.approx(1.5)
