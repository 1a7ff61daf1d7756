"""Per-type kinematic models, state integration, and speed/steering bounds.

Vehicles follow the simple-car model: pdot = (v cos(theta), v sin(theta)),
thetadot = v tan(phi) / L, turning about a point on the rear axle.
Pedestrians reorient instantly and move along their facing direction.
Speed caps come from centripetal grip, braking distance, and the per-type
maximum; control reachability from throttle/brake and steering-rate limits
over one planning interval.
"""

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources

import numpy as np

from .geometry import wrap_angle


class AgentType(IntEnum):
    PEDESTRIAN = 1
    BICYCLE = 2
    TRICYCLE = 3
    CAR = 4


class InvalidControl(ValueError):
    """Commanded control outside the vehicle's physical limits."""


@dataclass(frozen=True)
class DynamicsParams:
    agent_type: AgentType
    v_max_type: float
    a_throttle: float
    a_brake: float
    L: float | None = None
    phi_max: float | None = None
    phi_rate_max: float | None = None
    steer_gain: float = 1.0
    g: float = 9.8
    mu: float = 0.7
    t_react: float = 1.5

    def __post_init__(self):
        if self.v_max_type <= 0 or self.a_throttle <= 0 or self.a_brake <= 0:
            raise ValueError("speed and acceleration limits must be positive")
        if self.g <= 0 or self.mu <= 0 or self.t_react <= 0:
            raise ValueError("g, mu and t_react must be positive")
        if self.agent_type != AgentType.PEDESTRIAN:
            if self.L is None or self.phi_max is None or self.phi_rate_max is None:
                raise ValueError("vehicles need L, phi_max and phi_rate_max")
            if self.L <= 0 or self.phi_rate_max <= 0:
                raise ValueError("L and phi_rate_max must be positive")
            if not 0 < self.phi_max < math.pi / 2:
                raise ValueError("phi_max must lie in (0, pi/2)")

    @property
    def is_vehicle(self) -> bool:
        return self.agent_type != AgentType.PEDESTRIAN


def _load_type_defaults() -> dict:
    text = resources.files("autorvo").joinpath("data/agent_type_defaults.json").read_text()
    return json.loads(text)


_TYPE_DEFAULTS = _load_type_defaults()


def default_params(agent_type: AgentType, **overrides) -> DynamicsParams:
    """Calibration defaults for one agent type, optionally overridden."""
    base = dict(_TYPE_DEFAULTS[agent_type.name.lower()])
    base.update(overrides)
    return DynamicsParams(agent_type=agent_type, **base)


@dataclass(frozen=True)
class VehicleControlState:
    v: float
    phi: float
    theta: float
    p_f: np.ndarray
    p_r: np.ndarray
    u_t: float = 0.0
    u_phi: float = 0.0

    @classmethod
    def from_reference(cls, p_f, theta, v, phi, L):
        p_f = np.asarray(p_f, dtype=np.float64).reshape(2)
        heading = np.array([math.cos(theta), math.sin(theta)])
        return cls(v=float(v), phi=float(phi), theta=float(theta),
                   p_f=p_f, p_r=p_f - L * heading)


@dataclass(frozen=True)
class PedestrianControlState:
    v: float
    theta: float
    p: np.ndarray


def integrate_vehicle(s: VehicleControlState, params: DynamicsParams,
                      v_cmd: float, phi_cmd: float, dt: float,
                      substeps: int = 5) -> VehicleControlState:
    """Hold (v_cmd, phi_cmd) constant over dt; fixed-substep RK4 on the pose.

    The commanded steering must already lie within the steering limits.
    """
    if dt <= 0 or substeps < 1:
        raise ValueError("dt must be positive and substeps >= 1")
    if abs(phi_cmd) > params.phi_max + 1e-9:
        raise InvalidControl(
            f"|phi_cmd|={abs(phi_cmd):.4f} exceeds phi_max={params.phi_max:.4f}")
    v_cmd = max(0.0, v_cmd)  # no reverse gear

    omega_rate = math.tan(phi_cmd) / params.L

    def deriv(state):
        x, y, th = state
        return np.array([v_cmd * math.cos(th), v_cmd * math.sin(th),
                         omega_rate * v_cmd])

    state = np.array([s.p_r[0], s.p_r[1], s.theta])
    h = dt / substeps
    for _ in range(substeps):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * h * k1)
        k3 = deriv(state + 0.5 * h * k2)
        k4 = deriv(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    theta = float(state[2])
    p_r = state[:2].copy()
    p_f = p_r + params.L * np.array([math.cos(theta), math.sin(theta)])

    u_t = (v_cmd - s.v) / (params.a_throttle * dt) if v_cmd >= s.v \
        else (v_cmd - s.v) / (params.a_brake * dt)
    u_phi = (phi_cmd - s.phi) / (params.phi_rate_max * dt)
    return VehicleControlState(
        v=v_cmd, phi=float(phi_cmd), theta=theta, p_f=p_f, p_r=p_r,
        u_t=float(np.clip(u_t, -1.0, 1.0)),
        u_phi=float(np.clip(u_phi, -1.0, 1.0)),
    )


def integrate_pedestrian(s: PedestrianControlState, v_cmd: float,
                         theta_cmd: float, dt: float) -> PedestrianControlState:
    """Instant reorientation, then straight motion along the new facing."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_cmd = max(0.0, v_cmd)
    p = s.p + v_cmd * dt * np.array([math.cos(theta_cmd), math.sin(theta_cmd)])
    return PedestrianControlState(v=v_cmd, theta=float(theta_cmd), p=p)


# --- preferred steering -----------------------------------------------------

def _linear_steering(a, d_o, params: DynamicsParams) -> float:
    ang = wrap_angle(math.atan2(d_o[1], d_o[0]) - math.atan2(a[1], a[0]))
    return float(np.clip(params.steer_gain * ang, -params.phi_max, params.phi_max))


_STEERING_MAPS: dict[AgentType, object] = {}


def register_steering_map(agent_type: AgentType, fn) -> None:
    """Install a custom steering map f(a, d_o, params) for one agent type."""
    _STEERING_MAPS[agent_type] = fn


def steering_map(a, d_o, params: DynamicsParams) -> float:
    """Preferred steering toward direction d_o given heading direction a.

    The default per-type map is linear in the signed heading error with
    gain `steer_gain`, clamped to the steering limits.
    """
    a = np.asarray(a, dtype=np.float64)
    d_o = np.asarray(d_o, dtype=np.float64)
    if np.hypot(*a) == 0.0 or np.hypot(*d_o) == 0.0:
        raise ValueError("directions must be nonzero")
    fn = _STEERING_MAPS.get(params.agent_type, _linear_steering)
    return fn(a, d_o, params)


# --- speed bounds -----------------------------------------------------------

def v_max_centripetal(phi: float, params: DynamicsParams) -> float:
    """Grip-limited speed sqrt(g mu r) on the circle of radius L/|tan(phi)|."""
    t = abs(math.tan(phi))
    if t < 1e-15:
        return math.inf
    r = params.L / t
    return math.sqrt(params.g * params.mu * r)


def v_max_braking(clear_dist: float, params: DynamicsParams) -> float:
    """Largest speed for which reaction plus braking distance fits clear_dist.

    Positive root of v^2 / (2 g mu) + t v - l = 0.
    """
    l = max(0.0, clear_dist)
    gm = params.g * params.mu
    t = params.t_react
    return gm * (-t + math.sqrt(t * t + 2.0 * l / gm))


def v_max_combined(phi: float, clear_dist: float, params: DynamicsParams) -> float:
    """Minimum of the grip, braking and per-type speed caps."""
    bound = min(v_max_braking(clear_dist, params), params.v_max_type)
    if params.is_vehicle:
        bound = min(bound, v_max_centripetal(phi, params))
    return bound


def reachable_ranges(state, params: DynamicsParams, tau: float):
    """Control box reachable from the current state within tau.

    Returns ((v_lo, v_hi), (s_lo, s_hi)). For vehicles the second interval
    is steering clipped to +-phi_max; pedestrians turn instantly, so their
    orientation interval is the full circle (-pi, pi].
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    v = state.v
    v_lo = max(0.0, v - params.a_brake * tau)
    v_hi = min(v + params.a_throttle * tau, params.v_max_type)
    if v_lo > v_hi:  # current v above the type cap: only braking available
        v_lo = min(v_lo, v_hi)
    if not params.is_vehicle:
        return (v_lo, v_hi), (-math.pi, math.pi)
    s_lo = max(-params.phi_max, state.phi - params.phi_rate_max * tau)
    s_hi = min(params.phi_max, state.phi + params.phi_rate_max * tau)
    return (v_lo, v_hi), (s_lo, s_hi)
