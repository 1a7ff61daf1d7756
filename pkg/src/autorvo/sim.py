"""World state, scenario loading, and the synchronous simulation loop.

Each tick is a two-phase lockstep update: every non-arrived agent plans
against the same frozen snapshot, then all selected controls are committed
by integrating over one planning interval. Arrived agents leave the
collision world. A post-commit audit records any overlapping shape pair;
audits are recorded, never raised.
"""

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import navigation
from .dynamics import (
    AgentType,
    DynamicsParams,
    PedestrianControlState,
    VehicleControlState,
    default_params,
    integrate_pedestrian,
    integrate_vehicle,
)
from .geometry import CtmatShape, place_shape, point_to_shape_distance, shapes_overlap
from .navigation import Behavior, CostWeights, NavConfig

INTEGRATION_SUBSTEPS = 5


class ParseError(ValueError):
    """Scenario document is not well-formed."""


class ValidationError(ValueError):
    """Scenario document is well-formed but violates a constraint."""


@dataclass
class AgentState:
    id: str
    agent_type: AgentType
    shape: CtmatShape
    dyn: DynamicsParams
    control: VehicleControlState | PedestrianControlState
    goal: np.ndarray
    prev_control: tuple[float, float]
    behavior: Behavior = Behavior.GO_AHEAD
    arrived: bool = False

    @property
    def is_vehicle(self) -> bool:
        return self.dyn.is_vehicle

    @property
    def reference_point(self) -> np.ndarray:
        return self.control.p_f if self.is_vehicle else self.control.p

    @property
    def heading(self) -> float:
        return self.control.theta

    @property
    def speed(self) -> float:
        return self.control.v

    @property
    def steer(self) -> float | None:
        return self.control.phi if self.is_vehicle else None

    @property
    def steer_or_theta(self) -> float:
        return self.control.phi if self.is_vehicle else self.control.theta

    @property
    def width(self) -> float:
        return self.shape.width

    def frame_pose(self):
        """World pose (x, y, theta) of the shape's authoring frame."""
        th = self.heading
        c, s = math.cos(th), math.sin(th)
        off = self.shape.reference_offset
        ref = self.reference_point
        return (ref[0] - (c * off[0] - s * off[1]),
                ref[1] - (s * off[0] + c * off[1]), th)

    def placed_shape(self) -> CtmatShape:
        x, y, th = self.frame_pose()
        return place_shape(self.shape, (x, y), th)

    def clone(self) -> "AgentState":
        return AgentState(
            id=self.id, agent_type=self.agent_type, shape=self.shape,
            dyn=self.dyn, control=self.control, goal=self.goal.copy(),
            prev_control=tuple(self.prev_control), behavior=self.behavior,
            arrived=self.arrived)


@dataclass
class Scenario:
    agents: list
    obstacles: list
    nav: NavConfig
    agent_types: dict
    duration: float
    goal_radius: float = 0.5
    seed: int = 0


@dataclass
class World:
    agents: list
    obstacles: list
    nav: NavConfig
    goal_radius: float
    time: float = 0.0
    step_index: int = 0

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "World":
        return cls(agents=[a.clone() for a in scenario.agents],
                   obstacles=list(scenario.obstacles), nav=scenario.nav,
                   goal_radius=scenario.goal_radius)


# --- scenario loading --------------------------------------------------------

_TYPE_NAMES = {t.name.lower(): t for t in AgentType}
_DYN_FIELDS = {f.name for f in dataclasses.fields(DynamicsParams)} - {"agent_type"}
_NAV_FIELDS = {f.name for f in dataclasses.fields(NavConfig)} - {"weights"}
_WEIGHT_FIELDS = {f.name for f in dataclasses.fields(CostWeights)}


def _expect(cond, msg):
    if not cond:
        raise ValidationError(msg)


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{path}: must be finite")
    return float(value)


def _point(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ValidationError(f"{path}: expected [x, y]")
    return np.array([_num(value[0], path), _num(value[1], path)])


def _build_agent_types(doc) -> dict:
    overrides = doc.get("agent_types", {})
    _expect(isinstance(overrides, dict), "agent_types: expected an object")
    for name in overrides:
        _expect(name in _TYPE_NAMES, f"agent_types.{name}: unknown agent type")
    params = {}
    for name, agent_type in _TYPE_NAMES.items():
        over = overrides.get(name, {})
        _expect(isinstance(over, dict), f"agent_types.{name}: expected an object")
        clean = {}
        for key, val in over.items():
            _expect(key in _DYN_FIELDS, f"agent_types.{name}.{key}: unknown parameter")
            clean[key] = _num(val, f"agent_types.{name}.{key}")
        try:
            params[name] = default_params(agent_type, **clean)
        except ValueError as exc:
            raise ValidationError(f"agent_types.{name}: {exc}") from exc
    return params


def _build_nav(doc) -> NavConfig:
    raw = doc.get("nav", {})
    _expect(isinstance(raw, dict), "nav: expected an object")
    kwargs = {}
    for key, val in raw.items():
        if key == "weights":
            _expect(isinstance(val, dict), "nav.weights: expected an object")
            wkw = {}
            for wk, wv in val.items():
                _expect(wk in _WEIGHT_FIELDS, f"nav.weights.{wk}: unknown weight")
                wkw[wk] = _num(wv, f"nav.weights.{wk}")
            try:
                kwargs["weights"] = CostWeights(**wkw)
            except ValueError as exc:
                raise ValidationError(f"nav.weights: {exc}") from exc
            continue
        _expect(key in _NAV_FIELDS, f"nav.{key}: unknown option")
        if key in ("use_dynamics", "f3_clamp_nonnegative", "log_costs"):
            _expect(isinstance(val, bool), f"nav.{key}: expected a boolean")
            kwargs[key] = val
        elif key in ("substeps_collision", "samples_v", "samples_phi"):
            _expect(isinstance(val, int) and not isinstance(val, bool),
                    f"nav.{key}: expected an integer")
            kwargs[key] = val
        else:
            kwargs[key] = _num(val, f"nav.{key}")
    try:
        return NavConfig(**kwargs)
    except ValueError as exc:
        raise ValidationError(f"nav: {exc}") from exc


def _build_agent(raw, idx, types: dict) -> AgentState:
    path = f"agents[{idx}]"
    _expect(isinstance(raw, dict), f"{path}: expected an object")
    for key in ("id", "type", "disks", "position", "goal"):
        _expect(key in raw, f"{path}.{key}: missing")
    agent_id = raw["id"]
    _expect(isinstance(agent_id, str) and agent_id, f"{path}.id: expected a nonempty string")
    type_name = raw["type"]
    _expect(type_name in _TYPE_NAMES, f"{path}.type: unknown agent type {type_name!r}")
    dyn = types[type_name]
    try:
        shape = CtmatShape(raw["disks"], reference_offset=raw.get("ref", (0.0, 0.0)))
    except ValueError as exc:
        raise ValidationError(f"{path}.disks: {exc}") from exc
    _expect(shape.width > 0, f"{path}.disks: agent footprint must have positive width")
    position = _point(raw["position"], f"{path}.position")
    goal = _point(raw["goal"], f"{path}.goal")
    theta = _num(raw.get("theta", 0.0), f"{path}.theta")
    v = _num(raw.get("v", 0.0), f"{path}.v")
    _expect(v >= 0, f"{path}.v: speed must be nonnegative")
    if dyn.is_vehicle:
        phi = _num(raw.get("phi", 0.0), f"{path}.phi")
        _expect(abs(phi) <= dyn.phi_max + 1e-9,
                f"{path}.phi: exceeds phi_max={dyn.phi_max}")
        control = VehicleControlState.from_reference(position, theta, v, phi, dyn.L)
        prev = (v, phi)
    else:
        control = PedestrianControlState(v=v, theta=theta, p=position)
        prev = (v, theta)
    return AgentState(id=agent_id, agent_type=_TYPE_NAMES[type_name], shape=shape,
                      dyn=dyn, control=control, goal=goal, prev_control=prev)


def load_scenario(source) -> Scenario:
    """Parse and validate a scenario document (JSON text or a dict)."""
    if isinstance(source, (bytes, str)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")

    known = {"agents", "obstacles", "agent_types", "nav", "duration",
             "goal_radius", "seed"}
    for key in doc:
        _expect(key in known, f"{key}: unknown top-level key")

    types = _build_agent_types(doc)
    nav = _build_nav(doc)

    duration = _num(doc.get("duration", 60.0), "duration")
    _expect(duration > 0, "duration: must be positive")
    goal_radius = _num(doc.get("goal_radius", 0.5), "goal_radius")
    _expect(goal_radius > 0, "goal_radius: must be positive")
    seed = doc.get("seed", 0)
    _expect(isinstance(seed, int) and not isinstance(seed, bool), "seed: expected an integer")

    raw_agents = doc.get("agents", [])
    _expect(isinstance(raw_agents, list), "agents: expected a list")
    agents = [_build_agent(raw, i, types) for i, raw in enumerate(raw_agents)]
    ids = [a.id for a in agents]
    _expect(len(set(ids)) == len(ids), "agents: duplicate ids")

    obstacles = []
    raw_obstacles = doc.get("obstacles", [])
    _expect(isinstance(raw_obstacles, list), "obstacles: expected a list")
    for i, raw in enumerate(raw_obstacles):
        path = f"obstacles[{i}]"
        _expect(isinstance(raw, dict), f"{path}: expected an object")
        _expect("disks" in raw, f"{path}.disks: missing")
        try:
            local = CtmatShape(raw["disks"])
        except ValueError as exc:
            raise ValidationError(f"{path}.disks: {exc}") from exc
        pos = _point(raw.get("position", (0.0, 0.0)), f"{path}.position")
        th = _num(raw.get("theta", 0.0), f"{path}.theta")
        obstacles.append(place_shape(local, pos, th))

    placed = [a.placed_shape() for a in agents]
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            if shapes_overlap(placed[i], placed[j]):
                raise ValidationError(
                    f"agents: initial shapes of {agents[i].id!r} and "
                    f"{agents[j].id!r} overlap")
        for k, ob in enumerate(obstacles):
            if shapes_overlap(placed[i], ob):
                raise ValidationError(
                    f"agents: initial shape of {agents[i].id!r} overlaps obstacles[{k}]")

    return Scenario(agents=agents, obstacles=obstacles, nav=nav,
                    agent_types=types, duration=duration,
                    goal_radius=goal_radius, seed=seed)


def scenario_effective_doc(scenario: Scenario) -> dict:
    """Scenario echo with every default filled in, for `validate` and logs."""
    nav = dataclasses.asdict(scenario.nav)
    types = {name: {k: v for k, v in dataclasses.asdict(p).items() if k != "agent_type"}
             for name, p in scenario.agent_types.items()}
    return {
        "duration": scenario.duration,
        "goal_radius": scenario.goal_radius,
        "seed": scenario.seed,
        "nav": nav,
        "agent_types": types,
        "agents": [
            {"id": a.id, "type": a.agent_type.name.lower(),
             "position": [float(x) for x in a.reference_point],
             "theta": a.heading, "v": a.speed,
             "goal": [float(x) for x in a.goal]}
            for a in scenario.agents
        ],
        "obstacles": len(scenario.obstacles),
    }


# --- neighbor queries ---------------------------------------------------------

@dataclass(frozen=True)
class Neighbor:
    distance: float
    id: str
    agent: AgentState | None  # None for static obstacles
    shape: CtmatShape  # placed


def neighbors_of(world: World, agent: AgentState, radius: float) -> list[Neighbor]:
    """Agents and obstacles whose shapes come within `radius` of the agent's
    reference point (closed ball), sorted by distance then id."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    ref = agent.reference_point
    found = []
    for other in world.agents:
        if other is agent or other.arrived:
            continue
        shape = other.placed_shape()
        d = max(0.0, point_to_shape_distance(ref, shape))
        if d <= radius:
            found.append(Neighbor(d, other.id, other, shape))
    for k, shape in enumerate(world.obstacles):
        d = max(0.0, point_to_shape_distance(ref, shape))
        if d <= radius:
            found.append(Neighbor(d, f"obstacle:{k}", None, shape))
    found.sort(key=lambda n: (n.distance, n.id))
    return found


# --- stepping -----------------------------------------------------------------

def _worker_count() -> int:
    raw = os.environ.get("AUTORVO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def step(world: World) -> list[tuple[str, str]]:
    """Advance the world by one tick; returns audited overlapping pairs.

    Phase one plans every non-arrived agent against the frozen snapshot
    (safe to parallelize); phase two commits all integrations serially.
    """
    cfg = world.nav
    active = [a for a in world.agents if not a.arrived]

    def plan_one(agent):
        view = neighbors_of(world, agent, cfg.detection_radius)
        nbrs = [n.agent for n in view if n.agent is not None]
        obs = [n.shape for n in view if n.agent is None]
        return navigation.plan_step(agent, nbrs, obs, cfg)

    workers = _worker_count()
    if workers > 1 and len(active) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            plans = list(pool.map(plan_one, active))
    else:
        plans = [plan_one(a) for a in active]

    for agent, plan in zip(active, plans):
        if agent.is_vehicle:
            agent.control = integrate_vehicle(
                agent.control, agent.dyn, plan.v, plan.steer, cfg.tau,
                substeps=INTEGRATION_SUBSTEPS)
        else:
            agent.control = integrate_pedestrian(
                agent.control, plan.v, plan.steer, cfg.tau)
        agent.prev_control = (plan.v, plan.steer)
        agent.behavior = plan.behavior
        if float(np.hypot(*(agent.reference_point - agent.goal))) <= world.goal_radius:
            agent.arrived = True

    world.time += cfg.tau
    world.step_index += 1

    survivors = [a for a in world.agents if not a.arrived]
    placed = [(a, a.placed_shape()) for a in survivors]
    events = []
    for i in range(len(placed)):
        for j in range(i + 1, len(placed)):
            if shapes_overlap(placed[i][1], placed[j][1]):
                events.append(tuple(sorted((placed[i][0].id, placed[j][0].id))))
        for k, ob in enumerate(world.obstacles):
            if shapes_overlap(placed[i][1], ob):
                events.append((placed[i][0].id, f"obstacle:{k}"))
    return events


# --- trajectory log -----------------------------------------------------------

@dataclass(frozen=True)
class AgentRecord:
    id: str
    type: str
    x: float
    y: float
    theta: float
    v: float
    phi: float | None
    b: str


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    entries: tuple
    collisions: tuple


@dataclass
class TrajectoryLog:
    steps: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def total_collisions(self) -> int:
        return sum(len(s.collisions) for s in self.steps)

    def agent_positions(self, agent_id: str) -> np.ndarray:
        pts = [(e.x, e.y) for s in self.steps for e in s.entries if e.id == agent_id]
        return np.array(pts)

    def to_csv_text(self) -> str:
        lines = ["step,time,id,type,x,y,theta,v,phi,b"]
        for s in self.steps:
            for e in s.entries:
                phi = "" if e.phi is None else f"{e.phi:.6f}"
                lines.append(
                    f"{s.step},{s.time:.6f},{e.id},{e.type},{e.x:.6f},"
                    f"{e.y:.6f},{e.theta:.6f},{e.v:.6f},{phi},{e.b}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "total_collisions": self.total_collisions,
            "steps": [
                {
                    "step": s.step,
                    "time": s.time,
                    "collisions": [list(c) for c in s.collisions],
                    "agents": [dataclasses.asdict(e) for e in s.entries],
                }
                for s in self.steps
            ],
        }


def _records_for(agents) -> tuple:
    entries = []
    for a in sorted(agents, key=lambda a: a.id):
        ref = a.reference_point
        entries.append(AgentRecord(
            id=a.id, type=a.agent_type.name.lower(), x=float(ref[0]),
            y=float(ref[1]), theta=a.heading, v=a.speed,
            phi=a.steer, b=a.behavior.value))
    return tuple(entries)


def run(scenario: Scenario) -> TrajectoryLog:
    """Step the scenario until every agent arrives or the duration elapses."""
    world = World.from_scenario(scenario)
    cfg = scenario.nav
    log = TrajectoryLog(metadata={
        "config": scenario_effective_doc(scenario),
        "tau": cfg.tau,
    })
    log.steps.append(StepRecord(0, 0.0, _records_for(world.agents), ()))
    max_steps = int(math.ceil(scenario.duration / cfg.tau - 1e-9))
    while world.step_index < max_steps:
        active_before = [a for a in world.agents if not a.arrived]
        if not active_before:
            break
        events = step(world)
        log.steps.append(StepRecord(
            world.step_index, world.time, _records_for(active_before),
            tuple(events)))
    log.metadata["steps"] = world.step_index
    log.metadata["sim_time"] = world.time
    log.metadata["arrived"] = sorted(a.id for a in world.agents if a.arrived)
    log.metadata["total_collisions"] = log.total_collisions
    return log
