"""Per-agent decision pipeline.

One planning tick: find obstacle-free angular fans around the agent, pick a
preferred direction (goal bearing, or a detour into a wide-enough fan),
derive preferred steering and speed from the dynamic bounds, adjust the
preferred speed by a short lookahead over predicted neighbor motion, sample
the reachable control box on an even grid, drop samples whose forward
simulation collides with any predicted neighbor, and select the cheapest
survivor under the five-term weighted cost.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .dynamics import (
    DynamicsParams,
    reachable_ranges,
    steering_map,
    v_max_centripetal,
    v_max_combined,
)
from .geometry import (
    CtmatShape,
    ViewpointInsideShape,
    place_shape,
    point_to_shape_distance,
    tangent_angles,
    wrap_angle,
)

_MIN_WINDOW_HALF = math.radians(10.0)  # heading window floor for slow vehicles


class EmptyRange(ValueError):
    """Reachable control box is degenerate; sample the current control."""


class NoCandidate(ValueError):
    """No collision-free costed sample to select from."""


class Behavior(str, Enum):
    GO_AHEAD = "go_ahead"
    WAIT = "wait"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"


class PredictionMode(str, Enum):
    NORMAL = "normal"
    STOP = "stop"
    SPEED_UP = "speed_up"


@dataclass(frozen=True)
class CostWeights:
    a: float = 1.0
    b: float = 0.5
    c: float = 0.05
    d: float = 0.2
    e: float = 0.2

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d, self.e)
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one cost weight must be positive")


@dataclass(frozen=True)
class NavConfig:
    sigma: float = 1.5
    detection_radius: float = 20.0
    tau: float = 0.2
    kappa: float = 1.0
    substeps_collision: int = 5
    samples_v: int = 10
    samples_phi: int = 10
    speedup_factor: float = 1.25
    collision_margin: float = 0.05
    use_dynamics: bool = True
    f3_clamp_nonnegative: bool = False
    log_costs: bool = False
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        if self.sigma < 1.0:
            raise ValueError("sigma must be >= 1")
        if self.tau <= 0 or self.kappa <= 0:
            raise ValueError("tau and kappa must be positive")
        if self.samples_v < 2 or self.samples_phi < 2:
            raise ValueError("sample grid counts must be >= 2")
        if self.substeps_collision < 1:
            raise ValueError("substeps_collision must be >= 1")
        if self.collision_margin < 0:
            raise ValueError("collision_margin must be nonnegative")


@dataclass(frozen=True)
class FanSpace:
    """Obstacle-free angular sector around the agent.

    `lo`/`hi` are absolute boundary-ray angles (hi >= lo); the bisector
    halves the sector. Width is the sum of the perpendicular distances from
    the two bounding points (tangent points, or heading-window vertices) to
    the bisector line; infinite when nothing occludes the window.
    `edge_kinds` records whether each side comes from an occluder tangent
    ("tangent") or from the steering-limited heading window ("window").
    """

    bisector: np.ndarray
    half_angle_left: float
    half_angle_right: float
    width: float
    bounding_points: tuple
    lo: float
    hi: float
    edge_kinds: tuple = ("tangent", "tangent")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def contains_bearing(self, bearing: float) -> bool:
        return (bearing - self.lo) % (2.0 * math.pi) <= self.span + 1e-12


@dataclass
class ControlSample:
    v: float
    phi_or_theta: float
    grid_index: int = 0
    collision_free: bool | None = None
    cost_terms: tuple | None = None
    total_cost: float | None = None
    # filled by the collision filter, consumed by the cost evaluation
    end_ref: np.ndarray | None = None
    end_dists: np.ndarray | None = None
    entity_info: list | None = None


@dataclass(frozen=True)
class PreferredCommand:
    v_o: float
    mode: PredictionMode


@dataclass(frozen=True)
class PlanResult:
    v: float
    steer: float  # steering angle for vehicles, orientation for pedestrians
    behavior: Behavior
    mode: PredictionMode
    v_o: float
    steer_pref: float
    cost_terms: tuple | None
    total_cost: float | None
    n_candidates: int


# --- constant-control motion prediction -------------------------------------

def _pose_tracks(agent, vs, steers, times):
    """Shape-frame poses and reference-point tracks under constant controls.

    vs, steers : (S,) commanded speed and steering (vehicles) or orientation
    (pedestrians). times : (C,) offsets from now. Returns poses (S, C, 3)
    and refs (S, C, 2).
    """
    vs = np.asarray(vs, dtype=np.float64).reshape(-1)
    steers = np.asarray(steers, dtype=np.float64).reshape(-1)
    t = np.asarray(times, dtype=np.float64).reshape(1, -1)
    v = vs[:, None]
    dyn = agent.dyn
    off = agent.shape.reference_offset
    state = agent.control
    if dyn.is_vehicle:
        th0 = state.theta
        om = v * np.tan(steers[:, None]) / dyn.L
        straight = np.abs(om) < 1e-12
        om_safe = np.where(straight, 1.0, om)
        radius = v / om_safe
        th = th0 + np.where(straight, 0.0, om) * t
        cx = state.p_r[0] - radius * math.sin(th0)
        cy = state.p_r[1] + radius * math.cos(th0)
        px = np.where(straight, state.p_r[0] + v * t * math.cos(th0), cx + radius * np.sin(th))
        py = np.where(straight, state.p_r[1] + v * t * math.sin(th0), cy - radius * np.cos(th))
        ct = np.cos(th)
        st = np.sin(th)
        refx = px + dyn.L * ct
        refy = py + dyn.L * st
        rlx = off[0] - dyn.L
        rly = off[1]
        fx = px - (ct * rlx - st * rly)
        fy = py - (st * rlx + ct * rly)
    else:
        thc = steers[:, None]
        th = np.broadcast_to(thc, (vs.shape[0], t.shape[1])).copy()
        refx = state.p[0] + v * t * np.cos(thc)
        refy = state.p[1] + v * t * np.sin(thc)
        ct = np.cos(th)
        st = np.sin(th)
        fx = refx - (ct * off[0] - st * off[1])
        fy = refy - (st * off[0] + ct * off[1])
    poses = np.stack([fx, fy, th], axis=-1)
    refs = np.stack([refx, refy], axis=-1)
    return poses, refs


def _neighbor_track(neighbor, times):
    """Pose/ref track of a neighbor holding its current speed and steering."""
    if neighbor.dyn.is_vehicle:
        cur = neighbor.control.phi
    else:
        cur = neighbor.control.theta
    poses, refs = _pose_tracks(neighbor, [neighbor.speed], [cur], times)
    return poses[0], refs[0]


def _shape_at(neighbor, pose) -> CtmatShape:
    return place_shape(neighbor.shape, pose[:2], pose[2])


# --- fan spaces --------------------------------------------------------------

def _window_half(agent, cfg: NavConfig) -> tuple[float, bool]:
    """Half-width of the admissible heading window; circular for pedestrians."""
    dyn = agent.dyn
    if not dyn.is_vehicle:
        return math.pi, True
    rate = agent.speed * math.tan(dyn.phi_max) / dyn.L
    half = max(rate * cfg.tau, _MIN_WINDOW_HALF)
    if half >= math.pi:
        return math.pi, True
    return half, False


class _Occ:
    __slots__ = ("lo", "hi", "pt_lo", "pt_hi")

    def __init__(self, lo, hi, pt_lo, pt_hi):
        self.lo = lo
        self.hi = hi
        self.pt_lo = pt_lo
        self.pt_hi = pt_hi


def _merge_occlusions(occ):
    occ = sorted(occ, key=lambda o: o.lo)
    merged = [occ[0]]
    for o in occ[1:]:
        cur = merged[-1]
        if o.lo <= cur.hi + 1e-12:
            if o.hi > cur.hi:
                merged[-1] = _Occ(cur.lo, o.hi, cur.pt_lo, o.pt_hi)
        else:
            merged.append(o)
    return merged


def _fans_from_shapes(agent, shapes, cfg: NavConfig) -> list[FanSpace]:
    ref = agent.reference_point
    heading = agent.heading
    half_w, circular = _window_half(agent, cfg)

    occ = []
    for sh in shapes:
        if point_to_shape_distance(ref, sh) > cfg.detection_radius:
            continue
        try:
            ti = tangent_angles(ref, sh)
        except ViewpointInsideShape:
            return []  # buried in an occluder: nothing is free
        mid = 0.5 * (ti.lo + ti.hi)
        c = wrap_angle(mid - heading)
        h = 0.5 * ti.extent
        occ.append(_Occ(c - h, c + h, ti.point_lo, ti.point_hi))

    def vertex(rel_ang):
        a = heading + rel_ang
        return ref + cfg.detection_radius * np.array([math.cos(a), math.sin(a)])

    def fan(rel_lo, rel_hi, pt_lo, pt_hi, infinite=False):
        span = rel_hi - rel_lo
        mid = heading + 0.5 * (rel_lo + rel_hi)
        bis = np.array([math.cos(mid), math.sin(mid)])
        kinds = ("window" if pt_lo is None else "tangent",
                 "window" if pt_hi is None else "tangent")
        p_lo = vertex(rel_lo) if pt_lo is None else pt_lo
        p_hi = vertex(rel_hi) if pt_hi is None else pt_hi
        if infinite:
            width = math.inf
        else:
            width = abs(bis[0] * (p_lo[1] - ref[1]) - bis[1] * (p_lo[0] - ref[0])) + \
                abs(bis[0] * (p_hi[1] - ref[1]) - bis[1] * (p_hi[0] - ref[0]))
        return FanSpace(
            bisector=bis, half_angle_left=0.5 * span, half_angle_right=0.5 * span,
            width=width, bounding_points=(p_lo, p_hi),
            lo=heading + rel_lo, hi=heading + rel_hi, edge_kinds=kinds,
        )

    fans = []
    if circular:
        if not occ:
            return [fan(-math.pi, math.pi, None, None, infinite=True)]
        # anchor the cut at a coverage start so no gap straddles the seam
        anchor = min(o.lo for o in occ)
        pieces = []
        two_pi = 2.0 * math.pi
        for o in occ:
            s = (o.lo - anchor) % two_pi
            e = s + (o.hi - o.lo)
            if e <= two_pi + 1e-12:
                pieces.append(_Occ(s, min(e, two_pi), o.pt_lo, o.pt_hi))
            else:
                pieces.append(_Occ(s, two_pi, o.pt_lo, o.pt_hi))
                pieces.append(_Occ(0.0, e - two_pi, o.pt_lo, o.pt_hi))
        merged = _merge_occlusions(pieces)
        for k, cur in enumerate(merged):
            nxt = merged[k + 1] if k + 1 < len(merged) else None
            g_lo = cur.hi
            g_hi = nxt.lo if nxt is not None else two_pi
            hi_pt = nxt.pt_lo if nxt is not None else merged[0].pt_lo
            if g_hi - g_lo > 1e-9:
                fans.append(fan(anchor + g_lo, anchor + g_hi, cur.pt_hi, hi_pt))
        return fans

    # bounded heading window
    clipped = []
    for o in occ:
        lo = max(o.lo, -half_w)
        hi = min(o.hi, half_w)
        if hi - lo > 1e-12:
            clipped.append(_Occ(lo, hi, o.pt_lo, o.pt_hi))
    if not clipped:
        return [fan(-half_w, half_w, None, None, infinite=True)]
    merged = _merge_occlusions(clipped)
    if merged[0].lo - (-half_w) > 1e-9:
        fans.append(fan(-half_w, merged[0].lo, None, merged[0].pt_lo))
    for k in range(len(merged) - 1):
        if merged[k + 1].lo - merged[k].hi > 1e-9:
            fans.append(fan(merged[k].hi, merged[k + 1].lo,
                            merged[k].pt_hi, merged[k + 1].pt_lo))
    if half_w - merged[-1].hi > 1e-9:
        fans.append(fan(merged[-1].hi, half_w, merged[-1].pt_hi, None))
    return fans


def compute_fan_spaces(agent, neighbors, obstacles, cfg: NavConfig) -> list[FanSpace]:
    """Maximal obstacle-free angular gaps inside the admissible heading window."""
    shapes = [n.placed_shape() for n in neighbors] + list(obstacles)
    return _fans_from_shapes(agent, shapes, cfg)


def _h_in_free_space(fans, h_bearing: float, min_width: float) -> bool:
    return any(f.width >= min_width and f.contains_bearing(h_bearing) for f in fans)


def preferred_direction(agent, fans, h, cfg: NavConfig) -> np.ndarray:
    """Goal bearing, or a detour direction inside the nearest free fan.

    The detour enters the fan from its goal-side boundary offset so the
    perpendicular clearance from that boundary's bounding point equals half
    the agent width; fans that cannot grant that clearance on both sides
    are skipped. Falls back to the goal bearing when nothing qualifies.
    """
    h = np.asarray(h, dtype=np.float64)
    h_bear = math.atan2(h[1], h[0])
    min_width = cfg.sigma * agent.width
    free = [f for f in fans if f.width >= min_width]
    if not free:
        return h
    for f in free:
        if f.contains_bearing(h_bear):
            return h

    ref = agent.reference_point
    half_w = 0.5 * agent.width

    def ang_dist(f):
        return min(abs(wrap_angle(h_bear - f.lo)), abs(wrap_angle(h_bear - f.hi)))

    for f in sorted(free, key=lambda f: (ang_dist(f), f.lo)):
        d_lo = abs(wrap_angle(h_bear - f.lo))
        d_hi = abs(wrap_angle(h_bear - f.hi))
        if d_lo <= d_hi:
            edge_ang = f.lo
            pt_edge, pt_far = f.bounding_points
            kind_edge, kind_far = f.edge_kinds
            into = 1.0
        else:
            edge_ang = f.hi
            pt_far, pt_edge = f.bounding_points
            kind_far, kind_edge = f.edge_kinds
            into = -1.0
        if kind_edge == "window":
            # steering-limit side: nothing to clear, head along the limit
            delta = 1e-9
        else:
            dist_edge = float(np.hypot(*(pt_edge - ref)))
            if dist_edge <= half_w:
                continue
            delta = math.asin(min(1.0, half_w / dist_edge))
            if delta > f.span + 1e-12:
                continue
        ang = edge_ang + into * delta
        d = np.array([math.cos(ang), math.sin(ang)])
        if kind_edge == "tangent":
            clear_edge = abs(d[0] * (pt_edge[1] - ref[1]) - d[1] * (pt_edge[0] - ref[0]))
            if clear_edge + 1e-9 < half_w:
                continue
        if kind_far == "tangent":
            clear_far = abs(d[0] * (pt_far[1] - ref[1]) - d[1] * (pt_far[0] - ref[0]))
            if clear_far + 1e-9 < half_w:
                continue
        return d
    return h


# --- forward clearance -------------------------------------------------------

def _ray_circle(origin, direction, center, radius):
    rel = center - origin
    b = rel @ direction
    disc = b * b - (rel @ rel - radius * radius)
    if disc < 0.0:
        return math.inf
    root = math.sqrt(disc)
    t0 = b - root
    if t0 >= 0.0:
        return t0
    if b + root >= 0.0:
        return 0.0
    return math.inf


def _ray_segment(origin, direction, p0, p1):
    d = p1 - p0
    denom = direction[0] * (-d[1]) - direction[1] * (-d[0])
    if abs(denom) < 1e-15:
        return math.inf
    rel = p0 - origin
    t = (rel[0] * (-d[1]) - rel[1] * (-d[0])) / denom
    u = (direction[0] * rel[1] - direction[1] * rel[0]) / denom
    if t >= 0.0 and 0.0 <= u <= 1.0:
        return t
    return math.inf


def _ray_hull_entry(origin, direction, c1, r1, c2, r2):
    """First hit of a forward ray with the hull of two disks (inf if missed)."""
    disks = np.array([[c1[0], c1[1], r1], [c2[0], c2[1], r2]])
    if _kernels.point_shape_dist(origin[0], origin[1], disks) <= 0.0:
        return 0.0
    best = min(_ray_circle(origin, direction, c1, r1),
               _ray_circle(origin, direction, c2, r2))
    delta = c2 - c1
    d = float(np.hypot(*delta))
    if d > abs(r1 - r2) and d > 0.0:
        u = delta / d
        perp = np.array([-u[1], u[0]])
        q = (r1 - r2) / d
        root = math.sqrt(max(0.0, 1.0 - q * q))
        for sgn in (1.0, -1.0):
            n = q * u + sgn * root * perp
            e1 = c1 + r1 * n
            e2 = c2 + r2 * n
            best = min(best, _ray_segment(origin, direction, e1, e2))
    return best


def forward_clearance(agent, neighbors, obstacles, cfg: NavConfig) -> float:
    """Free distance ahead along the current heading.

    The agent sweeps a corridor of its own width from the front of its
    shape; the clearance is the distance to the first neighbor or obstacle
    the corridor touches, capped at the detection radius.
    """
    ref = agent.reference_point
    heading = agent.heading
    e = np.array([math.cos(heading), math.sin(heading)])
    placed = agent.placed_shape()
    front = max(float((row[:2] - ref) @ e + row[2]) for row in placed.disks)
    start = ref + front * e
    half_w = 0.5 * agent.width

    best = cfg.detection_radius
    shapes = [n.placed_shape() for n in neighbors] + list(obstacles)
    for sh in shapes:
        for i0, i1 in sh.piece_index_pairs():
            d1 = sh.disks[i0]
            d2 = sh.disks[i1]
            t = _ray_hull_entry(start, e, d1[:2], d1[2] + half_w,
                                d2[:2], d2[2] + half_w)
            if t < best:
                best = t
    return max(0.0, best)


# --- lookahead adjustment ----------------------------------------------------

def prediction_adjust(agent, neighbors, obstacles, h, cfg: NavConfig,
                      dyn: DynamicsParams, steer_pref: float | None = None,
                      fans_now=None) -> PreferredCommand:
    """Preferred speed, adjusted by re-checking goal freedom after kappa.

    Blocked now but free after the lookahead: stop and wait for the gap.
    Free now but blocked after: speed up to clear the closing gap. The
    baseline preferred speed is half the combined maximum.
    """
    h = np.asarray(h, dtype=np.float64)
    h_bear = math.atan2(h[1], h[0])
    min_width = cfg.sigma * agent.width
    if fans_now is None:
        fans_now = compute_fan_spaces(agent, neighbors, obstacles, cfg)
    if steer_pref is None:
        d_o = preferred_direction(agent, fans_now, h, cfg)
        if dyn.is_vehicle:
            a = np.array([math.cos(agent.heading), math.sin(agent.heading)])
            steer_pref = steering_map(a, d_o, dyn)
        else:
            steer_pref = math.atan2(d_o[1], d_o[0])

    free_now = _h_in_free_space(fans_now, h_bear, min_width)

    future_shapes = []
    for n in neighbors:
        poses, _ = _neighbor_track(n, [cfg.kappa])
        future_shapes.append(_shape_at(n, poses[0]))
    fans_after = _fans_from_shapes(agent, future_shapes + list(obstacles), cfg)
    free_after = _h_in_free_space(fans_after, h_bear, min_width)

    if cfg.use_dynamics:
        clear = forward_clearance(agent, neighbors, obstacles, cfg)
        v_mx = v_max_combined(steer_pref if dyn.is_vehicle else 0.0, clear, dyn)
    else:
        v_mx = dyn.v_max_type

    if not free_now and free_after:
        return PreferredCommand(0.0, PredictionMode.STOP)
    if free_now and not free_after:
        return PreferredCommand(min(cfg.speedup_factor * v_mx / 2.0, v_mx),
                                PredictionMode.SPEED_UP)
    return PreferredCommand(v_mx / 2.0, PredictionMode.NORMAL)


# --- sampling, filtering, cost -----------------------------------------------

def sample_controls(agent, dyn: DynamicsParams, cfg: NavConfig,
                    v_o: float, steer_pref: float) -> list[ControlSample]:
    """Even grid over the reachable speed x steering (or orientation) box.

    Vehicle samples breaking the grip bound at their steering are dropped.
    """
    if dyn.is_vehicle:
        if cfg.use_dynamics:
            (v_lo, v_hi), (s_lo, s_hi) = reachable_ranges(agent.control, dyn, cfg.tau)
        else:
            v_lo, v_hi = 0.0, dyn.v_max_type
            s_lo, s_hi = -dyn.phi_max, dyn.phi_max
        if v_hi - v_lo <= 1e-15 and s_hi - s_lo <= 1e-15:
            raise EmptyRange("degenerate reachable box")
        vs = np.linspace(v_lo, v_hi, cfg.samples_v)
        ss = np.linspace(s_lo, s_hi, cfg.samples_phi)
        samples = []
        idx = 0
        for v in vs:
            for s in ss:
                if cfg.use_dynamics and v > v_max_centripetal(s, dyn) + 1e-9:
                    idx += 1
                    continue
                samples.append(ControlSample(float(v), float(s), grid_index=idx))
                idx += 1
        return samples
    if cfg.use_dynamics:
        (v_lo, v_hi), _ = reachable_ranges(agent.control, dyn, cfg.tau)
    else:
        v_lo, v_hi = 0.0, dyn.v_max_type
    if v_hi - v_lo <= 1e-15:
        # orientation is always fully sampleable; only speed can degenerate
        v_hi = v_lo
    vs = np.linspace(v_lo, v_hi, cfg.samples_v)
    n = cfg.samples_phi
    # even circular grid anchored at the current facing, so planning is
    # invariant under rigid motions of the whole scene
    th0 = agent.control.theta
    thetas = sorted(wrap_angle(th0 + 2.0 * math.pi * k / n) for k in range(n))
    samples = []
    idx = 0
    for v in vs:
        for th in thetas:
            samples.append(ControlSample(float(v), float(th), grid_index=idx))
            idx += 1
    return samples


def _entity_lists(neighbors, obstacles, times):
    """Concatenated local disks, per-checkpoint poses and end positions."""
    n_entities = len(neighbors) + len(obstacles)
    c = len(times)
    disk_blocks = []
    noff = np.zeros(n_entities + 1, dtype=np.int64)
    nposes = np.zeros((n_entities, c, 3))
    info = []
    for k, n in enumerate(neighbors):
        poses, refs = _neighbor_track(n, times)
        disk_blocks.append(n.shape.disks)
        noff[k + 1] = noff[k] + len(n.shape.disks)
        nposes[k] = poses
        info.append((refs[-1], int(n.agent_type)))
    base = len(neighbors)
    for k, sh in enumerate(obstacles):
        disk_blocks.append(sh.disks)
        noff[base + k + 1] = noff[base + k] + len(sh.disks)
        # placed shapes carry world disks; identity pose per checkpoint
        info.append((sh.reference_offset.copy(), None))
    if disk_blocks:
        ndisks = np.ascontiguousarray(np.vstack(disk_blocks))
    else:
        ndisks = np.zeros((0, 3))
    return ndisks, noff, nposes, info


def filter_collision_free(agent, samples, neighbors, obstacles, cfg: NavConfig,
                          dyn: DynamicsParams) -> list[ControlSample]:
    """Flag each sample by simulating it over tau against predicted neighbors.

    The agent holds the sampled control while neighbors hold their current
    ones; containment of the origin in the relative-configuration Minkowski
    sum at any collision checkpoint rejects the sample. Static obstacles are
    checked the same way with zero velocity.
    """
    if not samples:
        return samples
    c = cfg.substeps_collision
    times = np.array([cfg.tau * (j + 1) / c for j in range(c)])
    vs = np.array([s.v for s in samples])
    ss = np.array([s.phi_or_theta for s in samples])
    aposes, arefs = _pose_tracks(agent, vs, ss, times)
    ndisks, noff, nposes, info = _entity_lists(neighbors, obstacles, times)
    free, end_d = _kernels.batch_plan_eval(
        agent.shape.disks, np.ascontiguousarray(aposes), ndisks, noff,
        np.ascontiguousarray(nposes), cfg.collision_margin)
    for i, smp in enumerate(samples):
        smp.collision_free = bool(free[i])
        smp.end_ref = arefs[i, -1]
        smp.end_dists = end_d[i]
        smp.entity_info = info
    return samples


def evaluate_cost(agent, sample: ControlSample, neighbors, cfg: NavConfig,
                  v_o: float, steer_pref: float, goal) -> ControlSample:
    """Fill the five cost terms and the weighted total for one sample."""
    if sample.end_ref is None:
        filter_collision_free(agent, [sample], neighbors, [], cfg, agent.dyn)
    w = cfg.weights
    is_vehicle = agent.dyn.is_vehicle
    prev_v, prev_s = agent.prev_control

    if is_vehicle:
        ds_pref = sample.phi_or_theta - steer_pref
        ds_prev = sample.phi_or_theta - prev_s
    else:
        ds_pref = wrap_angle(sample.phi_or_theta - steer_pref)
        ds_prev = wrap_angle(sample.phi_or_theta - prev_s)

    f1 = (sample.v - v_o) ** 2 + ds_pref ** 2
    f2 = abs(sample.v - prev_v) + abs(ds_prev)

    p = sample.end_ref
    own_code = int(agent.agent_type)
    f3 = 0.0
    for pos_n, code in sample.entity_info:
        wt = 1.0 if code is None else 1.0 + own_code - code
        if cfg.f3_clamp_nonnegative and wt < 0.0:
            wt = 0.0
        f3 -= wt * float(np.hypot(*(p - pos_n)))
    f4 = -float(np.sum(sample.end_dists)) if sample.end_dists.size else 0.0
    f5 = float(np.hypot(*(p - np.asarray(goal, dtype=np.float64))))

    sample.cost_terms = (f1, f2, f3, f4, f5)
    sample.total_cost = w.a * f1 + w.b * f2 + w.c * f3 + w.d * f4 + w.e * f5
    return sample


def select_control(candidates) -> ControlSample:
    """Minimum-cost candidate; deterministic tie-breaking."""
    if not candidates:
        raise NoCandidate("no collision-free candidate")
    return min(candidates, key=lambda s: (
        s.total_cost, s.cost_terms[0], abs(s.phi_or_theta), s.v, s.grid_index))


def plan_step(agent, neighbors, obstacles, cfg: NavConfig) -> PlanResult:
    """One full planning tick for a single agent against a frozen snapshot."""
    dyn = agent.dyn
    ref = agent.reference_point
    to_goal = np.asarray(agent.goal, dtype=np.float64) - ref
    dist_goal = float(np.hypot(*to_goal))
    if dist_goal > 1e-12:
        h = to_goal / dist_goal
    else:
        h = np.array([math.cos(agent.heading), math.sin(agent.heading)])

    fans = compute_fan_spaces(agent, neighbors, obstacles, cfg)
    d_o = preferred_direction(agent, fans, h, cfg)
    if dyn.is_vehicle:
        a = np.array([math.cos(agent.heading), math.sin(agent.heading)])
        steer_pref = steering_map(a, d_o, dyn)
    else:
        steer_pref = math.atan2(d_o[1], d_o[0])

    cmd = prediction_adjust(agent, neighbors, obstacles, h, cfg, dyn,
                            steer_pref=steer_pref, fans_now=fans)

    try:
        samples = sample_controls(agent, dyn, cfg, cmd.v_o, steer_pref)
    except EmptyRange:
        samples = [ControlSample(agent.speed, agent.steer_or_theta)]

    filter_collision_free(agent, samples, neighbors, obstacles, cfg, dyn)
    candidates = [s for s in samples if s.collision_free]
    if not candidates:
        # emergency: stop, hold steering
        return PlanResult(
            v=0.0, steer=agent.steer_or_theta, behavior=Behavior.WAIT,
            mode=cmd.mode, v_o=cmd.v_o, steer_pref=steer_pref,
            cost_terms=None, total_cost=None, n_candidates=0)

    for s in candidates:
        evaluate_cost(agent, s, neighbors, cfg, cmd.v_o, steer_pref, agent.goal)
    best = select_control(candidates)

    if best.v < 0.05:
        behavior = Behavior.WAIT
    elif dyn.is_vehicle and best.phi_or_theta > 0.1 * dyn.phi_max:
        behavior = Behavior.TURN_LEFT
    elif dyn.is_vehicle and best.phi_or_theta < -0.1 * dyn.phi_max:
        behavior = Behavior.TURN_RIGHT
    else:
        behavior = Behavior.GO_AHEAD

    return PlanResult(
        v=best.v, steer=best.phi_or_theta, behavior=behavior, mode=cmd.mode,
        v_o=cmd.v_o, steer_pref=steer_pref, cost_terms=best.cost_terms,
        total_cost=best.total_cost, n_candidates=len(candidates))
