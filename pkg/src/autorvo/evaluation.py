"""Scoring simulated trajectories against reference trajectories.

The similarity score is the differential entropy of the one-step
prediction-error distribution: initialize the simulator at each observed
pose, advance one tick, collect the 2D position errors, fit a zero-mean
Gaussian, and report 0.5 * ln((2 pi e)^2 det(Sigma)). Lower is better.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    PedestrianControlState,
    VehicleControlState,
)
from .navigation import NavConfig
from .sim import Scenario, TrajectoryLog, World, step


class InsufficientData(ValueError):
    """Too few reference samples or error vectors to evaluate."""


class DegenerateCovariance(ValueError):
    """Error covariance determinant underflowed despite regularization."""


COVARIANCE_REGULARIZATION = 1e-6  # m^2, added to the diagonal
MIN_ERROR_VECTORS = 10


@dataclass(frozen=True)
class ReferenceTrajectorySet:
    """Fixed-rate reference positions per agent id."""

    positions: dict  # id -> (F, 2) float array, one row per frame
    frame_rate: float
    types: dict  # id -> type name (informational)

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        if not self.positions:
            raise ValueError("reference set must contain at least one agent")
        for aid, pos in self.positions.items():
            arr = np.asarray(pos, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
                raise ValueError(f"agent {aid!r}: need >= 2 position samples")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"agent {aid!r}: positions must be finite")

    @property
    def duration(self) -> float:
        frames = min(p.shape[0] for p in self.positions.values())
        return (frames - 1) / self.frame_rate

    @classmethod
    def from_csv(cls, csv_text: str, sidecar: dict) -> "ReferenceTrajectorySet":
        """Ingest `frame,id,x,y` rows plus a sidecar with frame_rate and types."""
        if "frame_rate" not in sidecar:
            raise ValueError("sidecar: missing frame_rate")
        rows = {}
        reader = csv.DictReader(io.StringIO(csv_text))
        needed = {"frame", "id", "x", "y"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValueError("reference CSV must have columns frame,id,x,y")
        for row in reader:
            rows.setdefault(row["id"], []).append(
                (int(row["frame"]), float(row["x"]), float(row["y"])))
        positions = {}
        for aid, samples in rows.items():
            samples.sort(key=lambda r: r[0])
            positions[aid] = np.array([[x, y] for _, x, y in samples])
        return cls(positions=positions, frame_rate=float(sidecar["frame_rate"]),
                   types=dict(sidecar.get("types", {})))

    @classmethod
    def from_trajectory_log(cls, log: TrajectoryLog) -> "ReferenceTrajectorySet":
        """Treat a simulation log as a reference sampled at 1/tau."""
        tau = log.metadata["tau"]
        ids = {e.id for s in log.steps for e in s.entries}
        positions = {}
        types = {}
        for aid in ids:
            pts = []
            for s in log.steps:
                for e in s.entries:
                    if e.id == aid:
                        pts.append((e.x, e.y))
                        types[aid] = e.type
            positions[aid] = np.array(pts)
        return cls(positions={k: v for k, v in positions.items() if len(v) >= 2},
                   frame_rate=1.0 / tau, types=types)

    def to_csv_text(self) -> str:
        lines = ["frame,id,x,y"]
        for aid in sorted(self.positions):
            for f, (x, y) in enumerate(self.positions[aid]):
                lines.append(f"{f},{aid},{x:.6f},{y:.6f}")
        return "\n".join(lines) + "\n"

    def sidecar_dict(self) -> dict:
        return {"frame_rate": self.frame_rate, "types": dict(self.types)}


@dataclass(frozen=True)
class EntropyReport:
    covariance: np.ndarray  # (2, 2)
    entropy: float  # nats
    mean_error: float  # meters
    steps_evaluated: int
    n_errors: int


def _resample(reference: ReferenceTrajectorySet, tau: float) -> dict:
    """Linear-interpolate every agent's track onto the simulator tick grid."""
    span = reference.duration
    n_steps = int(math.floor(span / tau + 1e-9)) + 1
    if n_steps < 2:
        raise InsufficientData(
            f"reference window {span:.3f}s yields fewer than 2 steps of {tau}s")
    grid = np.arange(n_steps) * tau
    out = {}
    for aid, pos in reference.positions.items():
        t = np.arange(pos.shape[0]) / reference.frame_rate
        out[aid] = np.stack([np.interp(grid, t, pos[:, 0]),
                             np.interp(grid, t, pos[:, 1])], axis=1)
    return out


def _observed_kinematics(track: np.ndarray, tau: float):
    """Per-step heading and speed estimates by central finite differences."""
    n = track.shape[0]
    vel = np.empty_like(track)
    vel[1:-1] = (track[2:] - track[:-2]) / (2.0 * tau)
    vel[0] = (track[1] - track[0]) / tau
    vel[-1] = (track[-1] - track[-2]) / tau
    speed = np.hypot(vel[:, 0], vel[:, 1])
    heading = np.empty(n)
    prev = 0.0
    for i in range(n):
        if speed[i] > 1e-9:
            prev = math.atan2(vel[i, 1], vel[i, 0])
        heading[i] = prev
    return heading, speed


def _world_at_observation(scenario: Scenario, cfg: NavConfig, tracks: dict,
                          headings: dict, speeds: dict, k: int) -> World:
    sc = replace(scenario, nav=cfg)
    world = World.from_scenario(sc)
    for agent in world.agents:
        pos = tracks[agent.id][k]
        th = headings[agent.id][k]
        v = float(speeds[agent.id][k])
        if agent.is_vehicle:
            agent.control = VehicleControlState.from_reference(
                pos, th, v, 0.0, agent.dyn.L)
            agent.prev_control = (v, 0.0)
        else:
            agent.control = PedestrianControlState(v=v, theta=th, p=pos.copy())
            agent.prev_control = (v, th)
        # same arrival semantics as a live run: parked-at-goal agents hold
        agent.arrived = bool(
            np.hypot(*(agent.reference_point - agent.goal)) <= world.goal_radius)
    return world


def one_step_errors(reference: ReferenceTrajectorySet, scenario: Scenario,
                    cfg: NavConfig | None = None) -> np.ndarray:
    """One-tick prediction errors of the simulator against the reference.

    For every resampled reference step, each agent is initialized at its
    observed pose (heading and speed from finite differences), the world is
    advanced one tick, and the difference between the simulated and the
    observed next position is recorded per agent.
    """
    cfg = scenario.nav if cfg is None else cfg
    ids = sorted(reference.positions)
    scenario_ids = sorted(a.id for a in scenario.agents)
    if ids != scenario_ids:
        raise ValueError(
            f"reference ids {ids} do not match scenario ids {scenario_ids}")
    tracks = _resample(reference, cfg.tau)
    headings = {}
    speeds = {}
    for aid in ids:
        headings[aid], speeds[aid] = _observed_kinematics(tracks[aid], cfg.tau)

    n_steps = next(iter(tracks.values())).shape[0]
    errors = []
    for k in range(n_steps - 1):
        world = _world_at_observation(scenario, cfg, tracks, headings, speeds, k)
        step(world)
        by_id = {a.id: a for a in world.agents}
        for aid in ids:
            sim_pos = by_id[aid].reference_point
            errors.append(sim_pos - tracks[aid][k + 1])
    return np.array(errors)


def entropy_metric(errors, steps_evaluated: int | None = None) -> EntropyReport:
    """Gaussian differential entropy of zero-mean 2D error vectors."""
    errs = np.asarray(errors, dtype=np.float64)
    if errs.ndim != 2 or errs.shape[1] != 2:
        raise ValueError("errors must be an (n, 2) array")
    n = errs.shape[0]
    if n < MIN_ERROR_VECTORS:
        raise InsufficientData(f"need at least {MIN_ERROR_VECTORS} error vectors, got {n}")
    cov = errs.T @ errs / n + COVARIANCE_REGULARIZATION * np.eye(2)
    det = float(np.linalg.det(cov))
    if not math.isfinite(det) or det <= 0.0:
        raise DegenerateCovariance(f"covariance determinant {det!r}")
    entropy = 0.5 * math.log((2.0 * math.pi * math.e) ** 2 * det)
    mean_error = float(np.mean(np.hypot(errs[:, 0], errs[:, 1])))
    return EntropyReport(covariance=cov, entropy=entropy, mean_error=mean_error,
                         steps_evaluated=n if steps_evaluated is None else steps_evaluated,
                         n_errors=n)


def evaluate_reference(reference: ReferenceTrajectorySet, scenario: Scenario,
                       cfg: NavConfig | None = None) -> EntropyReport:
    cfg = scenario.nav if cfg is None else cfg
    errors = one_step_errors(reference, scenario, cfg)
    steps = errors.shape[0] // max(1, len(reference.positions))
    return entropy_metric(errors, steps_evaluated=steps)


def compare_algorithms(reference: ReferenceTrajectorySet, scenario: Scenario,
                       configs: list) -> list:
    """Entropy per named config over one reference; input order preserved.

    `configs` is a list of (name, NavConfig) pairs.
    """
    return [(name, evaluate_reference(reference, scenario, cfg))
            for name, cfg in configs]


def report_table_text(rows: list) -> str:
    """Plain-text table of (name, EntropyReport) rows."""
    lines = [f"{'config':<20} {'entropy':>10} {'mean_err_m':>12} {'steps':>7} {'errors':>7}"]
    for name, rep in rows:
        lines.append(f"{name:<20} {rep.entropy:>10.4f} {rep.mean_error:>12.4f} "
                     f"{rep.steps_evaluated:>7d} {rep.n_errors:>7d}")
    return "\n".join(lines) + "\n"


def report_json_dict(rows: list) -> dict:
    return {
        name: {
            "entropy": rep.entropy,
            "mean_error": rep.mean_error,
            "steps_evaluated": rep.steps_evaluated,
            "n_errors": rep.n_errors,
            "covariance": [[float(x) for x in row] for row in rep.covariance],
        }
        for name, rep in rows
    }
