"""Command-line front end: run, eval, bench, validate.

Exit codes: 0 success, 2 parse/validation/input failure, 3 a run finished
but the collision audit recorded overlap events. The AUTORVO_THREADS
environment variable caps plan-phase worker threads; AUTORVO_BACKEND picks
the kernel backend (numba or numpy).
"""

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import _kernels, navigation
from .evaluation import (
    ReferenceTrajectorySet,
    compare_algorithms,
    report_json_dict,
    report_table_text,
)
from .navigation import CostWeights, NavConfig
from .sim import (
    ParseError,
    Scenario,
    ValidationError,
    load_scenario,
    run,
    scenario_effective_doc,
)

_NAV_FIELDS = {f.name for f in dataclasses.fields(NavConfig)} - {"weights"}
_WEIGHT_FIELDS = {f.name for f in dataclasses.fields(CostWeights)}
_DYN_FIELD_NAMES = {
    "v_max_type", "a_throttle", "a_brake", "L", "phi_max", "phi_rate_max",
    "steer_gain", "g", "mu", "t_react",
}
_TYPE_NAMES = {"pedestrian", "bicycle", "tricycle", "car"}


class OverrideError(ValueError):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, key: str, raw_value: str) -> None:
    """Set one dotted-path config override on a raw scenario document."""
    value = _parse_value(raw_value)
    parts = key.split(".")
    if len(parts) == 1 and parts[0] in ("duration", "goal_radius", "seed"):
        doc[parts[0]] = value
        return
    if parts[0] == "nav":
        if len(parts) == 2 and parts[1] in _NAV_FIELDS:
            doc.setdefault("nav", {})[parts[1]] = value
            return
        if len(parts) == 3 and parts[1] == "weights" and parts[2] in _WEIGHT_FIELDS:
            doc.setdefault("nav", {}).setdefault("weights", {})[parts[2]] = value
            return
    if (parts[0] == "agent_types" and len(parts) == 3
            and parts[1] in _TYPE_NAMES and parts[2] in _DYN_FIELD_NAMES):
        doc.setdefault("agent_types", {}).setdefault(parts[1], {})[parts[2]] = value
        return
    raise OverrideError(f"unknown override path {key!r}")


def _load_doc(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: scenario document must be a JSON object")
    return doc


def _load_scenario_with_overrides(path: str, overrides) -> Scenario:
    doc = _load_doc(path)
    for item in overrides or []:
        if "=" not in item:
            raise OverrideError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        apply_override(doc, key.strip(), value.strip())
    return load_scenario(doc)


def nav_with_overrides(base: NavConfig, over: dict) -> NavConfig:
    kwargs = {}
    for key, val in over.items():
        if key == "weights":
            merged = {**dataclasses.asdict(base.weights), **val}
            kwargs["weights"] = CostWeights(**merged)
        elif key in _NAV_FIELDS:
            kwargs[key] = val
        else:
            raise ValueError(f"unknown nav option {key!r}")
    return dataclasses.replace(base, **kwargs)


# --- run ----------------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        scenario = _load_scenario_with_overrides(args.scenario, args.set)
    except (ParseError, ValidationError, OverrideError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    log = run(scenario)
    wall = time.perf_counter() - t0

    (outdir / "trajectory.csv").write_text(log.to_csv_text())
    (outdir / "trajectory.json").write_text(json.dumps(log.to_json_dict(), indent=1))
    summary = {
        "scenario": str(args.scenario),
        "agents": len(scenario.agents),
        "steps": log.metadata["steps"],
        "sim_time": log.metadata["sim_time"],
        "arrived": log.metadata["arrived"],
        "audit_events": log.total_collisions,
        "wall_time_s": wall,
        "kernel_backend": _kernels.active_backend(),
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=1))
    print(f"steps={summary['steps']} sim_time={summary['sim_time']:.1f}s "
          f"arrived={len(summary['arrived'])}/{summary['agents']} "
          f"audit_events={summary['audit_events']} wall={wall:.2f}s")
    return 0 if log.total_collisions == 0 else 3


# --- validate -------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        scenario = _load_scenario_with_overrides(args.scenario, args.set)
    except (ParseError, ValidationError, OverrideError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(scenario_effective_doc(scenario), indent=1))
    return 0


# --- eval -----------------------------------------------------------------------

def cmd_eval(args) -> int:
    try:
        scenario = _load_scenario_with_overrides(args.scenario, args.set)
        csv_text = Path(args.reference_csv).read_text()
        sidecar = json.loads(Path(args.reference_json).read_text())
        configs_doc = json.loads(Path(args.configs).read_text())
        if not isinstance(configs_doc, dict):
            raise ValueError("configs file must map names to nav overrides")
        reference = ReferenceTrajectorySet.from_csv(csv_text, sidecar)
        pairs = [(name, nav_with_overrides(scenario.nav, over))
                 for name, over in configs_doc.items()]
        rows = compare_algorithms(reference, scenario, pairs)
    except (ParseError, ValidationError, OverrideError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    table = report_table_text(rows)
    print(table, end="")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "entropy_report.txt").write_text(table)
        (outdir / "entropy_report.json").write_text(
            json.dumps(report_json_dict(rows), indent=1))
    return 0


# --- bench ----------------------------------------------------------------------

def _grid_counts(m_samples: int) -> tuple[int, int]:
    sv = max(2, int(round(math.sqrt(m_samples))))
    sp = max(2, int(round(m_samples / sv)))
    return sv, sp


def make_bench_case(scenario: Scenario, n_neighbors: int, m_samples: int, seed: int):
    """Synthetic planning case with exactly n in-range neighbors."""
    rng = np.random.default_rng(seed)
    templates = scenario.agents or []
    if not templates:
        raise ValidationError("bench scenario needs at least one agent as a template")
    from .dynamics import VehicleControlState, PedestrianControlState

    def spawn(template, pos, theta, v, goal):
        a = template.clone()
        if a.is_vehicle:
            a.control = VehicleControlState.from_reference(pos, theta, v, 0.0, a.dyn.L)
            a.prev_control = (v, 0.0)
        else:
            a.control = PedestrianControlState(v=v, theta=theta, p=np.asarray(pos, float))
            a.prev_control = (v, theta)
        a.goal = np.asarray(goal, dtype=np.float64)
        a.arrived = False
        return a

    ego = spawn(templates[0], (0.0, 0.0), 0.0, 3.0, (500.0, 0.0))
    ring = min(scenario.nav.detection_radius * 0.45, 9.0)
    neighbors = []
    for k in range(n_neighbors):
        template = templates[(k + 1) % len(templates)]
        ang = 2.0 * math.pi * k / max(1, n_neighbors) + 0.3
        radius = ring + 1.5 * (k % 3) + rng.uniform(0.0, 0.5)
        pos = (radius * math.cos(ang), radius * math.sin(ang))
        heading = ang + math.pi / 2.0
        goal = (pos[0] + 80.0 * math.cos(heading), pos[1] + 80.0 * math.sin(heading))
        nb = spawn(template, pos, heading, 2.0, goal)
        nb.id = f"bench{k}"
        neighbors.append(nb)
    sv, sp = _grid_counts(m_samples)
    cfg = dataclasses.replace(scenario.nav, samples_v=sv, samples_phi=sp)
    return ego, neighbors, cfg


def _fit_r2(x: np.ndarray, y: np.ndarray) -> float:
    a = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    pred = a @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot <= 0:
        return 1.0
    return 1.0 - ss_res / ss_tot


def bench_grid(scenario: Scenario, neighbors: list, samples: list, reps: int,
               backends: list, seed: int = 0) -> list[dict]:
    """Time plan_step over the (N, M) grid; one row per grid point/backend."""
    rows = []
    previous = _kernels.active_backend()
    try:
        for backend in backends:
            _kernels.select_backend(backend)
            for n in neighbors:
                for m in samples:
                    ego, nbrs, cfg = make_bench_case(scenario, n, m, seed)
                    navigation.plan_step(ego, nbrs, [], cfg)  # warmup/JIT
                    times = []
                    for _ in range(reps):
                        t0 = time.perf_counter()
                        navigation.plan_step(ego, nbrs, [], cfg)
                        times.append(time.perf_counter() - t0)
                    times_ms = 1e3 * np.array(times)
                    rows.append({
                        "backend": backend,
                        "neighbors": n,
                        "samples": m,
                        "reps": reps,
                        "mean_ms": float(np.mean(times_ms)),
                        "std_ms": float(np.std(times_ms)),
                        "min_ms": float(np.min(times_ms)),
                    })
    finally:
        _kernels.select_backend(previous)
    return rows


def bench_fits(rows: list[dict], backend: str) -> dict:
    """Least-squares fit of t ~ alpha N M + beta N + gamma plus sweep fits."""
    mine = [r for r in rows if r["backend"] == backend]
    n = np.array([r["neighbors"] for r in mine], dtype=float)
    m = np.array([r["samples"] for r in mine], dtype=float)
    t = np.array([r["mean_ms"] for r in mine])
    design = np.stack([n * m, n, np.ones_like(n)], axis=1)
    coef, *_ = np.linalg.lstsq(design, t, rcond=None)
    pred = design @ coef
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    r2 = 1.0 - float(np.sum((t - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    out = {"model": "t_ms ~ alpha*N*M + beta*N + gamma",
           "alpha": float(coef[0]), "beta": float(coef[1]),
           "gamma": float(coef[2]), "r2": r2}

    m_vals = sorted({r["samples"] for r in mine})
    m_fix = 100 if 100 in m_vals else m_vals[len(m_vals) // 2]
    sweep_n = [(r["neighbors"], r["mean_ms"]) for r in mine if r["samples"] == m_fix]
    if len(sweep_n) >= 3:
        xs, ys = map(np.array, zip(*sorted(sweep_n)))
        out["r2_linear_in_n"] = _fit_r2(xs.astype(float), ys)
        out["m_fixed"] = m_fix

    n_vals = sorted({r["neighbors"] for r in mine})
    n_fix = 5 if 5 in n_vals else min(n_vals, key=lambda x: abs(x - 5))
    sweep_m = [(r["samples"], r["mean_ms"]) for r in mine if r["neighbors"] == n_fix]
    if len(sweep_m) >= 3:
        xs, ys = map(np.array, zip(*sorted(sweep_m)))
        out["r2_linear_in_m"] = _fit_r2(xs.astype(float), ys)
        out["n_fixed"] = n_fix
    return out


def cmd_bench(args) -> int:
    try:
        scenario = _load_scenario_with_overrides(args.scenario, args.set)
        neighbors = [int(x) for x in args.neighbors.split(",")]
        samples = [int(x) for x in args.samples.split(",")]
        if any(x < 0 for x in neighbors) or any(x < 1 for x in samples):
            raise ValueError("sweep values must be nonnegative (neighbors) / >= 1 (samples)")
    except (ParseError, ValidationError, OverrideError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    backends = ["numba", "numpy"] if args.compare_backends else [_kernels.active_backend()]
    rows = bench_grid(scenario, neighbors, samples, args.reps, backends,
                      seed=scenario.seed)

    header = "backend,neighbors,samples,reps,mean_ms,std_ms,min_ms"
    csv_lines = [header] + [
        f"{r['backend']},{r['neighbors']},{r['samples']},{r['reps']},"
        f"{r['mean_ms']:.4f},{r['std_ms']:.4f},{r['min_ms']:.4f}" for r in rows]
    print("\n".join(csv_lines))

    summary = {"rows": rows, "fits": {}}
    for backend in backends:
        fit = bench_fits(rows, backend)
        summary["fits"][backend] = fit
        parity = [r for r in rows if r["backend"] == backend
                  and r["samples"] == 100 and r["neighbors"] in (4, 5)]
        if parity:
            mean = float(np.mean([r["mean_ms"] for r in parity]))
            flag = "paper-parity" if mean <= 10.0 else ("pass" if mean <= 20.0 else "slow")
            summary["fits"][backend]["plan_ms_at_n4_5_m100"] = mean
            summary["fits"][backend]["runtime_flag"] = flag
            print(f"# {backend}: plan at N=4-5, M=100: {mean:.2f} ms [{flag}]")
        if "r2_linear_in_n" in fit:
            print(f"# {backend}: R2 linear in N (M={fit['m_fixed']}): {fit['r2_linear_in_n']:.4f}")
        if "r2_linear_in_m" in fit:
            print(f"# {backend}: R2 linear in M (N={fit['n_fixed']}): {fit['r2_linear_in_m']:.4f}")

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "bench.csv").write_text("\n".join(csv_lines) + "\n")
        (outdir / "bench_summary.json").write_text(json.dumps(summary, indent=1))
    return 0


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autorvo",
        description="Collision-free local navigation for heterogeneous road agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and export trajectories")
    p_run.add_argument("scenario")
    p_run.add_argument("-o", "--out", default="out")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a scenario and print the effective config")
    p_val.add_argument("scenario")
    p_val.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_val.set_defaults(func=cmd_validate)

    p_eval = sub.add_parser("eval", help="score configs against a reference trajectory set")
    p_eval.add_argument("reference_csv")
    p_eval.add_argument("reference_json")
    p_eval.add_argument("scenario")
    p_eval.add_argument("configs")
    p_eval.add_argument("-o", "--out", default=None)
    p_eval.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="time plan_step over a neighbors x samples grid")
    p_bench.add_argument("scenario")
    p_bench.add_argument("--neighbors", default="1,2,4,8")
    p_bench.add_argument("--samples", default="25,100,400")
    p_bench.add_argument("--reps", type=int, default=20)
    p_bench.add_argument("-o", "--out", default=None)
    p_bench.add_argument("--compare-backends", action="store_true",
                         help="time both the numba and the numpy kernel backends")
    p_bench.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
