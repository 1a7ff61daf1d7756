#!/usr/bin/env python3
"""Generate the bundled dense traffic fixtures.

Each fixture is a two-road intersection with right-hand traffic queued on
all four approaches plus pedestrians on crosswalks, sized to the published
benchmark rows (vehicles, pedestrians, distinct agent types). Output is
deterministic; rerun after editing and commit the JSON.
"""

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "autorvo" / "scenarios"

SHAPES = {
    "car": [[-3.6, 0.0, 0.85], [-1.8, 0.0, 0.95], [0.0, 0.0, 0.85]],
    "tricycle": [[-2.2, 0.0, 0.6], [-1.1, 0.0, 0.7], [0.0, 0.0, 0.6]],
    "bicycle": [[-1.4, 0.0, 0.35], [-0.7, 0.0, 0.4], [0.0, 0.0, 0.35]],
    "pedestrian": [[-0.1, 0.0, 0.25], [0.1, 0.0, 0.25]],
}
SPEED = {"car": 4.0, "tricycle": 2.5, "bicycle": 2.5, "pedestrian": 1.2}

# approach -> (heading, lane unit, first-vehicle distance from center)
# staggered start distances desynchronize the streams at the crossing
APPROACHES = {
    "east": (0.0, (0.0, 1.0), 14.0),   # driving +x, lane at y = -offset
    "west": (math.pi, (0.0, -1.0), 20.0),
    "north": (math.pi / 2, (1.0, 0.0), 26.0),
    "south": (-math.pi / 2, (-1.0, 0.0), 32.0),
}
LANE_OFFSET = 2.4
SPACING = 11.0      # queue spacing along an approach
SPAN = 55.0         # goal distance past the center


def vehicle(idx, vtype, approach, rank):
    heading, lane_n, first_nose = APPROACHES[approach]
    e = (math.cos(heading), math.sin(heading))
    back = first_nose + rank * SPACING
    lane = (-lane_n[0] * LANE_OFFSET, -lane_n[1] * LANE_OFFSET)
    pos = (-e[0] * back + lane[0], -e[1] * back + lane[1])
    goal = (e[0] * SPAN + lane[0], e[1] * SPAN + lane[1])
    return {
        "id": f"{vtype[:3]}{idx}",
        "type": vtype,
        "disks": SHAPES[vtype],
        "position": [round(pos[0], 3), round(pos[1], 3)],
        "theta": round(heading, 6),
        "goal": [round(goal[0], 3), round(goal[1], 3)],
        "v": SPEED[vtype],
    }


def pedestrian(idx, corner, along_x):
    """Crosswalk walker starting outside the roadway, crossing one road."""
    off = 9.0 + 2.5 * (idx % 3)
    side = 8.0
    if along_x:  # crosses the east-west road, walking in y
        x = corner * off
        pos = (x, side if idx % 2 == 0 else -side)
        goal = (x, -side if idx % 2 == 0 else side)
    else:
        y = corner * off
        pos = (side if idx % 2 == 0 else -side, y)
        goal = (-side if idx % 2 == 0 else side, y)
    theta = math.atan2(goal[1] - pos[1], goal[0] - pos[0])
    return {
        "id": f"ped{idx}",
        "type": "pedestrian",
        "disks": SHAPES["pedestrian"],
        "position": [round(pos[0], 3), round(pos[1], 3)],
        "theta": round(theta, 6),
        "goal": [round(goal[0], 3), round(goal[1], 3)],
        "v": SPEED["pedestrian"],
    }


FIXTURES = {
    # name: (cars, tricycles, bicycles, pedestrians)
    "traffic1": (10, 3, 3, 5),
    "traffic2": (8, 2, 2, 2),
    "traffic3": (6, 0, 2, 2),
    "traffic4": (6, 2, 2, 1),
    "traffic5": (10, 3, 2, 1),
    "traffic6": (5, 3, 0, 2),
}


def build(name, cars, trikes, bikes, peds):
    agents = []
    order = ["east", "west", "north", "south"]
    ranks = {a: 0 for a in order}
    vehicles = ["car"] * cars + ["tricycle"] * trikes + ["bicycle"] * bikes
    for i, vtype in enumerate(vehicles):
        approach = order[i % 4]
        agents.append(vehicle(i, vtype, approach, ranks[approach]))
        ranks[approach] += 1
    for i in range(peds):
        agents.append(pedestrian(i, corner=1 if i % 2 == 0 else -1,
                                 along_x=(i % 2 == 0)))
    return {
        "duration": 60.0,
        "goal_radius": 1.0,
        "seed": 0,
        "agents": agents,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, counts in FIXTURES.items():
        doc = build(name, *counts)
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{name}: {len(doc['agents'])} agents -> {path}")


if __name__ == "__main__":
    main()
