import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from autorvo.dynamics import (
    AgentType,
    PedestrianControlState,
    VehicleControlState,
    default_params,
)
from autorvo.geometry import CtmatShape, place_shape
from autorvo.sim import AgentState

CAR_DISKS = [[-3.6, 0.0, 0.85], [-1.8, 0.0, 0.95], [0.0, 0.0, 0.85]]
PED_DISKS = [[0.0, 0.0, 0.3]]


def make_vehicle(agent_id="car0", pos=(0.0, 0.0), theta=0.0, v=0.0, phi=0.0,
                 goal=(60.0, 0.0), agent_type=AgentType.CAR, disks=None, dyn=None):
    dyn = dyn or default_params(agent_type)
    shape = CtmatShape(disks if disks is not None else CAR_DISKS)
    control = VehicleControlState.from_reference(pos, theta, v, phi, dyn.L)
    return AgentState(id=agent_id, agent_type=agent_type, shape=shape, dyn=dyn,
                      control=control, goal=np.asarray(goal, dtype=float),
                      prev_control=(v, phi))


def make_pedestrian(agent_id="ped0", pos=(0.0, 0.0), theta=0.0, v=0.0,
                    goal=(20.0, 0.0), disks=None, dyn=None):
    dyn = dyn or default_params(AgentType.PEDESTRIAN)
    shape = CtmatShape(disks if disks is not None else PED_DISKS)
    control = PedestrianControlState(v=v, theta=theta, p=np.asarray(pos, dtype=float))
    return AgentState(id=agent_id, agent_type=AgentType.PEDESTRIAN, shape=shape,
                      dyn=dyn, control=control, goal=np.asarray(goal, dtype=float),
                      prev_control=(v, theta))


def disk_obstacle(pos, radius):
    return place_shape(CtmatShape([[0.0, 0.0, radius]]), pos, 0.0)
