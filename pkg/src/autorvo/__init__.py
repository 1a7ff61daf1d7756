"""Collision-free local navigation for heterogeneous road agents.

Agents carry tight disk-chain footprints, per-type kinematic and dynamic
constraints, and plan by sampling reachable controls, discarding those whose
Minkowski-sum configuration collides with predicted neighbors, and picking
the cheapest survivor under a weighted cost.
"""

from .geometry import (
    CtmatShape,
    ConvexPiece,
    Disk,
    MinkowskiSumShape,
    ViewpointInsideShape,
    contains_origin,
    minkowski_sum,
    place_shape,
    shapes_overlap,
    signed_distance_origin,
    tangent_angles,
)
from .dynamics import (
    AgentType,
    DynamicsParams,
    InvalidControl,
    PedestrianControlState,
    VehicleControlState,
    default_params,
    integrate_pedestrian,
    integrate_vehicle,
    reachable_ranges,
    steering_map,
    v_max_braking,
    v_max_centripetal,
    v_max_combined,
)
from .navigation import (
    Behavior,
    ControlSample,
    CostWeights,
    FanSpace,
    NavConfig,
    plan_step,
)
from .sim import (
    AgentState,
    ParseError,
    Scenario,
    TrajectoryLog,
    ValidationError,
    World,
    load_scenario,
    neighbors_of,
    run,
    step,
)
from .evaluation import (
    EntropyReport,
    ReferenceTrajectorySet,
    compare_algorithms,
    entropy_metric,
    one_step_errors,
)

__version__ = "0.1.0"
