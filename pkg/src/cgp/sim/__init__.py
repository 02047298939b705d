from .world import (
    Body,
    Contact,
    Plane,
    SimFault,
    TargetState,
    World,
    WorldConfig,
    palm_impedance_wrench,
    pd_joint_torque,
    step,
)
from .contacts import read_tactile, resolve_contacts, tactile_to_world
from .kinematics import (fingertip_fk, fingertip_ik, forward_hand,
                         solve_station_tips, wrap_angle)
from .render import render_agent_view
from .tasks import (
    TASK_IDS,
    load_task_config,
    make_press_fixture,
    probe,
    reset_task,
    success_check,
)
from .observe import Observation, observe

__all__ = [
    "Body", "Contact", "Observation", "Plane", "SimFault", "TASK_IDS",
    "TargetState", "World", "WorldConfig", "fingertip_fk", "fingertip_ik",
    "forward_hand", "load_task_config", "make_press_fixture", "observe",
    "palm_impedance_wrench", "pd_joint_torque", "probe", "read_tactile",
    "render_agent_view", "reset_task", "resolve_contacts", "solve_station_tips", "step",
    "success_check", "tactile_to_world", "wrap_angle",
]
