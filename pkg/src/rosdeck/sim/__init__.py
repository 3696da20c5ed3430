"""Desk-scale test world: embedded ROS master plus a differential-drive robot."""

from .master import MasterRegistry, SimMaster
from .world import Floorplan, RobotSim, RobotState, integrate_twist, load_floorplan, reveal_map, wrap_angle
from .robot import RobotNode

__all__ = [
    "MasterRegistry",
    "SimMaster",
    "Floorplan",
    "RobotSim",
    "RobotState",
    "RobotNode",
    "integrate_twist",
    "load_floorplan",
    "reveal_map",
    "wrap_angle",
]
