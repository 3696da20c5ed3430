"""Operator-facing gateway: widget semantics plus the HTTP/WebSocket service."""

from .widgets import (
    GridFrame,
    JoystickSample,
    JoystickSession,
    clamp_to_unit_disc,
    gridmap_to_frame,
    joystick_to_twist,
    occupancy_to_gray,
)
from .session import GatewaySession, GatewayError
from .server import GatewayServer, build_app

__all__ = [
    "GridFrame",
    "JoystickSample",
    "JoystickSession",
    "GatewaySession",
    "GatewayError",
    "GatewayServer",
    "build_app",
    "clamp_to_unit_disc",
    "gridmap_to_frame",
    "joystick_to_twist",
    "occupancy_to_gray",
]
