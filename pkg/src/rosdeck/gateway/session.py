"""Gateway session state: one active config, one node, per-widget pipelines.

Plays the view-model role: owns connection status and widget runtime state,
publishes change events to whoever is listening (the WebSocket layer, tests),
and knows nothing about HTTP. Status moves disconnected -> connecting ->
connected; failures fall back to disconnected with a reason, partial widget
failures connect with warnings.
"""

from __future__ import annotations

import base64
import logging
import threading
from pathlib import Path

from .. import messages as msg
from ..config import (
    AppConfig,
    GridmapWidget,
    JoystickWidget,
    LoggerWidget,
    save_config,
)
from ..master import RpcError
from ..node import NodeHandle
from .widgets import JoystickSample, JoystickSession, gridmap_to_frame

log = logging.getLogger(__name__)

DISCONNECTED, CONNECTING, CONNECTED = "disconnected", "connecting", "connected"


class GatewayError(Exception):
    pass


def frame_event(frame) -> dict:
    return {
        "type": "gridmap_frame",
        "widget": frame.widget_id,
        "width": frame.width,
        "height": frame.height,
        "resolution": frame.resolution,
        "origin": {"x": frame.origin_x, "y": frame.origin_y, "yaw": frame.origin_yaw},
        "cells_b64": base64.b64encode(frame.cells).decode("ascii"),
    }


class _GridmapRuntime:
    """Tracks source sequence numbers so stale frames never follow newer ones."""

    def __init__(self, widget: GridmapWidget, emit):
        self.widget = widget
        self._emit = emit
        self._lock = threading.Lock()
        self._last_seq = -1
        self.latest_event: dict | None = None

    def on_grid(self, grid: msg.OccupancyGrid) -> None:
        try:
            frame = gridmap_to_frame(grid, self.widget.id)
        except ValueError as exc:
            log.warning("malformed grid on %s: %s", self.widget.topic, exc)
            return
        event = frame_event(frame)
        with self._lock:
            if grid.header.seq < self._last_seq:
                return
            self._last_seq = grid.header.seq
            self.latest_event = event
        self._emit(event)


class _LoggerRuntime:
    def __init__(self, widget: LoggerWidget, emit):
        self.widget = widget
        self._emit = emit

    def on_log(self, entry: msg.Log) -> None:
        if entry.level < self.widget.min_level:
            return
        self._emit({
            "type": "log",
            "level": entry.level,
            "name": entry.name,
            "msg": entry.msg,
            "stamp": entry.header.stamp.secs + entry.header.stamp.nsecs / 1e9,
        })


class GatewaySession:
    """Thread-safe owner of the active config and its live node."""

    def __init__(
        self,
        config: AppConfig,
        config_path: str | Path | None = None,
        node_name: str = "/rosdeck_gateway",
        advertised_host: str | None = None,
    ):
        self._config = config
        self._config_path = Path(config_path) if config_path else None
        self._node_name = node_name
        self._advertised_host = advertised_host
        self._lock = threading.RLock()
        self._listeners: list = []
        self._state = DISCONNECTED
        self._warnings: list[str] = []
        self._node: NodeHandle | None = None
        self._joysticks: dict[str, JoystickSession] = {}
        self._gridmaps: dict[str, _GridmapRuntime] = {}

    # -- events ----------------------------------------------------------------

    def add_listener(self, listener) -> callable:
        with self._lock:
            self._listeners.append(listener)
        def remove():
            with self._lock:
                if listener in self._listeners:
                    self._listeners.remove(listener)
        return remove

    def _emit(self, event: dict) -> None:
        with self._lock:
            listeners = list(self._listeners)
        for listener in listeners:
            try:
                listener(event)
            except Exception:
                log.exception("event listener raised")

    def _emit_status(self) -> None:
        self._emit(self.status_event())

    # -- status / config ----------------------------------------------------------

    def status(self) -> dict:
        with self._lock:
            return {
                "state": self._state,
                "master": self._config.master_uri.url,
                "warnings": list(self._warnings),
            }

    def status_event(self) -> dict:
        return {"type": "status", **self.status()}

    def get_config(self) -> AppConfig:
        with self._lock:
            return self._config

    def set_config(self, config: AppConfig) -> None:
        """Replace the stored config (persisted when a path is configured).
        A live session keeps running on the old config until reconnect."""
        with self._lock:
            self._config = config
            if self._config_path is not None:
                save_config(config, self._config_path)
        self._emit_status()

    def latest_frame_events(self) -> list[dict]:
        with self._lock:
            return [
                rt.latest_event for rt in self._gridmaps.values() if rt.latest_event is not None
            ]

    # -- connect / disconnect -------------------------------------------------------

    def connect(self) -> dict:
        """Bring up a node for the active config. Returns the resulting status."""
        with self._lock:
            if self._state != DISCONNECTED:  # already connected or mid-connect
                return self.status()
            config = self._config
            self._state = CONNECTING
            self._warnings = []
        self._emit_status()
        try:
            node = NodeHandle(
                config.master_uri,
                name=self._node_name,
                advertised_host=self._advertised_host,
            )
        except OSError as exc:
            return self._fail_connect(f"could not start node: {exc}")
        try:
            node.master.ping()
        except RpcError as exc:
            node.shutdown()
            return self._fail_connect(f"master unreachable: {exc}")

        warnings: list[str] = []
        joysticks: dict[str, JoystickSession] = {}
        gridmaps: dict[str, _GridmapRuntime] = {}
        for i, widget in enumerate(config.widgets):
            try:
                if isinstance(widget, JoystickWidget):
                    pub = node.advertise(widget.topic, "geometry_msgs/Twist")
                    session = JoystickSession(
                        pub.publish,
                        max_linear=widget.max_linear,
                        max_angular=widget.max_angular,
                        rate_hz=widget.publish_rate_hz,
                    )
                    session.start()
                    joysticks[widget.id] = session
                elif isinstance(widget, GridmapWidget):
                    runtime = _GridmapRuntime(widget, self._emit)
                    node.subscribe(widget.topic, "nav_msgs/OccupancyGrid", runtime.on_grid)
                    gridmaps[widget.id] = runtime
                elif isinstance(widget, LoggerWidget):
                    runtime = _LoggerRuntime(widget, self._emit)
                    node.subscribe(widget.topic, "rosgraph_msgs/Log", runtime.on_log)
            except Exception as exc:  # noqa: BLE001 - one widget must not sink the rest
                warnings.append(f"widgets[{i}] ({widget.topic}): {exc}")
                log.warning("widget %s failed to start: %s", widget.id, exc)

        with self._lock:
            self._node = node
            self._joysticks = joysticks
            self._gridmaps = gridmaps
            self._state = CONNECTED
            self._warnings = warnings
        self._emit_status()
        return self.status()

    def _fail_connect(self, reason: str) -> dict:
        with self._lock:
            self._state = DISCONNECTED
            self._warnings = [reason]
        self._emit_status()
        return self.status()

    def disconnect(self) -> dict:
        with self._lock:
            node, self._node = self._node, None
            joysticks, self._joysticks = self._joysticks, {}
            self._gridmaps = {}
            was_connected = self._state != DISCONNECTED
            self._state = DISCONNECTED
            self._warnings = []
        for session in joysticks.values():
            session.stop()  # publishes the final zero while the node still lives
        if node is not None:
            node.shutdown()
        if was_connected:
            self._emit_status()
        return self.status()

    def close(self) -> None:
        self.disconnect()

    # -- joystick input -----------------------------------------------------------

    def feed_joystick(self, widget_id: str, x: float, y: float, engaged: bool) -> None:
        with self._lock:
            session = self._joysticks.get(widget_id)
            state = self._state
        if state != CONNECTED:
            raise GatewayError("not connected")
        if session is None:
            raise GatewayError(f"no active joystick widget {widget_id!r}")
        session.feed(JoystickSample(x, y, engaged))
