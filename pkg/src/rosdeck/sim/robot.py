"""Differential-drive robot node: /cmd_vel in, /odom, latched /map, /rosout out.

The node wraps a RobotSim behind the same client stack the gateway uses, so
every test of the suite doubles as an interop test of the wire protocols.
Odometry is reported in the boot frame: the pose at startup is (0, 0, 0)
regardless of where the robot sits in the floorplan.
"""

from __future__ import annotations

import logging
import math
import threading
import time

from .. import messages as msg
from ..master import MasterUri, RpcError
from ..node import NodeHandle
from .world import Floorplan, RobotSim, RobotState, wrap_angle

log = logging.getLogger(__name__)

TICK_RATE_HZ = 50.0
CMD_TIMEOUT_S = 0.5
ODOM_RATE_HZ = 10.0
MAP_RATE_HZ = 1.0


def _now_stamp() -> msg.RosTime:
    t = time.time()
    secs = int(t)
    return msg.RosTime(secs, int((t - secs) * 1e9))


def yaw_quaternion(theta: float) -> msg.Quaternion:
    return msg.Quaternion(z=math.sin(theta / 2.0), w=math.cos(theta / 2.0))


class RobotNode:
    """Fixed-rate simulation loop plus the ROS-facing topic plumbing."""

    def __init__(
        self,
        master_uri: MasterUri | str,
        plan: Floorplan,
        start: RobotState | None = None,
        name: str = "/rosdeck_sim_robot",
        cmd_topic: str = "/cmd_vel",
        odom_topic: str = "/odom",
        map_topic: str = "/map",
        log_topic: str = "/rosout",
        tick_rate: float = TICK_RATE_HZ,
        cmd_timeout: float = CMD_TIMEOUT_S,
    ):
        self._master_uri = master_uri
        self.name = name
        self.cmd_topic = cmd_topic
        self.odom_topic = odom_topic
        self.map_topic = map_topic
        self.log_topic = log_topic
        self.tick_rate = tick_rate
        self.cmd_timeout = cmd_timeout

        self.sim = RobotSim(plan, start)
        self._origin = self.sim.state
        self._lock = threading.Lock()
        self._cmd = msg.Twist()
        self._cmd_time = float("-inf")
        self._saw_command = False
        self._stop = threading.Event()
        self._node: NodeHandle | None = None
        self._seqs = {"odom": 0, "map": 0, "log": 0}
        self._published_reveal = -1
        self._thread: threading.Thread | None = None

    # -- lifecycle ------------------------------------------------------------

    def start(self, register_retries: int = 30) -> None:
        """Connect to the master and start ticking. Retries registration while
        the master is still coming up."""
        attempt = 0
        while True:
            try:
                self._node = NodeHandle(self._master_uri, name=self.name)
                self._pub_odom = self._node.advertise(self.odom_topic, "nav_msgs/Odometry")
                self._pub_map = self._node.advertise(self.map_topic, "nav_msgs/OccupancyGrid", latched=True)
                # latched so a late dashboard still sees the boot announcement
                self._pub_log = self._node.advertise(self.log_topic, "rosgraph_msgs/Log", latched=True)
                self._node.subscribe(self.cmd_topic, "geometry_msgs/Twist", self._on_cmd)
                break
            except RpcError as exc:
                if self._node is not None:
                    self._node.shutdown()
                    self._node = None
                attempt += 1
                if attempt > register_retries:
                    raise
                log.warning("master not reachable (%s), retrying", exc)
                time.sleep(1.0)
        self._log_info("simulated differential drive robot online")
        self.publish_map()
        self._thread = threading.Thread(target=self._run, name="robot-tick", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2)
        if self._node is not None:
            self._node.shutdown()

    def __enter__(self) -> "RobotNode":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- inputs ----------------------------------------------------------------

    def _on_cmd(self, value: msg.Twist) -> None:
        for component in (value.linear, value.angular):
            if not all(map(math.isfinite, (component.x, component.y, component.z))):
                log.warning("ignoring non-finite twist")
                return
        first = False
        with self._lock:
            self._cmd = value
            self._cmd_time = time.monotonic()
            if not self._saw_command:
                self._saw_command = first = True
        if first:
            self._log_info("first velocity command received")

    # -- main loop ---------------------------------------------------------------

    def _run(self) -> None:
        period = 1.0 / self.tick_rate
        odom_period = 1.0 / ODOM_RATE_HZ
        map_period = 1.0 / MAP_RATE_HZ
        min_map_gap = 0.2  # on-change publishes capped at 5 Hz while driving
        last = time.monotonic()
        next_tick = last + period
        next_odom = last
        next_map = last
        last_map = float("-inf")
        while not self._stop.wait(max(0.0, next_tick - time.monotonic())):
            now = time.monotonic()
            dt = now - last
            last = now
            next_tick += period
            with self._lock:
                stale = (now - self._cmd_time) > self.cmd_timeout
                cmd = msg.Twist() if stale else self._cmd
                self.sim.step(cmd, dt)
                revealed = self.sim.revealed_count
            if now >= next_odom:
                next_odom = now + odom_period
                self.publish_odometry()
            changed = revealed != self._published_reveal
            if now >= next_map or (changed and now - last_map >= min_map_gap):
                next_map = now + map_period
                last_map = now
                self.publish_map()

    # -- publications ---------------------------------------------------------

    def _boot_frame_pose(self) -> tuple[float, float, float]:
        """Current pose relative to the boot pose (odometry convention)."""
        s = self.sim.state
        o = self._origin
        dx, dy = s.x - o.x, s.y - o.y
        c, si = math.cos(-o.theta), math.sin(-o.theta)
        return c * dx - si * dy, si * dx + c * dy, wrap_angle(s.theta - o.theta)

    def publish_odometry(self) -> None:
        with self._lock:
            x, y, yaw = self._boot_frame_pose()
            cmd = self._cmd
        self._seqs["odom"] += 1
        odom = msg.Odometry(
            header=msg.Header(self._seqs["odom"], _now_stamp(), "odom"),
            child_frame_id="base_link",
            pose=msg.PoseWithCovariance(
                pose=msg.Pose(msg.Point(x, y, 0.0), yaw_quaternion(yaw))
            ),
            twist=msg.TwistWithCovariance(twist=cmd),
        )
        self._safe_publish(self._pub_odom, odom)

    def publish_map(self) -> None:
        with self._lock:
            data = self.sim.grid_bytes()
            revealed = self.sim.revealed_count
            plan = self.sim.plan
        self._seqs["map"] += 1
        grid = msg.OccupancyGrid(
            header=msg.Header(self._seqs["map"], _now_stamp(), "map"),
            info=msg.MapMetaData(
                map_load_time=_now_stamp(),
                resolution=plan.resolution,
                width=plan.width,
                height=plan.height,
                origin=msg.Pose(),
            ),
            data=data,
        )
        self._published_reveal = revealed
        self._safe_publish(self._pub_map, grid)

    def _log_info(self, text: str) -> None:
        self._seqs["log"] += 1
        entry = msg.Log(
            header=msg.Header(self._seqs["log"], _now_stamp(), ""),
            level=msg.LOG_INFO,
            name=self.name,
            msg=text,
            file="robot.py",
            function="RobotNode",
            line=0,
            topics=[self.odom_topic, self.map_topic],
        )
        self._safe_publish(self._pub_log, entry)

    @staticmethod
    def _safe_publish(pub, value) -> None:
        try:
            pub.publish(value)
        except Exception:
            log.exception("publish on %s failed", pub.topic)

    # -- scripted driving --------------------------------------------------------

    def run_script(self, commands: list[tuple[msg.Twist, float]]) -> None:
        """Advance the simulation through a command script in simulated time,
        then push fresh map and odometry. Used for deterministic tours that
        would take far too long to teleoperate in wall-clock time."""
        with self._lock:
            for cmd, dt in commands:
                self.sim.step(cmd, dt)
        self.publish_map()
        self.publish_odometry()

    # -- inspection ----------------------------------------------------------------

    @property
    def pose(self) -> RobotState:
        with self._lock:
            return self.sim.state

    @property
    def last_command(self) -> msg.Twist:
        with self._lock:
            return self._cmd

    def grid_snapshot(self) -> bytes:
        with self._lock:
            return self.sim.grid_bytes()
