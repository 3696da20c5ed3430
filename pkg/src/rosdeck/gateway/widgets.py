"""Widget semantics: joystick-to-Twist with fail-safe stop, grid frame production.

The joystick contract is safety-first: pushing the pad drives the robot, and
every way of letting go (release, stream stall, disconnect) ends with exactly
one zero Twist on the wire as the last published command.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass

import numpy as np

from ..messages import OccupancyGrid, Quaternion, Twist, Vector3

UNKNOWN_CELL = 255  # wire value for unknown in a GridFrame (source -1)
FRAME_BUDGET = 512  # max cells per side after downsampling
DEADMAN_S = 0.5


@dataclass(frozen=True)
class JoystickSample:
    """Pad-relative position, screen convention: x right-positive, y down-positive."""

    x: float
    y: float
    engaged: bool


def clamp_to_unit_disc(x: float, y: float) -> tuple[float, float]:
    """Radial clamp: direction preserved, magnitude capped at 1."""
    r = math.hypot(x, y)
    if r <= 1.0 or r == 0.0:
        return x, y
    return x / r, y / r


def joystick_to_twist(sample: JoystickSample, max_linear: float, max_angular: float) -> Twist:
    """Push up = forward, push right = clockwise (negative z, right-handed z-up)."""
    x, y = clamp_to_unit_disc(sample.x, sample.y)
    return Twist(
        linear=Vector3(x=-y * max_linear),
        angular=Vector3(z=-x * max_angular),
    )


class JoystickSession:
    """Publishes the latest sample at a fixed rate while engaged.

    Engagement publishes immediately, then the rate loop repeats the newest
    sample. Disengaging publishes exactly one zero Twist; a 500 ms stall while
    engaged (deadman) does the same and marks the pad disengaged. The clock is
    injectable for tests.
    """

    def __init__(
        self,
        publish,
        max_linear: float,
        max_angular: float,
        rate_hz: float = 10.0,
        deadman_s: float = DEADMAN_S,
        clock=time.monotonic,
    ):
        self._publish = publish
        self.max_linear = max_linear
        self.max_angular = max_angular
        self.rate_hz = rate_hz
        self.deadman_s = deadman_s
        self._clock = clock
        self._lock = threading.Lock()
        self._engaged = False
        self._latest: JoystickSample | None = None
        self._last_sample_time = 0.0
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def engaged(self) -> bool:
        with self._lock:
            return self._engaged

    def feed(self, sample: JoystickSample) -> None:
        with self._lock:
            if sample.engaged:
                first = not self._engaged
                self._engaged = True
                self._latest = sample
                self._last_sample_time = self._clock()
                if first:
                    self._send(sample)
            elif self._engaged:
                self._engaged = False
                self._latest = None
                self._send_zero()

    def tick(self) -> None:
        """One publish step; the rate loop calls this, tests may call directly."""
        with self._lock:
            if not self._engaged:
                return
            if self._clock() - self._last_sample_time > self.deadman_s:
                self._engaged = False
                self._latest = None
                self._send_zero()
                return
            if self._latest is not None:
                self._send(self._latest)

    def _send(self, sample: JoystickSample) -> None:
        try:
            self._publish(joystick_to_twist(sample, self.max_linear, self.max_angular))
        except Exception:
            import logging

            logging.getLogger(__name__).exception("joystick publish failed")

    def _send_zero(self) -> None:
        try:
            self._publish(Twist())
        except Exception:
            import logging

            logging.getLogger(__name__).exception("zero twist publish failed")

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, name="joystick-session", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        period = 1.0 / self.rate_hz
        next_tick = time.monotonic() + period
        while not self._stop.wait(max(0.0, next_tick - time.monotonic())):
            next_tick += period
            self.tick()

    def stop(self) -> None:
        """Stop the loop; if still engaged, leave a final zero Twist behind."""
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2)
            self._thread = None
        with self._lock:
            if self._engaged:
                self._engaged = False
                self._latest = None
                self._send_zero()


# ---------------------------------------------------------------------------
# Grid frames


@dataclass(frozen=True)
class GridFrame:
    """Render-ready occupancy snapshot: unknown is 255, occupancy 0..100."""

    widget_id: str
    width: int
    height: int
    resolution: float
    origin_x: float
    origin_y: float
    origin_yaw: float
    cells: bytes

    def __post_init__(self):
        if len(self.cells) != self.width * self.height:
            raise ValueError(
                f"cells length {len(self.cells)} != {self.width}x{self.height}"
            )


def yaw_from_quaternion(q: Quaternion) -> float:
    return math.atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z))


def gridmap_to_frame(grid: OccupancyGrid, widget_id: str, budget: int = FRAME_BUDGET) -> GridFrame:
    """Downsample to at most budget cells per side.

    The factor k is the smallest integer bringing both dimensions under the
    budget. Each output cell is the max over its k-by-k block with unknown
    ranked below free: occupied dominates, then free, unknown survives only
    when the whole block is unknown. Resolution scales by k, origin stays.
    """
    w, h = grid.info.width, grid.info.height
    if len(grid.data) != w * h:
        raise ValueError(f"grid data length {len(grid.data)} != {w}x{h}")
    cells = np.frombuffer(grid.data, dtype=np.int8).reshape(h, w) if w * h else np.zeros((h, w), np.int8)
    k = max(1, -(-w // budget), -(-h // budget))  # ceil division
    if k > 1:
        pad_h = (-h) % k
        pad_w = (-w) % k
        padded = np.pad(cells, ((0, pad_h), (0, pad_w)), constant_values=-1)
        cells = padded.reshape((h + pad_h) // k, k, (w + pad_w) // k, k).max(axis=(1, 3))
    out = np.where(cells < 0, UNKNOWN_CELL, np.minimum(cells, 100)).astype(np.uint8)
    origin = grid.info.origin
    return GridFrame(
        widget_id=widget_id,
        width=out.shape[1],
        height=out.shape[0],
        resolution=grid.info.resolution * k,
        origin_x=origin.position.x,
        origin_y=origin.position.y,
        origin_yaw=yaw_from_quaternion(origin.orientation),
        cells=out.tobytes(),
    )


def occupancy_to_gray(value: int) -> int:
    """Render mapping: free is white, occupied black, unknown mid-gray.

    Linear in between with half-up rounding, so 50 lands on 128.
    """
    if value == UNKNOWN_CELL:
        return 128
    if not 0 <= value <= 100:
        raise ValueError(f"occupancy value out of range: {value}")
    return int(math.floor(255.0 * (1.0 - value / 100.0) + 0.5))
