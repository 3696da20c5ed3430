"""Differential-drive kinematics, floorplan world, and reveal-style mapping.

The integrator is the exact constant-twist arc, so acceptance tolerances
measure the system rather than integration error. The mapper is a reveal
model: ground truth becomes known within sensor radius of the robot, which
reproduces the map-building demo without simulating a SLAM pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..messages import Twist

UNKNOWN, FREE, OCCUPIED = -1, 0, 100
STRAIGHT_OMEGA_EPS = 1e-9
SENSOR_RADIUS = 1.0  # meters


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(theta + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class RobotState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    last_cmd: Twist | None = None
    last_cmd_time: float = 0.0


def integrate_twist(state: RobotState, cmd: Twist, dt: float) -> RobotState:
    """Exact constant-twist arc over dt seconds.

    Only v = cmd.linear.x and w = cmd.angular.z act on the pose. Below the
    |w| threshold the straight-line limit applies; the two branches agree to
    well under 1e-6 at the crossover.
    """
    v = cmd.linear.x
    w = cmd.angular.z
    theta = state.theta
    if abs(w) < STRAIGHT_OMEGA_EPS:
        x = state.x + v * math.cos(theta) * dt
        y = state.y + v * math.sin(theta) * dt
        new_theta = theta + w * dt
    else:
        x = state.x + (v / w) * (math.sin(theta + w * dt) - math.sin(theta))
        y = state.y + (v / w) * (math.cos(theta) - math.cos(theta + w * dt))
        new_theta = theta + w * dt
    return replace(state, x=x, y=y, theta=wrap_angle(new_theta))


class FloorplanError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Floorplan:
    """Axis-aligned world of square cells with the origin at world (0, 0).

    walls[row, col] is True for wall cells; row 0 sits at the origin and the
    border is closed (all wall).
    """

    width: int
    height: int
    resolution: float
    walls: np.ndarray  # bool, shape (height, width)

    def cell_at(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(y / self.resolution)), int(math.floor(x / self.resolution))

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def is_wall_at(self, x: float, y: float) -> bool:
        row, col = self.cell_at(x, y)
        if not self.in_bounds(row, col):
            return True  # outside the closed world counts as wall
        return bool(self.walls[row, col])

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (col + 0.5) * self.resolution, (row + 0.5) * self.resolution

    @property
    def free_cell_count(self) -> int:
        return int((~self.walls).sum())


def parse_floorplan(text: str, resolution: float = 0.1) -> Floorplan:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise FloorplanError("empty floorplan")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FloorplanError(f"ragged row {i}: {len(row)} cells, expected {width}")
        bad = set(row) - {"#", "."}
        if bad:
            raise FloorplanError(f"row {i} has unknown cell characters: {sorted(bad)}")
    walls = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    border = np.concatenate([walls[0], walls[-1], walls[:, 0], walls[:, -1]])
    if not border.all():
        raise FloorplanError("floorplan border must be all wall (closed world)")
    return Floorplan(width=width, height=len(rows), resolution=resolution, walls=walls)


def load_floorplan(path: str | Path, resolution: float = 0.1) -> Floorplan:
    return parse_floorplan(Path(path).read_text(), resolution)


def reveal_map(known: np.ndarray, plan: Floorplan, x: float, y: float,
               sensor_radius: float = SENSOR_RADIUS) -> np.ndarray:
    """New grid with every cell whose center lies within sensor_radius of (x, y)
    set from ground truth. Already-revealed cells never regress to unknown."""
    out = known.copy()
    res = plan.resolution
    r_cells = int(math.ceil(sensor_radius / res)) + 1
    row0, col0 = plan.cell_at(x, y)
    lo_r = max(0, row0 - r_cells)
    hi_r = min(plan.height, row0 + r_cells + 1)
    lo_c = max(0, col0 - r_cells)
    hi_c = min(plan.width, col0 + r_cells + 1)
    if lo_r >= hi_r or lo_c >= hi_c:
        return out  # pose outside the plan: reveal clamps to nothing
    rows = (np.arange(lo_r, hi_r) + 0.5) * res
    cols = (np.arange(lo_c, hi_c) + 0.5) * res
    within = ((cols[None, :] - x) ** 2 + (rows[:, None] - y) ** 2) <= sensor_radius ** 2
    window = out[lo_r:hi_r, lo_c:hi_c]
    truth = np.where(plan.walls[lo_r:hi_r, lo_c:hi_c], OCCUPIED, FREE).astype(np.int8)
    window[within] = truth[within]
    return out


class RobotSim:
    """Mutable world state: pose, revealed grid, and the collision rule.

    Motion into a wall keeps the position and still applies the heading
    change. Callers provide their own locking when stepping from multiple
    threads.
    """

    def __init__(self, plan: Floorplan, start: RobotState | None = None,
                 sensor_radius: float = SENSOR_RADIUS):
        self.plan = plan
        if start is None:
            start = RobotState(*plan.cell_center(plan.height // 2, plan.width // 2))
        if plan.is_wall_at(start.x, start.y):
            raise FloorplanError(f"start pose ({start.x}, {start.y}) is inside a wall")
        self.state = start
        self.sensor_radius = sensor_radius
        self.known = np.full((plan.height, plan.width), UNKNOWN, dtype=np.int8)
        self._last_reveal: tuple[float, float] | None = None
        self.revealed_count = 0
        self._reveal()

    def step(self, cmd: Twist, dt: float) -> RobotState:
        proposed = integrate_twist(self.state, cmd, dt)
        if self.plan.is_wall_at(proposed.x, proposed.y):
            proposed = replace(proposed, x=self.state.x, y=self.state.y)
        self.state = proposed
        self._reveal()
        return self.state

    def _reveal(self) -> None:
        pos = (self.state.x, self.state.y)
        if pos == self._last_reveal:
            return  # pure rotation: nothing new within the sensor disc
        self.known = reveal_map(self.known, self.plan, *pos, self.sensor_radius)
        self._last_reveal = pos
        self.revealed_count = int((self.known != UNKNOWN).sum())

    def grid_bytes(self) -> bytes:
        return self.known.tobytes()


def plan_coverage_tour(plan: Floorplan, start: RobotState) -> list[tuple[Twist, float]]:
    """Deterministic command script that walks every reachable free cell.

    Depth-first over the 4-connected free-cell graph, cell-center to
    cell-center: rotate to an axis heading, then drive one cell. Replaying it
    through the exact-arc integrator retraces the tour without drift.
    """
    res = plan.resolution
    start_cell = plan.cell_at(start.x, start.y)
    if plan.walls[start_cell]:
        raise FloorplanError("tour start is inside a wall")

    # headings for (drow, dcol) moves
    moves = {(0, 1): 0.0, (1, 0): math.pi / 2, (0, -1): math.pi, (-1, 0): -math.pi / 2}

    def neighbors(cell: tuple[int, int]):
        r, c = cell
        for dr, dc in moves:
            nr, nc = r + dr, c + dc
            if plan.in_bounds(nr, nc) and not plan.walls[nr, nc]:
                yield nr, nc

    # iterative DFS recording the cell path, including backtracking moves
    path = [start_cell]
    visited = {start_cell}
    stack = [(start_cell, iter(sorted(neighbors(start_cell))))]
    while stack:
        cell, it = stack[-1]
        advanced = False
        for nxt in it:
            if nxt not in visited:
                visited.add(nxt)
                path.append(nxt)
                stack.append((nxt, iter(sorted(neighbors(nxt)))))
                advanced = True
                break
        if not advanced:
            stack.pop()
            if stack:
                path.append(stack[-1][0])  # backtrack

    commands: list[tuple[Twist, float]] = []
    theta = start.theta
    for prev, nxt in zip(path, path[1:]):
        dr, dc = nxt[0] - prev[0], nxt[1] - prev[1]
        heading = moves[(dr, dc)]
        turn = wrap_angle(heading - theta)
        if abs(turn) > 1e-12:
            commands.append((Twist(angular=_vec_z(turn)), 1.0))
            theta = wrap_angle(theta + turn)
        commands.append((Twist(linear=_vec_x(res)), 1.0))
    return commands


def _vec_x(v: float):
    from ..messages import Vector3

    return Vector3(x=v)


def _vec_z(w: float):
    from ..messages import Vector3

    return Vector3(z=w)
