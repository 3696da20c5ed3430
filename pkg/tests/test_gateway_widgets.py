"""Widget semantics: joystick mapping, fail-safe session, grid frame production."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rosdeck import messages as M
from rosdeck.gateway.widgets import (
    JoystickSample,
    JoystickSession,
    clamp_to_unit_disc,
    gridmap_to_frame,
    joystick_to_twist,
    occupancy_to_gray,
)

# ---------------------------------------------------------------------------
# joystick mapping


def test_center_maps_to_stop():
    assert joystick_to_twist(JoystickSample(0, 0, True), 0.5, 1.5) == M.Twist()


def test_push_up_is_forward():
    twist = joystick_to_twist(JoystickSample(0, -1, True), 0.5, 1.5)
    assert twist.linear.x == 0.5
    assert twist.angular.z == 0.0


def test_push_right_is_clockwise():
    twist = joystick_to_twist(JoystickSample(1, 0, True), 0.5, 1.5)
    assert twist.linear.x == 0.0
    assert twist.angular.z == -1.5


finite = st.floats(min_value=-10, max_value=10, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(finite, finite)
def test_clamp_preserves_direction(x, y):
    cx, cy = clamp_to_unit_disc(x, y)
    assert math.hypot(cx, cy) <= 1.0 + 1e-12
    if math.hypot(x, y) > 1e-9:
        assert math.isclose(math.atan2(cy, cx), math.atan2(y, x), abs_tol=1e-9)
    if math.hypot(x, y) <= 1.0:
        assert (cx, cy) == (x, y)


def test_out_of_disc_input_clamped_before_mapping():
    twist = joystick_to_twist(JoystickSample(0, -5, True), 0.5, 1.5)
    assert twist.linear.x == 0.5  # magnitude 1 after radial clamp


# ---------------------------------------------------------------------------
# joystick session (fake clock)


class FakeClock:
    def __init__(self):
        self.now = 100.0

    def __call__(self):
        return self.now


def _session(published, clock, rate=10.0):
    return JoystickSession(
        published.append, max_linear=0.5, max_angular=1.5, rate_hz=rate, clock=clock
    )


def test_engage_one_second_at_ten_hertz_then_single_zero():
    published = []
    clock = FakeClock()
    session = _session(published, clock)
    session.feed(JoystickSample(0, -1, True))
    assert len(published) == 1 and published[0].linear.x == 0.5
    for _ in range(9):  # samples keep arriving while engaged, as a UI would send
        clock.now += 0.1
        session.feed(JoystickSample(0, -1, True))
        session.tick()
    assert 9 <= len(published) <= 11  # 10 +/- 1 over the engaged second
    session.feed(JoystickSample(0, 0, False))
    assert len(published) <= 12
    assert published[-1] == M.Twist()  # exactly one zero on release
    assert [t for t in published if t == M.Twist()] == [published[-1]]


def test_disengage_immediately_single_zero():
    published = []
    session = _session(published, FakeClock())
    session.feed(JoystickSample(0, -1, True))
    session.feed(JoystickSample(0, 0, False))
    session.feed(JoystickSample(0, 0, False))  # duplicate release: no extra zero
    zeros = [t for t in published if t == M.Twist()]
    assert len(zeros) == 1
    assert published[-1] == M.Twist()


def test_deadman_fires_after_stall():
    published = []
    clock = FakeClock()
    session = _session(published, clock)
    session.feed(JoystickSample(1, 0, True))
    clock.now += 0.3
    session.tick()
    assert published[-1].angular.z == -1.5
    clock.now += 0.6  # 600 ms without a fresh sample
    session.tick()
    assert published[-1] == M.Twist()
    assert not session.engaged
    clock.now += 0.1
    session.tick()  # disengaged: nothing more
    assert published[-1] == M.Twist()
    assert len([t for t in published if t == M.Twist()]) == 1


def test_fresh_samples_keep_deadman_quiet():
    published = []
    clock = FakeClock()
    session = _session(published, clock)
    session.feed(JoystickSample(0, -1, True))
    for _ in range(20):
        clock.now += 0.1
        session.feed(JoystickSample(0, -0.5, True))
        session.tick()
    assert session.engaged
    assert all(t != M.Twist() for t in published)


def test_real_rate_loop_counts():
    published = []
    session = JoystickSession(published.append, 0.5, 1.5, rate_hz=50.0)
    session.start()
    session.feed(JoystickSample(0, -1, True))
    time.sleep(0.25)
    session.feed(JoystickSample(0, 0, False))
    session.stop()
    assert published, "rate loop never published"
    assert 8 <= len(published) <= 16  # ~0.25 s at 50 Hz plus engage + release
    assert published[-1] == M.Twist()


def test_stop_while_engaged_leaves_zero():
    published = []
    session = JoystickSession(published.append, 0.5, 1.5, rate_hz=50.0)
    session.start()
    session.feed(JoystickSample(0, -1, True))
    session.stop()
    assert published[-1] == M.Twist()


# ---------------------------------------------------------------------------
# occupancy -> gray


@pytest.mark.parametrize("value,gray", [
    (0, 255),        # free is white
    (100, 0),        # occupied is black
    (255, 128),      # unknown is mid-gray
    (50, 128),       # 127.5 rounds half-up
    (30, 179),       # 178.5 rounds half-up (banker's would give 178)
    (10, 230),
    (1, 252),        # 252.45 floors
])
def test_occupancy_to_gray(value, gray):
    assert occupancy_to_gray(value) == gray


def test_occupancy_to_gray_range_checked():
    for bad in (-1, 101, 254):
        with pytest.raises(ValueError):
            occupancy_to_gray(bad)


# ---------------------------------------------------------------------------
# grid frames


def _grid(width, height, cells, resolution=0.25):
    return M.OccupancyGrid(
        header=M.Header(seq=1),
        info=M.MapMetaData(resolution=resolution, width=width, height=height),
        data=bytes((c + 256) % 256 for c in cells),
    )


def test_small_grid_passes_through_with_unknown_mapped():
    frame = gridmap_to_frame(_grid(4, 4, [-1] * 16), "map1")
    assert (frame.width, frame.height) == (4, 4)
    assert frame.cells == bytes([255] * 16)
    assert frame.resolution == pytest.approx(0.25)


def test_occupied_dominates_block():
    frame = gridmap_to_frame(_grid(2, 2, [-1, 0, 100, 0]), "map1", budget=1)
    assert (frame.width, frame.height) == (1, 1)
    assert frame.cells == bytes([100])


def test_unknown_survives_only_all_unknown_block():
    frame = gridmap_to_frame(_grid(2, 2, [-1, -1, -1, -1]), "map1", budget=1)
    assert frame.cells == bytes([255])
    frame = gridmap_to_frame(_grid(2, 2, [-1, -1, -1, 0]), "map1", budget=1)
    assert frame.cells == bytes([0])  # free beats unknown


def test_1024_grid_downsamples_by_two():
    grid = _grid(1024, 1024, [0] * (1024 * 1024), resolution=0.05)
    frame = gridmap_to_frame(grid, "map1")
    assert (frame.width, frame.height) == (512, 512)
    assert frame.resolution == pytest.approx(0.1)
    assert len(frame.cells) == 512 * 512


def test_origin_carried_through():
    grid = _grid(2, 2, [0, 0, 0, 0])
    yaw = math.pi / 2
    grid.info.origin = M.Pose(
        M.Point(1.0, 2.0, 0.0),
        M.Quaternion(z=math.sin(yaw / 2), w=math.cos(yaw / 2)),
    )
    frame = gridmap_to_frame(grid, "map1")
    assert (frame.origin_x, frame.origin_y) == (1.0, 2.0)
    assert frame.origin_yaw == pytest.approx(yaw)


def test_malformed_grid_length_rejected():
    grid = _grid(4, 4, [0] * 16)
    grid.data = grid.data[:-1]
    with pytest.raises(ValueError, match="length"):
        gridmap_to_frame(grid, "map1")


def test_empty_grid_is_legal():
    frame = gridmap_to_frame(_grid(0, 0, []), "map1")
    assert (frame.width, frame.height) == (0, 0)
    assert frame.cells == b""


def test_stale_frames_never_follow_newer_ones():
    from rosdeck.config import GridmapWidget
    from rosdeck.gateway.session import _GridmapRuntime

    events = []
    runtime = _GridmapRuntime(GridmapWidget(id="m", topic="/map"), events.append)
    for seq in (5, 3, 5, 8, 7):
        grid = _grid(1, 1, [0])
        grid.header.seq = seq
        runtime.on_grid(grid)
    # 3 (stale after 5) and 7 (stale after 8) are dropped; equal seq passes
    assert len(events) == 3
    assert runtime.latest_event is not None


def test_downsample_matches_brute_force_on_random_grids():
    from oracles import brute_force_frame
    import random

    rng = random.Random(42)
    for _ in range(60):
        width = rng.randint(1, 40)
        height = rng.randint(1, 40)
        cells = [rng.choice([-1, 0, 25, 50, 75, 100]) for _ in range(width * height)]
        budget = rng.choice([4, 8, 16, 40])
        expected_w, expected_h, k, expected = brute_force_frame(cells, width, height, budget)
        frame = gridmap_to_frame(_grid(width, height, cells), "m", budget=budget)
        assert (frame.width, frame.height) == (expected_w, expected_h)
        assert frame.cells == expected
        assert frame.resolution == pytest.approx(0.25 * k)
