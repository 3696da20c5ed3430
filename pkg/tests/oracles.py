"""Independent reference implementations the test suite checks the library against.

Everything here is deliberately written the slow, obvious way (plain loops,
breadth-first search, sub-stepped integration) and shares no code with the
package modules it verifies.
"""

import math
from collections import deque


def brute_force_frame(cells, width, height, budget):
    """Downsample oracle: smallest k fitting the budget, block max with unknown
    ranked below free, -1 reported as 255. Returns (width, height, k, bytes)."""
    k = 1
    while math.ceil(width / k) > budget or math.ceil(height / k) > budget:
        k += 1
    out_w = math.ceil(width / k) if width else 0
    out_h = math.ceil(height / k) if height else 0
    out = []
    for br in range(out_h):
        for bc in range(out_w):
            best = -1
            for r in range(br * k, min((br + 1) * k, height)):
                for c in range(bc * k, min((bc + 1) * k, width)):
                    best = max(best, cells[r * width + c])
            out.append(255 if best < 0 else best)
    return out_w, out_h, k, bytes(out)


def flood_fill_reachable(walls, start):
    """4-connected free cells reachable from start; walls is a bool grid."""
    height, width = walls.shape
    seen = {start}
    queue = deque(seen)
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width and not walls[nr, nc] and (nr, nc) not in seen:
                seen.add((nr, nc))
                queue.append((nr, nc))
    return seen


def fine_euler(v, w, dt, theta0, steps=10_000):
    """Forward-Euler sub-integration of the unicycle model."""
    h = dt / steps
    x = y = 0.0
    theta = theta0
    for _ in range(steps):
        x += v * math.cos(theta) * h
        y += v * math.sin(theta) * h
        theta += w * h
    return x, y, theta
