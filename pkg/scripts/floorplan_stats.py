#!/usr/bin/env python3
"""Floorplan sanity checker: counts cells and flood-fills reachability.

Parses the ASCII format directly ('#' wall, '.' free) without importing the
package, so it doubles as an independent oracle for the shipped plan.

Usage: python scripts/floorplan_stats.py <plan.txt> [start_row start_col]
"""

import sys
from collections import deque


def flood_fill(rows, start):
    height, width = len(rows), len(rows[0])
    seen = {start}
    queue = deque(seen)
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width and rows[nr][nc] == "." and (nr, nc) not in seen:
                seen.add((nr, nc))
                queue.append((nr, nc))
    return seen


def main(argv):
    rows = [line for line in open(argv[1]).read().splitlines() if line.strip()]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        print(f"ragged rows: widths {sorted(widths)}", file=sys.stderr)
        return 1
    free = sum(row.count(".") for row in rows)
    walls = sum(row.count("#") for row in rows)
    print(f"{len(rows[0])}x{len(rows)} cells, {free} free, {walls} wall")
    if len(argv) >= 4:
        start = (int(argv[2]), int(argv[3]))
    else:
        start = next((r, c) for r, row in enumerate(rows) for c, ch in enumerate(row) if ch == ".")
    reachable = flood_fill(rows, start)
    print(f"reachable from {start}: {len(reachable)} ({100.0 * len(reachable) / free:.1f}% of free)")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
