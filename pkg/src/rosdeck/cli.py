"""Command line entry points: the dashboard gateway and the simulator.

    rosdeck gateway --config cfg.json --http-port 8080 [--autoconnect]
    rosdeck sim --floorplan plan.txt --master-port 11311 [--seed n]
"""

from __future__ import annotations

import argparse
import logging
import random
import signal
import sys
import threading

from . import data
from .config import load_config
from .gateway.server import GatewayServer
from .gateway.session import GatewaySession
from .sim.master import SimMaster
from .sim.robot import RobotNode
from .sim.world import RobotState, load_floorplan


def _wait_for_interrupt() -> None:
    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    stop.wait()


def find_ui_dir() -> str | None:
    """Built dashboard next to the repo layout, if present."""
    from pathlib import Path

    for base in (Path.cwd(), Path(__file__).resolve().parents[2].parent):
        candidate = base / "frontend"
        if (candidate / "dist" / "app.js").is_file() and (candidate / "index.html").is_file():
            return str(candidate)
    return None


def run_gateway(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    session = GatewaySession(config, config_path=args.config)
    ui_dir = args.ui_dir if args.ui_dir else find_ui_dir()
    server = GatewayServer(session, host=args.host, port=args.http_port, ui_dir=ui_dir)
    port = server.start()
    print(f"gateway: dashboard API on http://{args.host}:{port} (config {config.name!r})")
    if ui_dir:
        print(f"gateway: serving dashboard UI from {ui_dir}")
    if args.autoconnect:
        status = session.connect()
        print(f"gateway: {status['state']} to {status['master']}"
              + (f" warnings={status['warnings']}" if status["warnings"] else ""))
    try:
        _wait_for_interrupt()
    finally:
        server.stop()
    return 0


def run_sim(args: argparse.Namespace) -> int:
    random.seed(args.seed)
    plan = load_floorplan(args.floorplan, resolution=args.resolution)
    master = SimMaster(port=args.master_port)
    x, y, theta = data.APARTMENT_START if args.start is None else args.start
    robot = RobotNode(master.uri, plan, start=RobotState(x, y, theta))
    robot.start()
    print(f"sim: master on {master.uri}, robot at ({x}, {y}, {theta}) in "
          f"{plan.width}x{plan.height} plan ({plan.free_cell_count} free cells)")
    try:
        _wait_for_interrupt()
    finally:
        robot.stop()
        master.close()
    return 0


def _parse_start(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("start pose must be x,y,theta")
    return parts[0], parts[1], parts[2]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rosdeck", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gw = sub.add_parser("gateway", help="run the dashboard gateway")
    gw.add_argument("--config", required=True, help="path to a config JSON file")
    gw.add_argument("--http-port", type=int, default=8080)
    gw.add_argument("--host", default="0.0.0.0")
    gw.add_argument("--autoconnect", action="store_true",
                    help="connect to the configured master immediately")
    gw.add_argument("--ui-dir", default=None,
                    help="serve the built dashboard from this directory (autodetected)")
    gw.set_defaults(func=run_gateway)

    sim = sub.add_parser("sim", help="run the embedded master and robot")
    sim.add_argument("--floorplan", default=str(data.apartment_floorplan_path()),
                     help="ASCII floorplan: '#' wall, '.' free")
    sim.add_argument("--master-port", type=int, default=11311)
    sim.add_argument("--seed", type=int, default=0,
                     help="seed for any randomized behavior (reserved; sim is deterministic)")
    sim.add_argument("--resolution", type=float, default=0.1, help="meters per cell")
    sim.add_argument("--start", type=_parse_start, default=None, help="robot start pose x,y,theta")
    sim.set_defaults(func=run_sim)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
