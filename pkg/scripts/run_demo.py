#!/usr/bin/env python3
"""One-command demo: embedded master + robot + gateway on a single machine.

Starts everything on loopback, autoconnects the gateway, and prints the
dashboard URL. Drive with the browser UI (see frontend/) or any WebSocket
client speaking the gateway protocol. Ctrl-C tears it all down.

Usage: python scripts/run_demo.py [--http-port 8080]
"""

import argparse
import json
import signal
import tempfile
import threading
from dataclasses import replace
from pathlib import Path

from rosdeck import data
from rosdeck.config import config_to_dict, load_config
from rosdeck.gateway.server import GatewayServer
from rosdeck.gateway.session import GatewaySession
from rosdeck.master import MasterUri
from rosdeck.sim.master import SimMaster
from rosdeck.sim.robot import RobotNode
from rosdeck.sim.world import RobotState, load_floorplan


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--http-port", type=int, default=8080)
    args = parser.parse_args()

    plan = load_floorplan(data.apartment_floorplan_path())
    master = SimMaster()
    robot = RobotNode(master.uri, plan, start=RobotState(*data.APARTMENT_START))
    robot.start()
    print(f"sim: master on {master.uri}")

    config = replace(load_config(data.demo_config_path()), master_uri=MasterUri.parse(master.uri))
    config_path = Path(tempfile.mkdtemp(prefix="rosdeck-demo-")) / "config.json"
    config_path.write_text(json.dumps(config_to_dict(config), indent=2))

    ui_dir = Path(__file__).resolve().parents[1] / "frontend"
    have_ui = (ui_dir / "dist" / "app.js").is_file()
    session = GatewaySession(config, config_path=config_path)
    server = GatewayServer(session, host="0.0.0.0", port=args.http_port,
                           ui_dir=str(ui_dir) if have_ui else None)
    port = server.start()
    status = session.connect()
    print(f"gateway: {status['state']}, dashboard on http://127.0.0.1:{port}")
    if not have_ui:
        print("dashboard UI not built (run `npm install && npm run build` in frontend/);"
              " the HTTP/WebSocket API is up regardless")

    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        server.stop()
        robot.stop()
        master.close()


if __name__ == "__main__":
    main()
