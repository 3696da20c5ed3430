"""Gateway service tests: REST control plane and WebSocket streaming."""

import json
import socket
import time
from dataclasses import replace

import httpx
import pytest
from websockets.sync.client import connect as ws_connect

from rosdeck import data
from rosdeck import messages as M
from rosdeck.config import config_to_dict, load_config
from rosdeck.gateway.server import GatewayServer
from rosdeck.gateway.session import GatewaySession
from rosdeck.master import MasterUri
from rosdeck.sim.robot import RobotNode
from rosdeck.sim.world import RobotState, load_floorplan


@pytest.fixture
def stack(sim_master):
    """Sim robot plus gateway server wired to the embedded master."""
    plan = load_floorplan(data.apartment_floorplan_path())
    robot = RobotNode(sim_master.uri, plan, start=RobotState(*data.APARTMENT_START))
    robot.start()
    config = replace(
        load_config(data.demo_config_path()), master_uri=MasterUri.parse(sim_master.uri)
    )
    session = GatewaySession(config)
    server = GatewayServer(session, port=0)
    port = server.start()
    api = f"http://127.0.0.1:{port}"
    yield api, robot, session
    server.stop()
    robot.stop()


def _recv_until(ws, predicate, timeout=3.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        remaining = max(0.05, deadline - time.monotonic())
        try:
            event = json.loads(ws.recv(timeout=remaining))
        except TimeoutError:
            break
        if predicate(event):
            return event
    return None


def test_config_get_put_roundtrip(stack):
    api, _, _ = stack
    cfg = httpx.get(f"{api}/api/config").json()
    assert [w["kind"] for w in cfg["widgets"]] == ["joystick", "gridmap", "logger"]

    cfg["widgets"][0]["max_linear"] = 0.7
    put = httpx.put(f"{api}/api/config", json=cfg)
    assert put.status_code == 200
    assert httpx.get(f"{api}/api/config").json()["widgets"][0]["max_linear"] == 0.7


def test_invalid_config_put_names_field(stack):
    api, _, _ = stack
    cfg = httpx.get(f"{api}/api/config").json()
    cfg["widgets"][0]["max_linear"] = -3
    reply = httpx.put(f"{api}/api/config", json=cfg)
    assert reply.status_code == 422
    assert any(v["path"] == "widgets[0].max_linear" for v in reply.json()["violations"])


def test_connect_disconnect_cycle(stack, sim_master):
    api, _, _ = stack
    assert httpx.get(f"{api}/api/status").json()["state"] == "disconnected"
    t0 = time.monotonic()
    status = httpx.post(f"{api}/api/connect").json()
    assert time.monotonic() - t0 < 1.0
    assert status["state"] == "connected"
    assert status["warnings"] == []

    pubs, subs, _ = sim_master.registry.system_state()
    as_dict = dict((t, n) for t, n in pubs)
    assert "/rosdeck_gateway" in as_dict["/cmd_vel"]
    sub_dict = dict((t, n) for t, n in subs)
    assert "/rosdeck_gateway" in sub_dict["/map"]
    assert "/rosdeck_gateway" in sub_dict["/rosout"]

    first_state = sim_master.registry.system_state()
    assert httpx.post(f"{api}/api/disconnect").json()["state"] == "disconnected"
    httpx.post(f"{api}/api/connect")
    # reconnect reaches an equivalent registration set
    assert sim_master.registry.system_state() == first_state


def test_connect_wrong_port_reports_reason():
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    free_port = probe.getsockname()[1]
    probe.close()
    config = replace(
        load_config(data.demo_config_path()),
        master_uri=MasterUri("127.0.0.1", free_port),
    )
    session = GatewaySession(config)
    server = GatewayServer(session, port=0)
    port = server.start()
    try:
        t0 = time.monotonic()
        status = httpx.post(f"http://127.0.0.1:{port}/api/connect", timeout=10).json()
        assert time.monotonic() - t0 < 5.0
        assert status["state"] == "disconnected"
        assert status["warnings"] and "unreachable" in status["warnings"][0]
    finally:
        server.stop()


def test_ws_streams_status_and_frames_to_all_clients(stack):
    api, _, _ = stack
    httpx.post(f"{api}/api/connect")
    ws_url = api.replace("http", "ws") + "/ws"
    with ws_connect(ws_url) as a, ws_connect(ws_url) as b:
        status_a = json.loads(a.recv(timeout=2))
        status_b = json.loads(b.recv(timeout=2))
        assert status_a["type"] == status_b["type"] == "status"
        assert status_a["state"] == "connected"

        frame_a = _recv_until(a, lambda e: e["type"] == "gridmap_frame")
        frame_b = _recv_until(b, lambda e: e["type"] == "gridmap_frame")
        assert frame_a is not None and frame_b is not None
        assert frame_a["width"] == 64 and frame_a["height"] == 48
        assert frame_a["cells_b64"] == frame_b["cells_b64"]  # identical fan-out


def test_ws_joystick_reaches_robot_quickly(stack):
    api, robot, _ = stack
    httpx.post(f"{api}/api/connect")
    with ws_connect(api.replace("http", "ws") + "/ws") as ws:
        time.sleep(0.3)  # allow the robot's /cmd_vel stream to attach
        t0 = time.monotonic()
        ws.send(json.dumps({"type": "joystick", "widget": "joy1", "x": 0.0, "y": -1.0, "engaged": True}))
        deadline = time.monotonic() + 2.0
        while time.monotonic() < deadline and robot.last_command.linear.x != 0.5:
            time.sleep(0.005)
        latency = time.monotonic() - t0
        assert robot.last_command.linear.x == 0.5
        assert latency < 0.2, f"teleop latency {latency:.3f}s"
        ws.send(json.dumps({"type": "joystick", "widget": "joy1", "x": 0.0, "y": 0.0, "engaged": False}))


def test_ws_error_replies_keep_connection(stack):
    api, _, _ = stack
    with ws_connect(api.replace("http", "ws") + "/ws") as ws:
        json.loads(ws.recv(timeout=2))  # status snapshot
        ws.send("this is not json")
        reply = _recv_until(ws, lambda e: e["type"] == "error")
        assert "JSON" in reply["reason"]
        ws.send(json.dumps({"type": "teleport"}))
        reply = _recv_until(ws, lambda e: e["type"] == "error")
        assert "unknown message type" in reply["reason"]
        ws.send(json.dumps({"type": "joystick", "widget": "joy1"}))  # missing fields
        reply = _recv_until(ws, lambda e: e["type"] == "error")
        assert "malformed joystick" in reply["reason"]
        # still alive: joystick for a disconnected session answers with an error too
        ws.send(json.dumps({"type": "joystick", "widget": "joy1", "x": 0, "y": 0, "engaged": True}))
        reply = _recv_until(ws, lambda e: e["type"] == "error")
        assert "not connected" in reply["reason"]


def test_ui_mount_serves_dashboard_without_shadowing_api(tmp_path):
    (tmp_path / "index.html").write_text("<html><body>dash</body></html>")
    dist = tmp_path / "dist"
    dist.mkdir()
    (dist / "app.js").write_text("// built bundle")
    config = load_config(data.demo_config_path())
    session = GatewaySession(config)
    server = GatewayServer(session, port=0, ui_dir=str(tmp_path))
    port = server.start()
    try:
        base = f"http://127.0.0.1:{port}"
        assert "dash" in httpx.get(base + "/").text
        assert "bundle" in httpx.get(base + "/dist/app.js").text
        assert httpx.get(base + "/api/status").json()["state"] == "disconnected"
    finally:
        server.stop()


def test_ws_status_events_on_transitions(stack):
    api, _, _ = stack
    with ws_connect(api.replace("http", "ws") + "/ws") as ws:
        first = json.loads(ws.recv(timeout=2))
        assert (first["type"], first["state"]) == ("status", "disconnected")
        httpx.post(f"{api}/api/connect")
        states = []
        while True:
            event = _recv_until(ws, lambda e: e["type"] == "status", timeout=2)
            if event is None:
                break
            states.append(event["state"])
            if event["state"] == "connected":
                break
        assert states[0] == "connecting"  # transitions pass through connecting
        assert states[-1] == "connected"
        httpx.post(f"{api}/api/disconnect")
        event = _recv_until(ws, lambda e: e["type"] == "status", timeout=2)
        assert event["state"] == "disconnected"
