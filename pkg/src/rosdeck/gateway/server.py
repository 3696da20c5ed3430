"""HTTP + WebSocket front end for the gateway session.

REST handles config and connection control; /ws streams status, grid frames
and log lines to every dashboard client and accepts joystick samples. Fan-out
never blocks on a slow client: each client owns a bounded buffer where frames
and logs are droppable (newest frame per widget wins) and status never is.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
import threading
from collections import deque

import uvicorn
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.staticfiles import StaticFiles
from starlette.websockets import WebSocketState

from ..config import ConfigError, config_from_dict, config_to_dict
from .session import GatewayError, GatewaySession

log = logging.getLogger(__name__)

CLIENT_BUFFER = 64  # droppable events buffered per client


class _ClientBuffer:
    """Per-client event buffer; all mutation happens on the event loop thread."""

    def __init__(self, loop: asyncio.AbstractEventLoop):
        self._loop = loop
        self._events: deque = deque()
        self._wakeup = asyncio.Event()

    def offer_threadsafe(self, event: dict) -> None:
        try:
            self._loop.call_soon_threadsafe(self._offer, event)
        except RuntimeError:
            pass  # loop already closed

    def _offer(self, event: dict) -> None:
        if event["type"] == "gridmap_frame":
            # newest frame per widget wins; stale ones would only add latency
            widget = event.get("widget")
            self._events = deque(
                e for e in self._events
                if not (e["type"] == "gridmap_frame" and e.get("widget") == widget)
            )
        self._events.append(event)
        droppable = [i for i, e in enumerate(self._events) if e["type"] != "status"]
        overflow = len(droppable) - CLIENT_BUFFER
        if overflow > 0:
            keep = set(droppable[overflow:])
            self._events = deque(
                e for i, e in enumerate(self._events) if e["type"] == "status" or i in keep
            )
        self._wakeup.set()

    async def next_event(self) -> dict:
        while not self._events:
            self._wakeup.clear()
            await self._wakeup.wait()
        return self._events.popleft()


def build_app(session: GatewaySession, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="rosdeck gateway")
    # LAN tool, no auth by design; CORS open so a file:// dashboard can talk too
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/config")
    def get_config():
        return config_to_dict(session.get_config())

    @app.put("/api/config")
    def put_config(body: dict):
        try:
            cfg = config_from_dict(body)
        except ConfigError as exc:
            return JSONResponse(
                status_code=422,
                content={"violations": [{"path": v.path, "message": v.message} for v in exc.violations]},
            )
        session.set_config(cfg)
        return config_to_dict(cfg)

    @app.get("/api/status")
    def get_status():
        return session.status()

    @app.post("/api/connect")
    def post_connect():
        return session.connect()

    @app.post("/api/disconnect")
    def post_disconnect():
        return session.disconnect()

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        buffer = _ClientBuffer(asyncio.get_running_loop())
        remove_listener = session.add_listener(buffer.offer_threadsafe)
        # snapshot so a fresh dashboard shows state and the latched map at once
        buffer._offer(session.status_event())
        for event in session.latest_frame_events():
            buffer._offer(event)

        def closing() -> bool:
            return (
                ws.client_state != WebSocketState.CONNECTED
                or ws.application_state != WebSocketState.CONNECTED
            )

        async def pump():
            # a send racing the close handshake would stall it, so re-check state
            while not closing():
                event = await buffer.next_event()
                if closing():
                    return
                try:
                    await ws.send_json(event)
                except Exception:
                    return

        sender = asyncio.create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                reply = _handle_client_message(session, raw)
                if reply is not None:
                    buffer._offer(reply)
        except WebSocketDisconnect:
            pass
        finally:
            remove_listener()
            sender.cancel()
            with contextlib.suppress(Exception, asyncio.CancelledError):
                await sender

    if ui_dir is not None:
        # mounted last: the explicit /api and /ws routes above keep precedence
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="dashboard")

    return app


def _handle_client_message(session: GatewaySession, raw: str) -> dict | None:
    try:
        message = json.loads(raw)
    except json.JSONDecodeError:
        return {"type": "error", "reason": "message is not valid JSON"}
    if not isinstance(message, dict):
        return {"type": "error", "reason": "message must be a JSON object"}
    kind = message.get("type")
    if kind == "joystick":
        try:
            session.feed_joystick(
                str(message["widget"]),
                float(message["x"]),
                float(message["y"]),
                bool(message["engaged"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            return {"type": "error", "reason": f"malformed joystick message: {exc}"}
        except GatewayError as exc:
            return {"type": "error", "reason": str(exc)}
        return None
    return {"type": "error", "reason": f"unknown message type: {kind!r}"}


class GatewayServer:
    """Runs the ASGI app on a background thread; port 0 picks a free port."""

    def __init__(self, session: GatewaySession, host: str = "127.0.0.1", port: int = 8080,
                 ui_dir: str | None = None):
        self.session = session
        self._config = uvicorn.Config(
            build_app(session, ui_dir=ui_dir), host=host, port=port, log_level="warning"
        )
        self._server = uvicorn.Server(self._config)
        self._thread: threading.Thread | None = None

    def start(self, ready_timeout: float = 10.0) -> int:
        self._thread = threading.Thread(target=self._server.run, name="gateway-http", daemon=True)
        self._thread.start()
        deadline = ready_timeout
        import time

        t0 = time.monotonic()
        while not self._server.started:
            if time.monotonic() - t0 > deadline:
                raise RuntimeError("gateway HTTP server failed to start")
            if not self._thread.is_alive():
                raise RuntimeError("gateway HTTP server thread died during startup")
            time.sleep(0.01)
        return self.port

    @property
    def port(self) -> int:
        servers = getattr(self._server, "servers", [])
        for srv in servers:
            for sock in srv.sockets:
                return sock.getsockname()[1]
        return self._config.port

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.session.close()
