"""XML-RPC plumbing: client for the ROS master, slave API server for this node.

Every master/slave method returns the conventional (code, statusMessage,
payload) triple; code 1 is success, 0 failure, -1 error. The client unwraps
that triple, the server builds it. Value kinds on the wire are limited to
int, boolean, string, double and array, which is all the master API uses.
"""

from __future__ import annotations

import http.client
import logging
import os
import socket
import threading
import xmlrpc.client
from dataclasses import dataclass
from socketserver import ThreadingMixIn
from urllib.parse import urlparse
from xmlrpc.server import SimpleXMLRPCRequestHandler, SimpleXMLRPCServer

log = logging.getLogger(__name__)

DEFAULT_MASTER_PORT = 11311
DEFAULT_CALLER_ID = "/rosdeck_gateway"
DEFAULT_RPC_TIMEOUT = 3.0


class RpcError(Exception):
    """Base class for master/slave API failures."""


class RpcTransportError(RpcError):
    """Could not reach the peer or the HTTP/XML layer failed."""


class RpcStatusError(RpcError):
    """Peer answered with code <= 0."""

    def __init__(self, code: int, status_message: str):
        super().__init__(f"rpc failed (code {code}): {status_message}")
        self.code = code
        self.status_message = status_message


@dataclass(frozen=True)
class MasterUri:
    host: str
    port: int = DEFAULT_MASTER_PORT

    @classmethod
    def parse(cls, text: str) -> "MasterUri":
        parsed = urlparse(text if "//" in text else f"http://{text}")
        if parsed.scheme != "http":
            raise ValueError(f"master URI must use http, got {text!r}")
        if not parsed.hostname:
            raise ValueError(f"master URI has no host: {text!r}")
        port = parsed.port if parsed.port is not None else DEFAULT_MASTER_PORT
        if not 1 <= port <= 65535:
            raise ValueError(f"master URI port out of range: {port}")
        return cls(parsed.hostname, port)

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def __str__(self) -> str:
        return self.url


@dataclass(frozen=True)
class RpcResult:
    code: int
    status_message: str
    payload: object

    def triple(self) -> list:
        return [self.code, self.status_message, self.payload]


def ok(payload, message: str = "") -> RpcResult:
    return RpcResult(1, message, payload)


def failure(message: str, payload=0) -> RpcResult:
    return RpcResult(0, message, payload)


def error(message: str, payload=0) -> RpcResult:
    return RpcResult(-1, message, payload)


class _TimeoutTransport(xmlrpc.client.Transport):
    def __init__(self, timeout: float):
        super().__init__()
        self._timeout = timeout

    def make_connection(self, host):
        conn = super().make_connection(host)
        conn.timeout = self._timeout
        return conn


_RPC_NETWORK_ERRORS = (
    OSError,
    http.client.HTTPException,
    xmlrpc.client.ProtocolError,
    xmlrpc.client.ResponseError,
)


def call_api(uri: str, method: str, args: tuple, timeout: float = DEFAULT_RPC_TIMEOUT):
    """One XML-RPC call returning the unwrapped payload of a (code, msg, payload)
    triple. A fresh connection per call keeps concurrent callers independent."""
    proxy = xmlrpc.client.ServerProxy(uri, transport=_TimeoutTransport(timeout), allow_none=False)
    try:
        try:
            reply = getattr(proxy, method)(*args)
        except xmlrpc.client.Fault as exc:
            raise RpcStatusError(-1, f"fault from {method}: {exc.faultString}") from None
        except _RPC_NETWORK_ERRORS as exc:
            raise RpcTransportError(f"{method} to {uri} failed: {exc}") from exc
    finally:
        proxy("close")()
    if not isinstance(reply, (list, tuple)) or len(reply) != 3:
        raise RpcTransportError(f"{method} returned malformed triple: {reply!r}")
    code, status_message, payload = reply
    if code != 1:
        raise RpcStatusError(code, str(status_message))
    return payload


class MasterClient:
    """Typed wrappers over the master API. Safe to call from any thread."""

    def __init__(
        self,
        master_uri: MasterUri | str,
        caller_id: str = DEFAULT_CALLER_ID,
        timeout: float = DEFAULT_RPC_TIMEOUT,
    ):
        if isinstance(master_uri, str):
            master_uri = MasterUri.parse(master_uri)
        self.master_uri = master_uri
        self.caller_id = caller_id
        self.timeout = timeout

    def _call(self, method: str, *args):
        return call_api(self.master_uri.url, method, (self.caller_id, *args), self.timeout)

    def register_publisher(self, topic: str, topic_type: str, caller_api: str) -> list[str]:
        return list(self._call("registerPublisher", topic, topic_type, caller_api))

    def register_subscriber(self, topic: str, topic_type: str, caller_api: str) -> list[str]:
        return list(self._call("registerSubscriber", topic, topic_type, caller_api))

    def unregister_publisher(self, topic: str, caller_api: str) -> int:
        return int(self._call("unregisterPublisher", topic, caller_api))

    def unregister_subscriber(self, topic: str, caller_api: str) -> int:
        return int(self._call("unregisterSubscriber", topic, caller_api))

    def lookup_node(self, node_name: str) -> str:
        return str(self._call("lookupNode", node_name))

    def get_system_state(self) -> tuple[list, list, list]:
        pubs, subs, srvs = self._call("getSystemState")
        return list(pubs), list(subs), list(srvs)

    def get_topic_types(self) -> list[tuple[str, str]]:
        return [(t, ty) for t, ty in self._call("getTopicTypes")]

    def ping(self) -> None:
        """Raises RpcTransportError when the master is unreachable."""
        self._call("getSystemState")


def request_topic(
    slave_uri: str,
    caller_id: str,
    topic: str,
    protocols: list[list[str]] | None = None,
    timeout: float = DEFAULT_RPC_TIMEOUT,
) -> tuple[str, int]:
    """Ask a publisher's slave API where its TCPROS endpoint lives."""
    if protocols is None:
        protocols = [["TCPROS"]]
    payload = call_api(slave_uri, "requestTopic", (caller_id, topic, protocols), timeout)
    if not isinstance(payload, (list, tuple)) or len(payload) < 3 or payload[0] != "TCPROS":
        raise RpcTransportError(f"unusable requestTopic reply from {slave_uri}: {payload!r}")
    return str(payload[1]), int(payload[2])


# ---------------------------------------------------------------------------
# Slave API server


def local_host() -> str:
    """Address other nodes should use to reach us. ROS_IP/ROS_HOSTNAME win;
    loopback otherwise, which is right for the desk-scale setup."""
    return os.environ.get("ROS_IP") or os.environ.get("ROS_HOSTNAME") or "127.0.0.1"


class _SlaveRequestHandler(SimpleXMLRPCRequestHandler):
    rpc_paths = ()  # accept POST to any path; ROS clients use "/"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass


class _ThreadingXmlRpcServer(ThreadingMixIn, SimpleXMLRPCServer):
    daemon_threads = True
    allow_reuse_address = True


class SlaveApiServer:
    """Answers requestTopic, publisherUpdate and getPid for one node.

    Handlers run on server dispatch threads and must return quickly; anything
    slow belongs on a queue. Malformed request bodies produce a fault reply
    and the server keeps serving.
    """

    def __init__(self, handlers, advertised_host: str | None = None, port: int = 0):
        self._server = _ThreadingXmlRpcServer(
            ("0.0.0.0", port), requestHandler=_SlaveRequestHandler, logRequests=False
        )
        self._host = advertised_host or local_host()
        self._server.register_function(handlers.request_topic_rpc, "requestTopic")
        self._server.register_function(handlers.publisher_update_rpc, "publisherUpdate")
        self._server.register_function(lambda caller_id: [1, "", os.getpid()], "getPid")
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="slave-api", daemon=True
        )
        self._thread.start()

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def uri(self) -> str:
        return f"http://{self._host}:{self.port}/"

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=2)


def notify_publisher_update(sub_api: str, topic: str, publisher_uris: list[str],
                            caller_id: str = "/master", timeout: float = 1.0) -> None:
    """Best-effort publisherUpdate push to one subscriber slave."""
    try:
        call_api(sub_api, "publisherUpdate", (caller_id, topic, publisher_uris), timeout)
    except RpcError as exc:
        log.debug("publisherUpdate to %s failed: %s", sub_api, exc)
