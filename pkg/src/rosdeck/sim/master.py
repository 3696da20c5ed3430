"""Embedded ROS master: topic registry plus the XML-RPC front end.

Implements the registry semantics the client stack relies on: registration
returns the current peer list, publisher-set changes push publisherUpdate to
every subscriber of the topic, and the wildcard "*" type never becomes a
topic's concrete type.
"""

from __future__ import annotations

import logging
import queue
import threading
from socketserver import ThreadingMixIn
from xmlrpc.server import SimpleXMLRPCRequestHandler, SimpleXMLRPCServer

from ..master import RpcResult, error, failure, notify_publisher_update, ok

log = logging.getLogger(__name__)


class MasterRegistry:
    """Per-topic publisher/subscriber sets. All methods are thread-safe."""

    def __init__(self):
        self._lock = threading.Lock()
        # topic -> set of (caller_id, api)
        self._pubs: dict[str, set[tuple[str, str]]] = {}
        self._subs: dict[str, set[tuple[str, str]]] = {}
        self._types: dict[str, str] = {}
        self._node_apis: dict[str, str] = {}

    def register(self, role: str, topic: str, caller_id: str, topic_type: str, api: str) -> tuple[list[str], tuple[list[str], list[str]] | None]:
        """Returns (peer apis, notification). For publishers the notification is
        (subscriber apis, new publisher set) to push out; None otherwise."""
        table = self._pubs if role == "pub" else self._subs
        with self._lock:
            table.setdefault(topic, set()).add((caller_id, api))
            if topic_type != "*" and topic not in self._types:
                self._types[topic] = topic_type
            self._node_apis[caller_id] = api
            if role == "pub":
                return self._subscriber_apis(topic), (self._subscriber_apis(topic), self._publisher_apis(topic))
            return self._publisher_apis(topic), None

    def unregister(self, role: str, topic: str, caller_id: str, api: str) -> tuple[int, tuple[list[str], list[str]] | None]:
        table = self._pubs if role == "pub" else self._subs
        with self._lock:
            entries = table.get(topic, set())
            if (caller_id, api) not in entries:
                return 0, None
            entries.discard((caller_id, api))
            if not entries:
                table.pop(topic, None)
            if role == "pub":
                return 1, (self._subscriber_apis(topic), self._publisher_apis(topic))
            return 1, None

    def _publisher_apis(self, topic: str) -> list[str]:
        return [a for _, a in sorted(self._pubs.get(topic, set()))]

    def _subscriber_apis(self, topic: str) -> list[str]:
        return [a for _, a in sorted(self._subs.get(topic, set()))]

    def system_state(self) -> tuple[list, list, list]:
        with self._lock:
            pubs = [[t, sorted(c for c, _ in e)] for t, e in sorted(self._pubs.items())]
            subs = [[t, sorted(c for c, _ in e)] for t, e in sorted(self._subs.items())]
        return pubs, subs, []

    def topic_types(self) -> list[list[str]]:
        with self._lock:
            return [[t, ty] for t, ty in sorted(self._types.items())]

    def lookup_node(self, name: str) -> str | None:
        with self._lock:
            return self._node_apis.get(name)


class _MasterRequestHandler(SimpleXMLRPCRequestHandler):
    rpc_paths = ()

    def log_message(self, format, *args):  # noqa: A002
        pass


class _ThreadingXmlRpcServer(ThreadingMixIn, SimpleXMLRPCServer):
    daemon_threads = True
    allow_reuse_address = True


class SimMaster:
    """XML-RPC ROS master good enough for the whole suite (and real nodes).

    publisherUpdate pushes run on a notifier thread so registration RPCs
    return without waiting on subscriber slaves.
    """

    METHODS = (
        "registerPublisher",
        "registerSubscriber",
        "unregisterPublisher",
        "unregisterSubscriber",
        "lookupNode",
        "getSystemState",
        "getTopicTypes",
        "getPid",
        "getUri",
    )

    def __init__(self, port: int = 0, advertised_host: str = "127.0.0.1"):
        self.registry = MasterRegistry()
        self._host = advertised_host
        self._notifications: queue.Queue = queue.Queue()
        self._server = _ThreadingXmlRpcServer(
            ("0.0.0.0", port), requestHandler=_MasterRequestHandler, logRequests=False
        )
        self._server.register_instance(_Dispatcher(self))
        self._serve_thread = threading.Thread(
            target=self._server.serve_forever, name="sim-master", daemon=True
        )
        self._notify_thread = threading.Thread(
            target=self._notify_loop, name="sim-master-notify", daemon=True
        )
        self._serve_thread.start()
        self._notify_thread.start()

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def uri(self) -> str:
        return f"http://{self._host}:{self.port}"

    def close(self) -> None:
        self._notifications.put(None)
        self._server.shutdown()
        self._server.server_close()
        self._serve_thread.join(timeout=2)
        self._notify_thread.join(timeout=2)

    # -- core dispatch, also usable directly in tests -------------------------

    def handle(self, method: str, args: list) -> RpcResult:
        if method not in self.METHODS:
            raise ValueError(f"unknown master method: {method}")
        return getattr(self, "_" + method)(*args)

    def _registerPublisher(self, caller_id, topic, topic_type, caller_api) -> RpcResult:
        peers, notify = self.registry.register("pub", topic, caller_id, topic_type, caller_api)
        if notify is not None:
            sub_apis, pub_apis = notify
            self._queue_updates(topic, sub_apis, pub_apis)
        return ok(peers, f"registered {caller_id} as publisher of {topic}")

    def _registerSubscriber(self, caller_id, topic, topic_type, caller_api) -> RpcResult:
        peers, _ = self.registry.register("sub", topic, caller_id, topic_type, caller_api)
        return ok(peers, f"registered {caller_id} as subscriber to {topic}")

    def _unregisterPublisher(self, caller_id, topic, caller_api) -> RpcResult:
        count, notify = self.registry.unregister("pub", topic, caller_id, caller_api)
        if notify is not None:
            sub_apis, pub_apis = notify
            self._queue_updates(topic, sub_apis, pub_apis)
        return ok(count)

    def _unregisterSubscriber(self, caller_id, topic, caller_api) -> RpcResult:
        count, _ = self.registry.unregister("sub", topic, caller_id, caller_api)
        return ok(count)

    def _lookupNode(self, caller_id, node_name) -> RpcResult:
        api = self.registry.lookup_node(node_name)
        if api is None:
            return error(f"unknown node {node_name}", "")
        return ok(api)

    def _getSystemState(self, caller_id) -> RpcResult:
        return ok(list(self.registry.system_state()))

    def _getTopicTypes(self, caller_id) -> RpcResult:
        return ok(self.registry.topic_types())

    def _getPid(self, caller_id) -> RpcResult:
        import os

        return ok(os.getpid())

    def _getUri(self, caller_id) -> RpcResult:
        return ok(self.uri)

    # -- notifications ---------------------------------------------------------

    def _queue_updates(self, topic: str, sub_apis: list[str], pub_apis: list[str]) -> None:
        for sub_api in sub_apis:
            self._notifications.put((sub_api, topic, pub_apis))

    def _notify_loop(self) -> None:
        while True:
            item = self._notifications.get()
            if item is None:
                return
            sub_api, topic, pub_apis = item
            notify_publisher_update(sub_api, topic, pub_apis)


class _Dispatcher:
    """Routes XML-RPC calls into SimMaster.handle; unknown methods fault."""

    def __init__(self, master: SimMaster):
        self._master = master

    def _dispatch(self, method: str, params):
        result = self._master.handle(method, list(params))
        return result.triple()
