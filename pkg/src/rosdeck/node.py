"""Node runtime: advertise, subscribe, publish, and react to publisher updates.

A NodeHandle owns three server-side pieces: the slave XML-RPC endpoint, a
single TCPROS listen socket shared by all publications, and a worker that
applies publisherUpdate diffs off the RPC dispatch path. Subscriptions get a
bounded delivery queue (drop-oldest) and a dedicated dispatcher thread, so a
slow callback can never stall transport reads.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from collections import deque

from . import messages, transport
from .master import MasterClient, MasterUri, RpcError, SlaveApiServer, local_host, request_topic
from .messages import MessageSchema

log = logging.getLogger(__name__)

CALLBACK_QUEUE_SIZE = 64
CONNECT_ATTEMPTS = 3
CONNECT_RETRY_DELAY = 1.0


class NodeError(Exception):
    pass


class _PubConnection:
    __slots__ = ("sock", "lock", "callerid")

    def __init__(self, sock: socket.socket, callerid: str):
        self.sock = sock
        self.lock = threading.Lock()
        self.callerid = callerid

    def send_frame(self, body: bytes) -> None:
        with self.lock:
            transport.write_frame(self.sock, body)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class Publication:
    """One advertised topic; fans each publish out to all live subscribers."""

    def __init__(self, node: "NodeHandle", topic: str, schema: MessageSchema, latched: bool):
        self._node = node
        self.topic = topic
        self.schema = schema
        self.latched = latched
        self._lock = threading.Lock()
        self._conns: list[_PubConnection] = []
        self._retained: bytes | None = None
        self._closed = False

    @property
    def num_subscribers(self) -> int:
        with self._lock:
            return len(self._conns)

    def publish(self, value) -> int:
        """Serialize once, frame to every subscriber; returns connections written.

        A failing connection is dropped, the rest still receive the message.
        """
        body = messages.serialize_message(value, self.schema)
        with self._lock:
            if self._closed:
                raise NodeError(f"publication on {self.topic} is closed")
            if self.latched:
                self._retained = body
            conns = list(self._conns)
        delivered = 0
        for conn in conns:
            try:
                conn.send_frame(body)
                delivered += 1
            except OSError as exc:
                log.info("dropping subscriber %s on %s: %s", conn.callerid, self.topic, exc)
                self._remove(conn)
        return delivered

    def _attach(self, conn: _PubConnection) -> None:
        with self._lock:
            if self._closed:
                raise NodeError("publication closed")
            retained = self._retained
            if retained is not None:
                conn.send_frame(retained)
            self._conns.append(conn)

    def _remove(self, conn: _PubConnection) -> None:
        with self._lock:
            if conn in self._conns:
                self._conns.remove(conn)
        conn.close()

    def close(self) -> None:
        with self._lock:
            self._closed = True
            conns, self._conns = self._conns, []
        for conn in conns:
            conn.close()


class Subscription:
    """One subscribed topic with per-publisher connections and serialized callbacks."""

    def __init__(self, node: "NodeHandle", topic: str, schema: MessageSchema, callback):
        self._node = node
        self.topic = topic
        self.schema = schema
        self.callback = callback
        self._lock = threading.Lock()
        self._conns: dict[str, socket.socket | None] = {}  # uri -> sock (None while connecting)
        self._queue: deque = deque(maxlen=CALLBACK_QUEUE_SIZE)
        self._available = threading.Condition(self._lock)
        self._closed = False
        self._dispatcher = threading.Thread(
            target=self._dispatch_loop, name=f"dispatch{topic}", daemon=True
        )
        self._dispatcher.start()

    @property
    def connected_publishers(self) -> list[str]:
        with self._lock:
            return [uri for uri, sock in self._conns.items() if sock is not None]

    def _enqueue(self, value) -> None:
        with self._available:
            if self._closed:
                return
            self._queue.append(value)  # deque maxlen drops the oldest
            self._available.notify()

    def _dispatch_loop(self) -> None:
        while True:
            with self._available:
                while not self._queue and not self._closed:
                    self._available.wait()
                if self._closed and not self._queue:
                    return
                value = self._queue.popleft()
            try:
                self.callback(value)
            except Exception:
                log.exception("subscriber callback on %s raised", self.topic)

    def update_publishers(self, uris: list[str]) -> None:
        """Reconcile connections against the master's current publisher list."""
        wanted = set(uris)
        to_close: list[socket.socket] = []
        to_connect: list[str] = []
        with self._lock:
            if self._closed:
                return
            for uri in list(self._conns):
                if uri not in wanted:
                    sock = self._conns.pop(uri)
                    if sock is not None:
                        to_close.append(sock)
            for uri in uris:
                if uri not in self._conns:
                    self._conns[uri] = None  # reserve: one connection per publisher
                    to_connect.append(uri)
        for sock in to_close:
            _shutdown_socket(sock)
        for uri in to_connect:
            threading.Thread(
                target=self._connect_publisher, args=(uri,),
                name=f"connect{self.topic}", daemon=True,
            ).start()

    def _connect_publisher(self, uri: str) -> None:
        last_error: Exception | None = None
        for attempt in range(CONNECT_ATTEMPTS):
            with self._lock:
                if self._closed or uri not in self._conns:
                    return
            try:
                sock = self._open_stream(uri)
                break
            except (OSError, RpcError, transport.TransportError) as exc:
                last_error = exc
                time.sleep(CONNECT_RETRY_DELAY if attempt < CONNECT_ATTEMPTS - 1 else 0)
        else:
            log.warning("giving up on publisher %s for %s: %s", uri, self.topic, last_error)
            with self._lock:
                if self._conns.get(uri, "missing") is None:
                    del self._conns[uri]
            return
        with self._lock:
            if self._closed or uri not in self._conns:
                sock.close()
                return
            self._conns[uri] = sock
        threading.Thread(
            target=self._read_loop, args=(uri, sock),
            name=f"read{self.topic}", daemon=True,
        ).start()

    def _open_stream(self, uri: str) -> socket.socket:
        host, port = request_topic(uri, self._node.name, self.topic)
        sock = socket.create_connection((host, port), timeout=transport.HANDSHAKE_TIMEOUT)
        try:
            transport.subscriber_handshake(sock, self.topic, self.schema, self._node.name)
        except Exception:
            sock.close()
            raise
        return sock

    def _read_loop(self, uri: str, sock: socket.socket) -> None:
        try:
            while True:
                frame = transport.read_frame(sock)
                if frame is None:
                    break
                try:
                    value = messages.deserialize_message(frame, self.schema)
                except messages.DeserializationError as exc:
                    log.warning("bad frame on %s from %s: %s", self.topic, uri, exc)
                    break
                self._enqueue(value)
        except transport.FrameError as exc:
            log.info("stream from %s on %s ended: %s", uri, self.topic, exc)
        finally:
            sock.close()
            with self._lock:
                if self._conns.get(uri) is sock:
                    del self._conns[uri]

    def close(self) -> None:
        """After this returns no further callbacks run for this subscription."""
        with self._lock:
            if self._closed:
                return
            self._closed = True
            conns, self._conns = self._conns, {}
        for sock in conns.values():
            if sock is not None:
                _shutdown_socket(sock)
        with self._available:
            self._queue.clear()
            self._available.notify_all()
        if threading.current_thread() is not self._dispatcher:
            self._dispatcher.join(timeout=2)


def _shutdown_socket(sock: socket.socket) -> None:
    try:
        sock.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass
    sock.close()


class NodeHandle:
    """A ROS node: registrations at the master plus live TCPROS streams.

    Shareable across threads; publish is safe concurrently; callbacks for one
    subscription are serialized while different subscriptions run concurrently.
    """

    def __init__(
        self,
        master_uri: MasterUri | str,
        name: str = "/rosdeck_node",
        advertised_host: str | None = None,
        rpc_timeout: float = 3.0,
    ):
        if not name.startswith("/"):
            raise NodeError(f"node name must start with '/': {name!r}")
        self.name = name
        self.master = MasterClient(master_uri, caller_id=name, timeout=rpc_timeout)
        self._host = advertised_host or local_host()
        self._lock = threading.Lock()
        self._publications: dict[str, Publication] = {}
        self._subscriptions: dict[str, Subscription] = {}
        self._shutdown = False

        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(("0.0.0.0", 0))
        self._listener.listen(32)
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="tcpros-accept", daemon=True
        )
        self._accept_thread.start()

        self._updates: queue.Queue = queue.Queue()
        self._update_thread = threading.Thread(
            target=self._update_loop, name="pub-updates", daemon=True
        )
        self._update_thread.start()

        self._slave = SlaveApiServer(self, advertised_host=self._host)

    # -- endpoints ----------------------------------------------------------

    @property
    def slave_uri(self) -> str:
        return self._slave.uri

    @property
    def tcpros_endpoint(self) -> tuple[str, int]:
        return self._host, self._listener.getsockname()[1]

    # -- slave API handlers (run on RPC dispatch threads, must stay quick) ---

    def request_topic_rpc(self, caller_id: str, topic: str, protocols) -> list:
        with self._lock:
            published = topic in self._publications
        if not published:
            return [0, f"topic not published: {topic}", []]
        for proto in protocols or []:
            if isinstance(proto, (list, tuple)) and proto and proto[0] == "TCPROS":
                host, port = self.tcpros_endpoint
                return [1, f"ready on {host}:{port}", ["TCPROS", host, port]]
        return [0, "no common protocol: only TCPROS is supported", []]

    def publisher_update_rpc(self, caller_id: str, topic: str, publisher_uris) -> list:
        self._updates.put((topic, [str(u) for u in publisher_uris]))
        return [1, "", 0]

    def _update_loop(self) -> None:
        while True:
            item = self._updates.get()
            if item is None:
                return
            topic, uris = item
            with self._lock:
                sub = self._subscriptions.get(topic)
            if sub is not None:
                sub.update_publishers(uris)

    # -- publisher side ------------------------------------------------------

    def advertise(self, topic: str, type_name: str, latched: bool = False) -> Publication:
        schema = messages.get_schema(type_name)
        with self._lock:
            if self._shutdown:
                raise NodeError("node is shut down")
            if topic in self._publications:
                raise NodeError(f"already advertising {topic}")
            pub = Publication(self, topic, schema, latched)
            self._publications[topic] = pub
        try:
            self.master.register_publisher(topic, type_name, self.slave_uri)
        except RpcError:
            with self._lock:
                self._publications.pop(topic, None)
            pub.close()
            raise
        return pub

    def unadvertise(self, topic: str) -> None:
        with self._lock:
            pub = self._publications.pop(topic, None)
        if pub is None:
            return
        pub.close()
        try:
            self.master.unregister_publisher(topic, self.slave_uri)
        except RpcError as exc:
            log.warning("unregisterPublisher %s failed: %s", topic, exc)

    def _accept_loop(self) -> None:
        while True:
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return  # listener closed
            threading.Thread(
                target=self._serve_subscriber, args=(sock,),
                name="tcpros-handshake", daemon=True,
            ).start()

    def _serve_subscriber(self, sock: socket.socket) -> None:
        try:
            sock.settimeout(transport.HANDSHAKE_TIMEOUT)
            request = transport.read_header(sock)
            topic = request.get("topic", "")
            with self._lock:
                pub = self._publications.get(topic)
            if pub is None:
                transport.send_error_header(sock, f"topic not published: {topic or '<missing>'}")
                sock.close()
                return
            callerid = transport.complete_publisher_handshake(
                sock, request, pub.topic, pub.schema, self.name, pub.latched
            )
            sock.settimeout(None)
        except transport.TransportError as exc:
            log.info("inbound handshake failed: %s", exc)
            sock.close()
            return
        conn = _PubConnection(sock, callerid)
        try:
            pub._attach(conn)
        except (NodeError, OSError):
            conn.close()
            return
        # Block on the socket to notice subscriber departure promptly.
        try:
            while sock.recv(4096):
                pass  # subscribers send nothing after the handshake; drain defensively
        except OSError:
            pass
        pub._remove(conn)

    # -- subscriber side -----------------------------------------------------

    def subscribe(self, topic: str, type_name: str, callback) -> Subscription:
        schema = messages.get_schema(type_name)
        with self._lock:
            if self._shutdown:
                raise NodeError("node is shut down")
            if topic in self._subscriptions:
                raise NodeError(f"already subscribed to {topic}")
            sub = Subscription(self, topic, schema, callback)
            self._subscriptions[topic] = sub
        try:
            publishers = self.master.register_subscriber(topic, type_name, self.slave_uri)
        except RpcError:
            with self._lock:
                self._subscriptions.pop(topic, None)
            sub.close()
            raise
        sub.update_publishers(publishers)
        return sub

    def unsubscribe(self, topic: str) -> None:
        with self._lock:
            sub = self._subscriptions.pop(topic, None)
        if sub is None:
            return
        sub.close()
        try:
            self.master.unregister_subscriber(topic, self.slave_uri)
        except RpcError as exc:
            log.warning("unregisterSubscriber %s failed: %s", topic, exc)

    # -- lifecycle -----------------------------------------------------------

    def shutdown(self) -> None:
        """Unregister everything and stop all servers. Idempotent, best-effort."""
        with self._lock:
            if self._shutdown:
                return
            self._shutdown = True
            pubs = dict(self._publications)
            subs = dict(self._subscriptions)
            self._publications.clear()
            self._subscriptions.clear()
        for topic, sub in subs.items():
            sub.close()
            try:
                self.master.unregister_subscriber(topic, self.slave_uri)
            except RpcError as exc:
                log.warning("unregister %s during shutdown: %s", topic, exc)
        for topic, pub in pubs.items():
            pub.close()
            try:
                self.master.unregister_publisher(topic, self.slave_uri)
            except RpcError as exc:
                log.warning("unregister %s during shutdown: %s", topic, exc)
        self._updates.put(None)
        try:
            self._listener.close()
        except OSError:
            pass
        self._slave.close()

    def __enter__(self) -> "NodeHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
