"""Master client, slave server, and XML-RPC plumbing tests."""

import socket
import threading
import time
import xmlrpc.client

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rosdeck.master import (
    MasterClient,
    MasterUri,
    RpcStatusError,
    RpcTransportError,
    SlaveApiServer,
    call_api,
    request_topic,
)

# ---------------------------------------------------------------------------
# MasterUri


def test_master_uri_parse_defaults():
    uri = MasterUri.parse("http://10.0.0.5")
    assert uri == MasterUri("10.0.0.5", 11311)
    assert uri.url == "http://10.0.0.5:11311"


def test_master_uri_rejects_bad_scheme_and_port():
    with pytest.raises(ValueError):
        MasterUri.parse("ftp://x:1")
    with pytest.raises(ValueError):
        MasterUri.parse("http://x:0")
    with pytest.raises(ValueError):
        MasterUri.parse("http://:11311")


# ---------------------------------------------------------------------------
# registration against the embedded master


def test_first_publisher_sees_no_subscribers(sim_master):
    client = MasterClient(sim_master.uri, caller_id="/talker")
    subs = client.register_publisher("/cmd_vel", "geometry_msgs/Twist", "http://127.0.0.1:1/")
    assert subs == []


def test_publisher_sees_existing_subscriber(sim_master):
    sub = MasterClient(sim_master.uri, caller_id="/listener")
    sub.register_subscriber("/cmd_vel", "geometry_msgs/Twist", "http://127.0.0.1:2/")
    pub = MasterClient(sim_master.uri, caller_id="/talker")
    subs = pub.register_publisher("/cmd_vel", "geometry_msgs/Twist", "http://127.0.0.1:1/")
    assert subs == ["http://127.0.0.1:2/"]


def test_subscriber_sees_existing_publisher(sim_master):
    pub = MasterClient(sim_master.uri, caller_id="/talker")
    pub.register_publisher("/map", "nav_msgs/OccupancyGrid", "http://127.0.0.1:1/")
    sub = MasterClient(sim_master.uri, caller_id="/listener")
    assert sub.register_subscriber("/map", "nav_msgs/OccupancyGrid", "http://127.0.0.1:2/") == [
        "http://127.0.0.1:1/"
    ]


def test_wildcard_type_accepted_and_not_stored(sim_master):
    sub = MasterClient(sim_master.uri, caller_id="/listener")
    sub.register_subscriber("/map", "*", "http://127.0.0.1:2/")
    assert sub.get_topic_types() == []
    pub = MasterClient(sim_master.uri, caller_id="/talker")
    pub.register_publisher("/map", "nav_msgs/OccupancyGrid", "http://127.0.0.1:1/")
    assert ("/map", "nav_msgs/OccupancyGrid") in pub.get_topic_types()


def test_unregister_idempotent(sim_master):
    client = MasterClient(sim_master.uri, caller_id="/talker")
    client.register_publisher("/a", "geometry_msgs/Twist", "http://127.0.0.1:1/")
    assert client.unregister_publisher("/a", "http://127.0.0.1:1/") == 1
    assert client.unregister_publisher("/a", "http://127.0.0.1:1/") == 0
    assert client.unregister_publisher("/never", "http://127.0.0.1:1/") == 0


def test_unreachable_master_fails_within_timeout():
    # grab a port and close it again: connection refused, no listener
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    client = MasterClient(f"http://127.0.0.1:{port}", timeout=1.0)
    t0 = time.monotonic()
    with pytest.raises(RpcTransportError):
        client.register_publisher("/a", "geometry_msgs/Twist", "http://127.0.0.1:1/")
    assert time.monotonic() - t0 < 2.0


# ---------------------------------------------------------------------------
# slave API server


class _Handlers:
    def __init__(self):
        self.updates = []

    def request_topic_rpc(self, caller_id, topic, protocols):
        if topic != "/served":
            return [0, f"topic not published: {topic}", []]
        for proto in protocols:
            if proto and proto[0] == "TCPROS":
                return [1, "ready", ["TCPROS", "127.0.0.1", 45555]]
        return [0, "no common protocol", []]

    def publisher_update_rpc(self, caller_id, topic, uris):
        self.updates.append((topic, list(uris)))
        return [1, "", 0]


@pytest.fixture
def slave():
    handlers = _Handlers()
    server = SlaveApiServer(handlers, advertised_host="127.0.0.1")
    yield server, handlers
    server.close()


def test_getpid_shape(slave):
    server, _ = slave
    import os

    pid = call_api(server.uri, "getPid", ("/caller",))
    assert pid == os.getpid()


def test_publisher_update_passthrough(slave):
    server, handlers = slave
    uris = ["http://127.0.0.1:1/", "http://127.0.0.1:2/"]
    call_api(server.uri, "publisherUpdate", ("/master", "/map", uris))
    assert handlers.updates == [("/map", uris)]


def test_request_topic_negotiation(slave):
    server, _ = slave
    host, port = request_topic(server.uri, "/me", "/served")
    assert (host, port) == ("127.0.0.1", 45555)
    with pytest.raises(RpcStatusError, match="not published"):
        request_topic(server.uri, "/me", "/unknown")
    with pytest.raises(RpcStatusError, match="no common protocol"):
        request_topic(server.uri, "/me", "/served", protocols=[["UDPROS"]])


def test_malformed_xml_gets_fault_and_server_survives(slave):
    server, _ = slave
    import http.client

    conn = http.client.HTTPConnection("127.0.0.1", server.port, timeout=2)
    conn.request("POST", "/", body="<not-xml", headers={"Content-Type": "text/xml"})
    response = conn.getresponse()
    body = response.read()
    conn.close()
    assert b"fault" in body or response.status >= 400
    # server still answers properly afterwards
    assert call_api(server.uri, "getPid", ("/x",)) > 0


# ---------------------------------------------------------------------------
# XML-RPC value round-trip (int, string, array as used by the master API)

xml_values = st.recursive(
    st.integers(-(2**31), 2**31 - 1) | st.booleans() | st.text(
        st.characters(blacklist_categories=("Cs", "Cc")), max_size=12
    ) | st.floats(allow_nan=False, allow_infinity=False),
    lambda children: st.lists(children, max_size=4),
    max_leaves=12,
)


@settings(max_examples=60, deadline=None)
@given(xml_values)
def test_xmlrpc_value_roundtrip(value):
    wire = xmlrpc.client.dumps((value,), methodresponse=True)
    (decoded,), _ = xmlrpc.client.loads(wire)
    assert decoded == value
