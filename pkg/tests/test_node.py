"""Node lifecycle tests over live sockets against the embedded master."""

import threading
import time

import pytest

from rosdeck import messages as M
from rosdeck.master import RpcTransportError, call_api
from rosdeck.node import NodeError, NodeHandle
from rosdeck.sim.master import SimMaster


class Collector:
    def __init__(self):
        self.items = []
        self.event = threading.Event()
        self._lock = threading.Lock()

    def __call__(self, value):
        with self._lock:
            self.items.append(value)
        self.event.set()

    def wait_for(self, count, timeout=3.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if len(self.items) >= count:
                    return True
            time.sleep(0.01)
        return False


def test_advertise_registers_at_master(sim_master, node_factory):
    node = node_factory("/talker")
    node.advertise("/cmd_vel", "geometry_msgs/Twist")
    pubs, _, _ = node.master.get_system_state()
    assert ["/cmd_vel", ["/talker"]] in pubs


def test_duplicate_advertise_rejected(sim_master, node_factory):
    node = node_factory("/talker")
    pub = node.advertise("/cmd_vel", "geometry_msgs/Twist")
    with pytest.raises(NodeError, match="already advertising"):
        node.advertise("/cmd_vel", "geometry_msgs/Twist")
    assert pub.publish(M.Twist()) == 0  # original publication unaffected


def test_advertise_unknown_type(sim_master, node_factory):
    node = node_factory("/talker")
    with pytest.raises(M.UnknownTypeError):
        node.advertise("/x", "foo/Bar")


def test_publish_without_subscribers_returns_zero(sim_master, node_factory):
    pub = node_factory("/talker").advertise("/cmd_vel", "geometry_msgs/Twist")
    assert pub.publish(M.Twist()) == 0


def test_publish_nan_rejected_before_any_write(sim_master, node_factory):
    pub_node = node_factory("/talker")
    sub_node = node_factory("/listener")
    seen = Collector()
    sub_node.subscribe("/cmd_vel", "geometry_msgs/Twist", seen)
    pub = pub_node.advertise("/cmd_vel", "geometry_msgs/Twist")
    time.sleep(0.3)  # allow the stream to connect
    with pytest.raises(M.SerializationError):
        pub.publish(M.Twist(linear=M.Vector3(x=float("nan"))))
    pub.publish(M.Twist(linear=M.Vector3(x=1.0)))
    assert seen.wait_for(1)
    assert [v.linear.x for v in seen.items] == [1.0]


def test_delivery_and_order_preserved(sim_master, node_factory):
    pub_node = node_factory("/talker")
    sub_node = node_factory("/listener")
    seen = Collector()
    sub_node.subscribe("/seq", "std_msgs/Header", seen)
    pub = pub_node.advertise("/seq", "std_msgs/Header")
    deadline = time.monotonic() + 3
    while pub.num_subscribers == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    assert pub.num_subscribers == 1
    for i in range(30):
        pub.publish(M.Header(seq=i))
    assert seen.wait_for(30)
    seqs = [h.seq for h in seen.items]
    assert seqs == sorted(seqs) == list(range(30))


def test_subscribe_latched_map_delivers_within_a_second(sim_master, node_factory):
    pub_node = node_factory("/mapper")
    grid = M.OccupancyGrid(
        header=M.Header(seq=7),
        # resolution exactly representable in float32 so round-trip compares equal
        info=M.MapMetaData(resolution=0.25, width=2, height=2),
        data=bytes([0xFF, 0, 100, 50]),
    )
    pub = pub_node.advertise("/map", "nav_msgs/OccupancyGrid", latched=True)
    pub.publish(grid)

    sub_node = node_factory("/viewer")
    seen = Collector()
    t0 = time.monotonic()
    sub_node.subscribe("/map", "nav_msgs/OccupancyGrid", seen)
    assert seen.event.wait(1.0), "latched grid not delivered within 1 s"
    assert time.monotonic() - t0 < 1.0
    assert seen.items[0] == grid


def test_subscribe_no_publishers_gets_no_callbacks(sim_master, node_factory):
    node = node_factory("/listener")
    seen = Collector()
    node.subscribe("/silence", "geometry_msgs/Twist", seen)
    time.sleep(0.3)
    assert seen.items == []


def test_late_publisher_reaches_subscriber(sim_master, node_factory):
    sub_node = node_factory("/listener")
    seen = Collector()
    sub_node.subscribe("/late", "geometry_msgs/Twist", seen)
    pub_node = node_factory("/talker")
    t0 = time.monotonic()
    pub = pub_node.advertise("/late", "geometry_msgs/Twist", latched=True)
    pub.publish(M.Twist(linear=M.Vector3(x=2.0)))
    assert seen.event.wait(1.0), "publisherUpdate path took more than 1 s"
    assert time.monotonic() - t0 < 1.0
    assert seen.items[0].linear.x == 2.0


def test_identical_publisher_update_is_idempotent(sim_master, node_factory):
    sub_node = node_factory("/listener")
    pub_node = node_factory("/talker")
    seen = Collector()
    sub = sub_node.subscribe("/idem", "geometry_msgs/Twist", seen)
    pub_node.advertise("/idem", "geometry_msgs/Twist")
    deadline = time.monotonic() + 2
    while not sub.connected_publishers and time.monotonic() < deadline:
        time.sleep(0.01)
    uris = sub.connected_publishers
    assert len(uris) == 1
    # replay the same list straight into the slave API
    call_api(sub_node.slave_uri, "publisherUpdate", ("/master", "/idem", uris))
    time.sleep(0.3)
    assert sub.connected_publishers == uris


def test_update_for_unsubscribed_topic_ignored(sim_master, node_factory):
    node = node_factory("/listener")
    code, _, _ = [1, "", 0]
    result = call_api(node.slave_uri, "publisherUpdate", ("/master", "/nope", ["http://x:1/"]))
    assert result == 0  # accepted and dropped


def test_publisher_death_leaves_subscriber_healthy(sim_master, node_factory):
    sub_node = node_factory("/listener")
    seen = Collector()
    sub = sub_node.subscribe("/flaky", "geometry_msgs/Twist", seen)

    victim = NodeHandle(sim_master.uri, name="/victim")
    pub = victim.advertise("/flaky", "geometry_msgs/Twist")
    deadline = time.monotonic() + 2
    while pub.num_subscribers == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    pub.publish(M.Twist(linear=M.Vector3(x=1.0)))
    assert seen.wait_for(1)
    victim.shutdown()  # publisher dies

    deadline = time.monotonic() + 2
    while sub.connected_publishers and time.monotonic() < deadline:
        time.sleep(0.01)
    assert sub.connected_publishers == []

    # a fresh publisher still reaches the same subscription
    pub2 = node_factory("/talker2").advertise("/flaky", "geometry_msgs/Twist", latched=True)
    pub2.publish(M.Twist(linear=M.Vector3(x=3.0)))
    assert seen.wait_for(2)
    assert seen.items[-1].linear.x == 3.0


def test_no_callback_after_close(sim_master, node_factory):
    sub_node = node_factory("/listener")
    pub_node = node_factory("/talker")
    seen = Collector()
    sub = sub_node.subscribe("/gone", "geometry_msgs/Twist", seen)
    pub = pub_node.advertise("/gone", "geometry_msgs/Twist")
    deadline = time.monotonic() + 2
    while pub.num_subscribers == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    sub.close()
    count = len(seen.items)
    pub.publish(M.Twist())
    time.sleep(0.3)
    assert len(seen.items) == count


def test_concurrent_publishes_never_interleave_frames(sim_master, node_factory):
    pub_node = node_factory("/talker")
    sub_node = node_factory("/listener")
    seen = Collector()
    sub_node.subscribe("/burst", "std_msgs/Header", seen)
    pub = pub_node.advertise("/burst", "std_msgs/Header")
    deadline = time.monotonic() + 2
    while pub.num_subscribers == 0 and time.monotonic() < deadline:
        time.sleep(0.01)

    # distinct frame_id lengths per thread make spliced frames undecodable
    def blast(thread_id):
        for i in range(100):
            pub.publish(M.Header(seq=i, frame_id=f"writer-{thread_id}" * (thread_id + 1)))

    threads = [threading.Thread(target=blast, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert seen.wait_for(400, timeout=5), f"only {len(seen.items)} of 400 frames arrived"
    # every frame decoded cleanly; per-writer order preserved
    per_writer = {}
    for header in seen.items:
        writer = header.frame_id
        assert writer.startswith("writer-")
        per_writer.setdefault(writer, []).append(header.seq)
    for seqs in per_writer.values():
        assert seqs == sorted(seqs)


def test_shutdown_clears_registrations_and_is_idempotent(sim_master):
    node = NodeHandle(sim_master.uri, name="/ephemeral")
    node.advertise("/a", "geometry_msgs/Twist")
    node.subscribe("/b", "geometry_msgs/Twist", lambda v: None)
    node.shutdown()
    pubs, subs, _ = sim_master.registry.system_state()
    assert pubs == [] and subs == []
    node.shutdown()  # double shutdown is a no-op


def test_shutdown_completes_with_master_down():
    master = SimMaster()
    node = NodeHandle(master.uri, name="/orphan")
    node.advertise("/a", "geometry_msgs/Twist")
    master.close()
    node.shutdown()  # must not raise despite unreachable master


def test_node_name_must_be_global(sim_master):
    with pytest.raises(NodeError):
        NodeHandle(sim_master.uri, name="relative")


def test_connect_failure_unregisters(sim_master, node_factory):
    node = node_factory("/talker")
    with pytest.raises(RpcTransportError):
        bad = NodeHandle("http://127.0.0.1:1", name="/unlucky", rpc_timeout=0.5)
        try:
            bad.advertise("/x", "geometry_msgs/Twist")
        finally:
            bad.shutdown()
