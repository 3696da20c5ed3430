import logging

import pytest

from rosdeck.node import NodeHandle
from rosdeck.sim.master import SimMaster

logging.basicConfig(level=logging.WARNING)


@pytest.fixture
def sim_master():
    master = SimMaster()
    yield master
    master.close()


@pytest.fixture
def node_factory(sim_master):
    nodes = []

    def make(name: str) -> NodeHandle:
        node = NodeHandle(sim_master.uri, name=name)
        nodes.append(node)
        return node

    yield make
    for node in nodes:
        node.shutdown()
