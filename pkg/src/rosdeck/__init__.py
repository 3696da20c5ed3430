"""rosdeck: remote control and monitoring suite for ROS1-operated mobile robots.

Layers, bottom to top:

- ``messages``   supported message set, wire format, md5 checksums
- ``transport``  TCPROS handshake and length-prefixed framing
- ``master``     XML-RPC master client and node-side slave API server
- ``node``       NodeHandle: advertise / subscribe / publish lifecycle
- ``config``     persisted dashboard configuration (master URI + widgets)
- ``gateway``    operator-facing service: widget semantics, HTTP + WebSocket
- ``sim``        embedded ROS master and differential-drive robot for tests
"""

__version__ = "0.1.0"
