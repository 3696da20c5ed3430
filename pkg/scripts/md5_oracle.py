#!/usr/bin/env python3
"""Independent md5 oracle for the supported message set.

Recomputes every checksum from scratch: its own copies of the definition
texts, its own parser, its own assembly of the md5 text (comments and blank
lines stripped, constants first as "type name=value", builtin fields as
"type name" with brackets kept, embedded message fields as "<md5> name",
newline-joined with no trailing newline). Shares no code with the library so
the two can only agree by both being right.

Usage: python scripts/md5_oracle.py [type ...]   (default: all types)
"""

import hashlib
import re
import sys

DEFINITIONS = {
    "std_msgs/Header": """\
uint32 seq
time stamp
string frame_id""",
    "geometry_msgs/Vector3": """\
float64 x
float64 y
float64 z""",
    "geometry_msgs/Point": """\
float64 x
float64 y
float64 z""",
    "geometry_msgs/Quaternion": """\
float64 x
float64 y
float64 z
float64 w""",
    "geometry_msgs/Pose": """\
Point position
Quaternion orientation""",
    "geometry_msgs/PoseWithCovariance": """\
Pose pose
float64[36] covariance""",
    "geometry_msgs/Twist": """\
Vector3 linear
Vector3 angular""",
    "geometry_msgs/TwistWithCovariance": """\
Twist twist
float64[36] covariance""",
    "nav_msgs/MapMetaData": """\
time map_load_time
float32 resolution
uint32 width
uint32 height
geometry_msgs/Pose origin""",
    "nav_msgs/OccupancyGrid": """\
Header header
MapMetaData info
int8[] data""",
    "nav_msgs/Odometry": """\
Header header
string child_frame_id
geometry_msgs/PoseWithCovariance pose
geometry_msgs/TwistWithCovariance twist""",
    "rosgraph_msgs/Log": """\
byte DEBUG=1
byte INFO=2
byte WARN=4
byte ERROR=8
byte FATAL=16
Header header
byte level
string name
string msg
string file
string function
uint32 line
string[] topics""",
}

BUILTINS = {
    "bool", "int8", "uint8", "byte", "char", "int16", "uint16", "int32",
    "uint32", "int64", "uint64", "float32", "float64", "string", "time",
    "duration",
}


def resolve(token, package):
    if token in BUILTINS:
        return token
    if token == "Header":
        return "std_msgs/Header"
    if "/" in token:
        return token
    return package + "/" + token


def md5_of(type_name, cache={}):
    if type_name in cache:
        return cache[type_name]
    package = type_name.split("/")[0]
    constants, fields = [], []
    for raw in DEFINITIONS[type_name].splitlines():
        line = raw.split("#")[0].strip()
        if not line:
            continue
        type_token, rest = line.split(None, 1)
        if "=" in rest:
            name, value = rest.split("=", 1)
            constants.append(f"{type_token} {name.strip()}={value.strip()}")
        else:
            base, suffix = re.match(r"([\w/]+)(\[\d*\])?$", type_token).groups()
            resolved = resolve(base, package)
            if resolved in BUILTINS:
                fields.append(f"{base}{suffix or ''} {rest}")
            else:
                fields.append(f"{md5_of(resolved)} {rest}")
    text = "\n".join(constants + fields)
    digest = hashlib.md5(text.encode()).hexdigest()
    cache[type_name] = digest
    return digest


def main(argv):
    names = argv[1:] or sorted(DEFINITIONS)
    for name in names:
        print(f"{md5_of(name)}  {name}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
