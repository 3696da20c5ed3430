"""Shipped fixtures: the apartment floorplan and the demo dashboard config."""

from importlib.resources import files
from pathlib import Path


def apartment_floorplan_path() -> Path:
    return Path(str(files(__package__) / "apartment.txt"))


def demo_config_path() -> Path:
    return Path(str(files(__package__) / "apartment-demo.json"))


# Robot boot pose inside the shipped plan: a cell center in the living room,
# facing +x down a clear corridor.
APARTMENT_START = (1.05, 2.45, 0.0)
