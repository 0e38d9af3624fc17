"""Canonical demo world: five circular obstacles in a 10 m box with the goal
at the origin, plus the preset start points and deformation presets used by
the CLI and the acceptance suite.

The obstacle layout is a topological stand-in for the circle world of the
reference experiments, whose coordinates are not published.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from .environment import Deformation, EnvironmentModel, GroupTransform, environment_from_dict

ROOT = (0.0, 0.0)
HALF_WIDTH = 5.0

# (center, radius, group)
CIRCLES = [
    ((-2.2, -2.0), 1.0, "sw"),
    ((2.3, -1.9), 0.9, "se"),
    ((2.0, 2.2), 1.0, "ne"),
    ((-2.3, 2.0), 0.9, "nw"),
    ((0.0, -3.6), 0.8, "s"),
]

PRESET_STARTS = [
    (-4.3, -4.3),
    (4.3, -4.3),
    (4.3, 4.3),
    (-4.3, 4.3),
]

DEFORMATIONS = {
    # rigid motion of the north-east obstacle and its landmarks
    "rotate30": Deformation({"ne": GroupTransform(math.radians(30.0), (0.25, 0.15), 1.0)}),
    # pushes the south-east obstacle onto the roadmap; expected to fail
    "collapse": Deformation({"se": GroupTransform(math.radians(45.0), (-1.3, 0.9), 1.4)}),
}


def demo_environment_dict() -> dict:
    h = HALF_WIDTH
    bounds = [
        {"normal": [1.0, 0.0], "offset": h},
        {"normal": [-1.0, 0.0], "offset": h},
        {"normal": [0.0, 1.0], "offset": h},
        {"normal": [0.0, -1.0], "offset": h},
    ]
    obstacles = [
        {"type": "circle", "params": {"center": list(c), "radius": r}, "group": g} for c, r, g in CIRCLES
    ]
    landmarks = []
    wall = h - 0.1
    for k, s in enumerate((-4.0, -2.0, 0.0, 2.0, 4.0)):
        landmarks.append({"id": f"E{k}", "pos": [wall, s]})
        landmarks.append({"id": f"N{k}", "pos": [s, wall]})
        landmarks.append({"id": f"W{k}", "pos": [-wall, s]})
        landmarks.append({"id": f"S{k}", "pos": [s, -wall]})
    for c, r, g in CIRCLES:
        # two features on the obstacle surface, facing the goal and sideways
        cvec = np.asarray(c, dtype=float)
        toward = -cvec / np.linalg.norm(cvec)
        side = np.array([-toward[1], toward[0]])
        for tag, d in (("a", toward), ("b", side)):
            p = cvec + r * d
            landmarks.append({"id": f"{g.upper()}{tag}", "pos": [round(float(p[0]), 6), round(float(p[1]), 6)], "group": g})
    return {"bounds": bounds, "obstacles": obstacles, "landmarks": landmarks, "seed": 7}


def demo_environment() -> EnvironmentModel:
    return environment_from_dict(demo_environment_dict())


def demo_environment_path():
    return resources.files("guidepath") / "data" / "demo_env.json"


def write_demo_environment(path) -> None:
    with open(path, "w") as fh:
        json.dump(demo_environment_dict(), fh, indent=1)
        fh.write("\n")
