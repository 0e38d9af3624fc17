"""Explicit environment model: bounds, obstacles, landmarks, deformations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import TOL, GeometryError, Polytope2, as_point, cross2, polygon_area, rotation


class EnvError(ValueError):
    """Malformed environment or invalid deformation."""


@dataclass(frozen=True)
class Circle:
    center: np.ndarray
    radius: float
    group: str | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise EnvError(f"circle radius must be positive, got {self.radius}")

    def contains(self, p, tol=TOL) -> bool:
        return float(np.linalg.norm(as_point(p) - self.center)) <= self.radius + tol

    def hits_segment(self, p, q, tol=TOL) -> bool:
        p, q = as_point(p), as_point(q)
        d = q - p
        dd = float(d @ d)
        t = 0.0 if dd == 0.0 else min(1.0, max(0.0, float((self.center - p) @ d) / dd))
        e = p + t * d - self.center
        return math.hypot(e[0], e[1]) <= self.radius + tol

    def anchor(self) -> np.ndarray:
        return self.center

    def area(self) -> float:
        return math.pi * self.radius**2

    def transformed(self, fn, scale) -> "Circle":
        return Circle(fn(self.center), self.radius * scale, self.group)


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: np.ndarray
    group: str | None = None

    def __post_init__(self):
        v = self.vertices
        if len(v) < 3:
            raise EnvError("polygon obstacle needs at least 3 vertices")
        for k in range(len(v)):
            e1 = v[(k + 1) % len(v)] - v[k]
            e2 = v[(k + 2) % len(v)] - v[(k + 1) % len(v)]
            if cross2(e1, e2) <= 0:
                raise EnvError("polygon obstacle must be convex and counterclockwise")

    def contains(self, p, tol=TOL) -> bool:
        p = as_point(p)
        v = self.vertices
        for k in range(len(v)):
            e = v[(k + 1) % len(v)] - v[k]
            if cross2(e, p - v[k]) < -tol * float(np.linalg.norm(e)):
                return False
        return True

    def hits_segment(self, p, q, tol=TOL) -> bool:
        # separating axis test between two closed convex sets
        p, q = as_point(p), as_point(q)
        v = self.vertices
        seg = np.vstack([p, q])
        axes = []
        for k in range(len(v)):
            e = v[(k + 1) % len(v)] - v[k]
            axes.append(np.array([e[1], -e[0]]))
        d = q - p
        if d.any():
            axes.append(np.array([-d[1], d[0]]))
        for ax in axes:
            ax = ax / np.linalg.norm(ax)
            a, b = v @ ax, seg @ ax
            if a.max() < b.min() - tol or b.max() < a.min() - tol:
                return False
        return True

    def anchor(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def area(self) -> float:
        return polygon_area(self.vertices)

    def transformed(self, fn, scale) -> "ConvexPolygon":
        return ConvexPolygon(np.array([fn(x) for x in self.vertices]), self.group)


@dataclass(frozen=True)
class Landmark:
    id: str
    position: np.ndarray
    group: str | None = None


@dataclass(frozen=True)
class EnvironmentModel:
    bounds: Polytope2
    obstacles: tuple
    landmarks: tuple
    seed: int = 0

    def __post_init__(self):
        if not self.landmarks:
            raise EnvError("at least one landmark is required")
        ids = [lm.id for lm in self.landmarks]
        if len(set(ids)) != len(ids):
            raise EnvError("landmark ids must be unique")
        try:
            self.bounds.vertices()
        except GeometryError as exc:
            raise EnvError(f"bounds must be a bounded nonempty polytope: {exc}") from None
        for lm in self.landmarks:
            if not self.bounds.contains(lm.position):
                raise EnvError(f"landmark {lm.id} lies outside the bounds")

    def landmark(self, lid: str) -> Landmark:
        for lm in self.landmarks:
            if lm.id == lid:
                return lm
        raise KeyError(lid)

    def landmark_table(self) -> dict:
        return {lm.id: lm.position for lm in self.landmarks}

    def free_area(self) -> float:
        # obstacles assumed disjoint and inside the bounds
        return self.bounds.area() - sum(o.area() for o in self.obstacles)


def is_sample_collision(env: EnvironmentModel, p) -> bool:
    p = as_point(p)
    if not env.bounds.contains(p):
        return True
    return any(o.contains(p) for o in env.obstacles)


def is_edge_collision(env: EnvironmentModel, p, q) -> bool:
    p, q = as_point(p), as_point(q)
    # bounds are convex, so the segment is inside iff both ends are
    if not (env.bounds.contains(p) and env.bounds.contains(q)):
        return True
    return any(o.hits_segment(p, q) for o in env.obstacles)


# -- deformations ---------------------------------------------------------


@dataclass(frozen=True)
class GroupTransform:
    rotation: float = 0.0
    translation: tuple = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise EnvError("deformation scale must be positive")


@dataclass(frozen=True)
class Deformation:
    """Rigid(+scale) motion per named obstacle group, applied about the
    group centroid; attached landmarks move with their group."""

    groups: dict = field(default_factory=dict)

    def inverse(self) -> "Deformation":
        return Deformation(
            {
                g: GroupTransform(-t.rotation, tuple(-np.asarray(t.translation, float)), 1.0 / t.scale)
                for g, t in self.groups.items()
            }
        )

    @staticmethod
    def from_dict(d: dict) -> "Deformation":
        out = {}
        for g, spec in d.get("groups", d).items():
            extra = set(spec) - {"rotation", "rotation_deg", "translation", "scale"}
            if extra:
                raise EnvError(f"unknown deformation fields {sorted(extra)}")
            rot = spec.get("rotation", math.radians(spec.get("rotation_deg", 0.0)))
            out[g] = GroupTransform(float(rot), tuple(spec.get("translation", (0.0, 0.0))), float(spec.get("scale", 1.0)))
        return Deformation(out)


def group_centroid(env: EnvironmentModel, group: str) -> np.ndarray:
    members = [o.anchor() for o in env.obstacles if o.group == group]
    if not members:
        raise EnvError(f"deformation group {group!r} has no obstacles")
    return np.mean(members, axis=0)


def deform(env: EnvironmentModel, d: Deformation) -> EnvironmentModel:
    obstacles = list(env.obstacles)
    landmarks = list(env.landmarks)
    for g, t in d.groups.items():
        pivot = group_centroid(env, g)
        R = rotation(t.rotation)
        shift = np.asarray(t.translation, dtype=float)

        def fn(x, pivot=pivot, R=R, s=t.scale, shift=shift):
            return pivot + s * (R @ (np.asarray(x, float) - pivot)) + shift

        obstacles = [o.transformed(fn, t.scale) if o.group == g else o for o in obstacles]
        landmarks = [replace(lm, position=fn(lm.position)) if lm.group == g else lm for lm in landmarks]
    for lm in landmarks:
        if not env.bounds.contains(lm.position):
            raise EnvError(f"deformed landmark {lm.id} leaves the bounds")
    return EnvironmentModel(env.bounds, tuple(obstacles), tuple(landmarks), env.seed)


# -- sensing --------------------------------------------------------------


def visible_landmarks(env: EnvironmentModel, position, heading: float, fov_half_angle: float, range_: float = math.inf) -> list:
    """Ids of landmarks inside the closed sensing sector, nearest first."""
    if not 0 < fov_half_angle <= math.pi:
        raise ValueError("fov_half_angle must lie in (0, pi]")
    p = as_point(position)
    out = []
    for lm in env.landmarks:
        d = lm.position - p
        dist = float(np.linalg.norm(d))
        if dist > range_:
            continue
        if dist > 0 and fov_half_angle < math.pi:
            bearing = math.atan2(d[1], d[0]) - heading
            bearing = math.atan2(math.sin(bearing), math.cos(bearing))
            if abs(bearing) > fov_half_angle + 1e-12:
                continue
        out.append((dist, lm.id))
    out.sort()
    return [lid for _, lid in out]


# -- file format ----------------------------------------------------------

_TOP_FIELDS = {"bounds", "obstacles", "landmarks", "seed"}


def _check_fields(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise EnvError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise EnvError(f"{where}: unknown fields {sorted(extra)}")


def environment_from_dict(d: dict) -> EnvironmentModel:
    _check_fields(d, _TOP_FIELDS, "environment")
    missing = {"bounds", "obstacles", "landmarks"} - set(d)
    if missing:
        raise EnvError(f"environment: missing fields {sorted(missing)}")
    rows = []
    for k, h in enumerate(d["bounds"]):
        _check_fields(h, {"normal", "offset"}, f"bounds[{k}]")
        rows.append((h["normal"], h["offset"]))
    try:
        bounds = Polytope2.from_rows([r[0] for r in rows], [r[1] for r in rows])
    except GeometryError as exc:
        raise EnvError(f"bounds: {exc}") from None
    obstacles = []
    for k, o in enumerate(d["obstacles"]):
        _check_fields(o, {"type", "params", "group"}, f"obstacles[{k}]")
        kind, params = o.get("type"), o.get("params", {})
        if kind == "circle":
            _check_fields(params, {"center", "radius"}, f"obstacles[{k}].params")
            obstacles.append(Circle(as_point(params["center"]), float(params["radius"]), o.get("group")))
        elif kind == "polygon":
            _check_fields(params, {"vertices"}, f"obstacles[{k}].params")
            obstacles.append(ConvexPolygon(np.asarray(params["vertices"], dtype=float), o.get("group")))
        else:
            raise EnvError(f"obstacles[{k}]: unknown type {kind!r}")
    landmarks = []
    for k, lm in enumerate(d["landmarks"]):
        _check_fields(lm, {"id", "pos", "group"}, f"landmarks[{k}]")
        landmarks.append(Landmark(str(lm["id"]), as_point(lm["pos"]), lm.get("group")))
    groups = {o.group for o in obstacles if o.group is not None}
    for lm in landmarks:
        if lm.group is not None and lm.group not in groups:
            raise EnvError(f"landmark {lm.id} attached to unknown group {lm.group!r}")
    return EnvironmentModel(bounds, tuple(obstacles), tuple(landmarks), int(d.get("seed", 0)))


def environment_to_dict(env: EnvironmentModel) -> dict:
    obs = []
    for o in env.obstacles:
        if isinstance(o, Circle):
            item = {"type": "circle", "params": {"center": o.center.tolist(), "radius": o.radius}}
        else:
            item = {"type": "polygon", "params": {"vertices": o.vertices.tolist()}}
        if o.group is not None:
            item["group"] = o.group
        obs.append(item)
    lms = []
    for lm in env.landmarks:
        item = {"id": lm.id, "pos": lm.position.tolist()}
        if lm.group is not None:
            item["group"] = lm.group
        lms.append(item)
    return {
        "bounds": [{"normal": a.tolist(), "offset": float(c)} for a, c in zip(env.bounds.A, env.bounds.b)],
        "obstacles": obs,
        "landmarks": lms,
        "seed": env.seed,
    }


def load_environment(path) -> EnvironmentModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise EnvError(f"{path}: invalid JSON ({exc})") from None
    return environment_from_dict(data)
