"""Closed-loop simulation of the landmark policy."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .environment import Deformation, EnvironmentModel, deform, is_sample_collision, visible_landmarks
from .geometry import as_point
from .runtime import TERMINAL, Policy, body_frame, limited_fov_control, unicycle_map, world_align
from .synthesis import Dynamics
from .tree import RoadmapTree

CSV_HEADER = "t,x,y,phi,edge_i,edge_j,ux,uy,landmark,event"


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimOptions:
    mode: str = "integrator"  # integrator | unicycle
    dt: float = 0.01
    max_time: float = 120.0
    epsilon: float = 0.1
    fov_half_angle: float | None = None  # radians; None means full view
    fov_range: float = math.inf
    speed_norm: float | None = 1.0
    deformation: Deformation | None = None
    dwell: float = 0.5
    alpha: float = 0.1
    beta: float = 0.5

    def __post_init__(self):
        if self.mode not in ("integrator", "unicycle"):
            raise SimulationError(f"unknown mode {self.mode!r}")
        if not self.dt > 0:
            raise SimulationError("dt must be positive")
        if not self.max_time > self.dt:
            raise SimulationError("max_time must exceed dt")
        if not self.epsilon > 0:
            raise SimulationError("epsilon must be positive")
        if self.fov_half_angle is not None and not 0 < self.fov_half_angle <= math.pi:
            raise SimulationError("fov half-angle must lie in (0, pi]")
        if self.speed_norm is not None and not self.speed_norm > 0:
            raise SimulationError("speed normalization must be positive")


def step(state, u, dt: float, mode: str, dyn: Dynamics | None = None) -> np.ndarray:
    """One RK4 step with the input held constant.

    integrator: state (x, y), x' = A x + B u.
    unicycle:   state (x, y, phi), u = (forward speed, turn rate).
    """
    s = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    if mode == "integrator":
        A = np.zeros((2, 2)) if dyn is None else dyn.A
        Bu = u if dyn is None else dyn.B @ u

        def f(x):
            return A @ x + Bu

    elif mode == "unicycle":
        v, w = float(u[0]), float(u[1])

        def f(x):
            return np.array([v * math.cos(x[2]), v * math.sin(x[2]), w])

    else:
        raise SimulationError(f"unknown mode {mode!r}")
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class Trajectory:
    rows: list = field(default_factory=list)  # dicts keyed by CSV column
    outcome: str = "running"  # success | timeout | collision | no-landmark
    mode: str = "integrator"

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    def positions(self) -> np.ndarray:
        return np.array([[r["x"], r["y"]] for r in self.rows])

    def path_length(self) -> float:
        p = self.positions()
        return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1))) if len(p) > 1 else 0.0

    @property
    def duration(self) -> float:
        return self.rows[-1]["t"] if self.rows else 0.0

    def to_csv(self, meta: str | None = None) -> str:
        from .artifacts import fmt_float

        out = io.StringIO()
        if meta:
            out.write(f"# {meta}\n")
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            phi = "" if r["phi"] is None else fmt_float(r["phi"])
            ei = "" if r["edge_i"] is None else str(r["edge_i"])
            ej = "" if r["edge_j"] is None else str(r["edge_j"])
            fields = [
                fmt_float(r["t"]),
                fmt_float(r["x"]),
                fmt_float(r["y"]),
                phi,
                ei,
                ej,
                fmt_float(r["ux"]),
                fmt_float(r["uy"]),
                r["landmark"] or "",
                "+".join(r["events"]),
            ]
            out.write(",".join(fields) + "\n")
        return out.getvalue()


def read_trajectory_csv(text: str) -> Trajectory:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0] != CSV_HEADER:
        raise SimulationError("not a trajectory CSV (header mismatch)")
    traj = Trajectory()
    for ln in lines[1:]:
        f = ln.split(",")
        if len(f) != 10:
            raise SimulationError(f"malformed trajectory row: {ln!r}")
        traj.rows.append(
            {
                "t": float(f[0]),
                "x": float(f[1]),
                "y": float(f[2]),
                "phi": float(f[3]) if f[3] else None,
                "edge_i": int(f[4]) if f[4] else None,
                "edge_j": int(f[5]) if f[5] else None,
                "ux": float(f[6]),
                "uy": float(f[7]),
                "landmark": f[8] or None,
                "events": f[9].split("+") if f[9] else [],
            }
        )
    for ev in ("success", "timeout", "collision", "no-landmark"):
        if traj.rows and ev in traj.rows[-1]["events"]:
            traj.outcome = ev
    if traj.rows and traj.rows[0]["phi"] is not None:
        traj.mode = "unicycle"
    return traj


def run_closed_loop(env: EnvironmentModel, tree: RoadmapTree, policy: Policy, landmark_ids, table: dict, start, opts: SimOptions, dyn: Dynamics | None = None, phi0: float | None = None) -> Trajectory:
    """Simulate from ``start`` until the root is reached, time runs out, the
    robot collides, or no landmark has been visible for ``opts.dwell``.

    ``table`` holds the planning-time landmark positions used for the bias
    term and the position estimate; sensing uses the (possibly deformed)
    ground truth.
    """
    truth = deform(env, opts.deformation) if opts.deformation is not None else env
    truth_table = truth.landmark_table()
    start = as_point(start)
    if is_sample_collision(truth, start):
        raise SimulationError(f"start {start.tolist()} is in collision")
    root = tree.nodes[tree.root]
    unicycle = opts.mode == "unicycle"
    if unicycle:
        if phi0 is None:
            d = root - start
            phi0 = math.atan2(d[1], d[0])
        state = np.array([start[0], start[1], phi0])
    else:
        state = start.copy()
    traj = Trajectory(mode=opts.mode)
    edge = None
    last_u = np.zeros(2)
    heading = phi0 if unicycle else None
    blind_since = None
    n_steps = int(math.floor(opts.max_time / opts.dt + 1e-9))
    for k in range(n_steps + 1):
        t = k * opts.dt
        pos = state[:2]
        events = ["start"] if k == 0 else []
        row = {"t": t, "x": float(pos[0]), "y": float(pos[1]), "phi": float(state[2]) if unicycle else None}

        def finish(outcome, edge_now, u, lid):
            ei, ej = _edge_fields(edge_now, tree.root)
            row.update(edge_i=ei, edge_j=ej, ux=float(u[0]), uy=float(u[1]), landmark=lid, events=events + [outcome])
            traj.rows.append(row)
            traj.outcome = outcome
            return traj

        if is_sample_collision(truth, pos):
            return finish("collision", edge, np.zeros(2), None)
        if float(np.linalg.norm(pos - root)) <= opts.epsilon:
            return finish("success", edge, np.zeros(2), None)
        if k == n_steps:
            return finish("timeout", edge, np.zeros(2), None)

        # sensing
        if opts.fov_half_angle is None:
            visible = visible_landmarks(truth, pos, 0.0, math.pi, opts.fov_range)
        else:
            if heading is None:
                target = tree.nodes[edge[1]] if isinstance(edge, tuple) else root
                d = target - pos
                heading = math.atan2(d[1], d[0])
            visible = visible_landmarks(truth, pos, heading, opts.fov_half_angle, opts.fov_range)
        visible = [lid for lid in visible if lid in table]
        lid = None
        if visible:
            blind_since = None
            lid = visible[0]
            y_world = truth_table[lid] - pos
            if unicycle:
                y_world = world_align(state[2], body_frame(state[2], y_world))
            x_hat = table[lid] - y_world
            new_edge = policy.update(edge, x_hat)
            if edge is not None and new_edge != edge:
                events.append("switch")
            edge = new_edge
            u = limited_fov_control(policy.gain(edge), landmark_ids, lid, y_world, table)
        else:
            if blind_since is None:
                blind_since = t
            if t - blind_since > opts.dwell + 1e-12:
                return finish("no-landmark", edge, np.zeros(2), None)
            events.append("blind")
            u = last_u
        ei, ej = _edge_fields(edge, tree.root)
        row.update(edge_i=ei, edge_j=ej, ux=float(u[0]), uy=float(u[1]), landmark=lid, events=events)
        traj.rows.append(row)
        last_u = u

        applied = u
        nu = float(np.linalg.norm(u))
        if opts.speed_norm is not None and nu > 1e-12:
            applied = opts.speed_norm * u / nu
        if unicycle:
            cmd = unicycle_map(applied, state[2], opts.alpha, opts.beta)
            state = step(state, cmd, opts.dt, "unicycle")
            heading = float(state[2])
        else:
            state = step(state, applied, opts.dt, "integrator", dyn)
            if nu > 1e-12:
                heading = math.atan2(u[1], u[0])
    return traj


def _edge_fields(edge, root):
    if edge is None:
        return None, None
    if edge == TERMINAL:
        return root, root
    return edge[0], edge[1]
