"""Per-edge robust LP synthesis of landmark output-feedback gains.

The controller on an edge is u = K y with y the stacked displacements
l_k - x, which is affine in the state: u(x) = K L - K I x, where L stacks
the landmark positions and I stacks identity blocks. Every constraint has
the uniform shape

    c0 . x + w . u(x) <= rho0 + S     for all x in the cell,

and is made finite by dualizing the inner maximization over the cell.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cells import CbfCone, CellError, EdgeCell, build_cbf_cone, build_cell
from .environment import EnvironmentModel
from .geometry import polytope_vertices
from .lp import LinearProgram, LpError, solve_lp
from .tree import RoadmapTree

VERIFY_TOL = 1e-6


class SynthesisError(RuntimeError):
    """One or more edges have no feasible controller."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


@dataclass(frozen=True)
class Dynamics:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n:
            raise ValueError("A must be n x n and B n x m")
        if n != 2:
            raise ValueError("the planner works in the plane, so the state dimension must be 2")
        ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        if np.linalg.matrix_rank(ctrb) < n:
            raise ValueError("(A, B) is not controllable")

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @staticmethod
    def single_integrator() -> "Dynamics":
        return Dynamics(np.zeros((2, 2)), np.eye(2))


@dataclass(frozen=True)
class SynthesisParams:
    c_v: float = 1.0
    c_h: float = 1.0
    w_V: float = 1.0
    w_h: tuple = (1.0, 1.0)
    input_A: np.ndarray | None = None  # None: regular polygon around |u| <= u_max
    input_b: np.ndarray | None = None
    u_max: float | None = None  # None: diagonal of the bounds' bounding box
    input_sides: int = 16
    relax: bool = False
    cone_apex: str = "node"

    def __post_init__(self):
        for name in ("c_v", "c_h", "w_V"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if len(self.w_h) != 2 or not all(w > 0 for w in self.w_h):
            raise ValueError("w_h must be two positive weights")
        if self.u_max is not None and not self.u_max >= 0:
            raise ValueError("u_max must be nonnegative")
        if int(self.input_sides) != self.input_sides or self.input_sides < 3:
            raise ValueError("input_sides must be an integer >= 3")

    def input_polytope(self, env: EnvironmentModel, m: int):
        if self.input_A is not None:
            A = np.asarray(self.input_A, dtype=float).reshape(-1, m)
            b = np.asarray(self.input_b, dtype=float).reshape(-1)
            return A, b
        umax = self.u_max
        if umax is None:
            umax = default_u_max(env)
        return input_polygon(m, float(umax), self.input_sides)


def input_polygon(m: int, u_max: float, sides: int):
    """Regular polygon circumscribing the disk |u| <= u_max (a box when
    ``sides`` is 4 or the input is not planar)."""
    if m != 2 or sides == 4:
        return np.vstack([np.eye(m), -np.eye(m)]), np.full(2 * m, u_max)
    ang = 2.0 * np.pi * np.arange(sides) / sides
    return np.column_stack([np.cos(ang), np.sin(ang)]), np.full(sides, u_max)


def default_u_max(env: EnvironmentModel) -> float:
    xmin, xmax, ymin, ymax = env.bounds.bounding_box()
    return math.hypot(xmax - xmin, ymax - ymin)


@dataclass
class EdgeGains:
    edge: tuple
    K: np.ndarray  # m x (2 * n_landmarks)
    S_h: np.ndarray
    S_V: float
    landmark_ids: tuple
    cell: EdgeCell | None = None
    cone: CbfCone | None = None
    verified: bool = False
    report: dict = field(default_factory=dict)

    def affine(self, landmarks: np.ndarray):
        """(k0, G) with u(x) = k0 - G x, for stacked landmark vector ``landmarks``."""
        return affine_terms(self.K, landmarks)


def landmark_stack(env: EnvironmentModel):
    """Landmark ids in ascending order and their stacked positions."""
    ids = tuple(sorted(lm.id for lm in env.landmarks))
    table = env.landmark_table()
    return ids, np.concatenate([table[k] for k in ids])


def affine_terms(K: np.ndarray, L: np.ndarray):
    n_l = K.shape[1] // 2
    G = sum(K[:, 2 * k : 2 * k + 2] for k in range(n_l))
    return K @ L, G


@dataclass(frozen=True)
class RobustRow:
    kind: str  # clf | cbf | input
    c0: np.ndarray
    w: np.ndarray
    rho0: float
    margin: int | None  # index into the margin variables, or None


def robust_rows(cell: EdgeCell, cone: CbfCone, dyn: Dynamics, params: SynthesisParams, input_A, input_b) -> list:
    A, B = dyn.A, dyn.B
    rows = []
    z = cell.exit_dir
    if not np.any(np.abs(z @ B) > 1e-12):
        raise SynthesisError(f"edge {cell.edge}: relative degree violated (z B = 0)")
    rows.append(RobustRow("clf", A.T @ z + params.c_v * z, B.T @ z, params.c_v * float(z @ cell.target), 0))
    for r in range(len(cone)):
        a, b = cone.A[r], float(cone.b[r])
        if not np.any(np.abs(a @ B) > 1e-12):
            raise SynthesisError(f"edge {cell.edge}: relative degree violated (A_h B = 0)")
        rows.append(RobustRow("cbf", -(A.T @ a + params.c_h * a), -(B.T @ a), params.c_h * b, 1 + r))
    for r in range(len(input_b)):
        rows.append(RobustRow("input", np.zeros(2), input_A[r], float(input_b[r]), None))
    return rows


@dataclass
class RobustLp:
    lp: LinearProgram
    rows: list
    n_K: int
    n_margin: int
    n_cell: int


def assemble_robust_lp(cell: EdgeCell, cone: CbfCone, dyn: Dynamics, landmarks: np.ndarray, params: SynthesisParams, input_A, input_b) -> RobustLp:
    """Variables: K (row-major), S_V, S_h..., then one dual vector per
    robust row. Per row r with dual lam_r >= 0:

        A_x^T lam_r + G^T w_r           = c0_r
        b_x . lam_r + w_r . K L - S_r   <= rho0_r
    """
    m = dyn.m
    L = np.asarray(landmarks, dtype=float)
    nk = m * L.size
    n_l = L.size // 2
    rows = robust_rows(cell, cone, dyn, params, input_A, input_b)
    n_margin = 1 + len(cone)
    Ax, bx = cell.polytope.A, cell.polytope.b
    nc = len(bx)
    nvar = nk + n_margin + nc * len(rows)
    c = np.zeros(nvar)
    c[nk] = params.w_V
    for r in range(len(cone)):
        side = cone.sides[r] if cone.sides else (1 if r == 0 else -1)
        c[nk + 1 + r] = params.w_h[0 if side > 0 else 1]
    lb = np.full(nvar, -np.inf)
    ub = np.full(nvar, np.inf)
    ub[nk] = 0.0
    if not params.relax:
        ub[nk + 1 : nk + n_margin] = 0.0
    lb[nk + n_margin :] = 0.0
    A_eq = np.zeros((2 * len(rows), nvar))
    b_eq = np.zeros(2 * len(rows))
    A_in = np.zeros((len(rows), nvar))
    b_in = np.zeros(len(rows))
    for r, row in enumerate(rows):
        lam = slice(nk + n_margin + r * nc, nk + n_margin + (r + 1) * nc)
        for d in range(2):
            e = 2 * r + d
            A_eq[e, lam] = Ax[:, d]
            # (G^T w)_d = sum_a w_a sum_l K[a, 2l + d]
            for a in range(m):
                for l in range(n_l):
                    A_eq[e, a * L.size + 2 * l + d] += row.w[a]
            b_eq[e] = row.c0[d]
        A_in[r, lam] = bx
        for a in range(m):
            A_in[r, a * L.size : (a + 1) * L.size] += row.w[a] * L
        if row.margin is not None:
            A_in[r, nk + row.margin] = -1.0
        b_in[r] = row.rho0
    lp = LinearProgram(c, A_eq, b_eq, A_in, b_in, lb, ub)
    return RobustLp(lp, rows, nk, n_margin, nc)


def row_values(rows, K, landmarks, pts) -> np.ndarray:
    """Primal row values c0.x + w.u(x) - rho0, rows x points."""
    k0, G = affine_terms(K, landmarks)
    pts = np.atleast_2d(pts)
    U = k0[None, :] - pts @ G.T
    return np.array([pts @ row.c0 + U @ row.w - row.rho0 for row in rows])


def verify_gains(cell: EdgeCell, cone: CbfCone, gains: EdgeGains, dyn: Dynamics, landmarks, params: SynthesisParams, input_A, input_b) -> dict:
    """Evaluate every primal row at every cell vertex and compare the worst
    case with the row's certified margin."""
    verts = polytope_vertices(cell.polytope)
    rows = robust_rows(cell, cone, dyn, params, input_A, input_b)
    vals = row_values(rows, gains.K, landmarks, verts)
    margins = [gains.S_V] + [float(s) for s in gains.S_h]
    out = []
    ok = True
    for r, row in enumerate(rows):
        bound = 0.0 if row.margin is None else margins[row.margin]
        worst = float(vals[r].max())
        passed = worst <= bound + VERIFY_TOL
        ok &= passed
        out.append({"kind": row.kind, "worst": worst, "margin": bound, "pass": bool(passed)})
    return {"pass": bool(ok), "rows": out, "vertices": len(verts)}


def synthesize_edge_controller(cell: EdgeCell, cone: CbfCone, dyn: Dynamics, landmark_ids, landmarks, params: SynthesisParams, input_A, input_b) -> EdgeGains:
    prob = assemble_robust_lp(cell, cone, dyn, landmarks, params, input_A, input_b)
    sol = solve_lp(prob.lp)
    if sol.status != "optimal":
        raise SynthesisError(
            f"edge {cell.edge}: LP {sol.status} (cell rows {len(cell.polytope)}, "
            f"cone rows {len(cone)}, landmarks {len(landmark_ids)})",
            [(cell.edge, sol.status)],
        )
    v = sol.values
    K = v[: prob.n_K].reshape(dyn.m, -1)
    S_V = min(float(v[prob.n_K]), 0.0)
    S_h = v[prob.n_K + 1 : prob.n_K + prob.n_margin].copy()
    if not params.relax:
        S_h = np.minimum(S_h, 0.0)
    gains = EdgeGains(cell.edge, K, S_h, S_V, tuple(landmark_ids), cell, cone)
    gains.report = verify_gains(cell, cone, gains, dyn, landmarks, params, input_A, input_b)
    gains.verified = gains.report["pass"]
    return gains


def terminal_gains(landmarks: np.ndarray, root, c_v: float, m: int = 2) -> np.ndarray:
    """Minimum-norm K whose output-feedback law is u = c_v (root - x)."""
    L = np.asarray(landmarks, dtype=float)
    n_l = L.size // 2
    W = np.hstack([np.tile(np.eye(2), (n_l, 1)), L[:, None]])  # K W = [G | k0]
    R = np.hstack([c_v * np.eye(2), c_v * np.asarray(root, dtype=float)[:, None]])
    K = np.linalg.lstsq(W.T, R.T, rcond=None)[0].T
    if np.abs(K @ W - R).max() > 1e-9 * max(1.0, float(np.abs(R).max())):
        raise SynthesisError("the landmark layout cannot express the terminal pursuit law")
    return K


def thread_count() -> int:
    raw = os.environ.get("GUIDEPATH_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"GUIDEPATH_THREADS must be an integer, got {raw!r}") from None
    return min(4, os.cpu_count() or 1)


def synthesize_all(tree: RoadmapTree, env: EnvironmentModel, dyn: Dynamics, params: SynthesisParams, threads: int | None = None) -> dict:
    """Gains for every edge of the tree, keyed by (child, parent).

    Failures are collected across all edges and raised together.
    """
    ids, L = landmark_stack(env)
    input_A, input_b = params.input_polytope(env, dyn.m)

    def work(edge):
        try:
            cell = build_cell(tree, edge, env.bounds)
            cone = build_cbf_cone(tree, edge, tree.collision_samples, params.cone_apex)
            g = synthesize_edge_controller(cell, cone, dyn, ids, L, params, input_A, input_b)
        except (SynthesisError, CellError, LpError) as exc:
            msg = str(exc)
            return edge, None, msg if msg.startswith("edge") else f"edge {edge}: {msg}"
        if not g.verified:
            return edge, None, f"edge {edge}: gains failed vertex verification"
        return edge, g, None

    edges = tree.edges()
    n = thread_count() if threads is None else threads
    if n > 1 and len(edges) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(work, edges))
    else:
        results = [work(e) for e in edges]
    results.sort(key=lambda r: r[0])
    failures = [(e, msg) for e, g, msg in results if g is None]
    if failures:
        lines = "\n".join(f"  {msg}" for _, msg in failures)
        raise SynthesisError(f"{len(failures)} of {len(edges)} edges infeasible:\n{lines}", failures)
    return {e: g for e, g, _ in results}
