"""Executing the piecewise-linear landmark policy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import as_point, rotation
from .tree import RoadmapTree

AT_ROOT = "at-root"
TERMINAL = "terminal"


def full_control(K: np.ndarray, y: np.ndarray) -> np.ndarray:
    """u = K y with y the stacked displacements l_k - x."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if K.shape[1] != y.size:
        raise ValueError(f"gain has {K.shape[1]} columns but y has {y.size} entries")
    return K @ y


def fov_bias(K: np.ndarray, landmark_ids, anchor: str, table: dict) -> np.ndarray:
    """Constant term sum_{j != i} K_j (l_j - l_i) for anchor landmark i."""
    if anchor not in table:
        raise KeyError(f"unknown landmark {anchor!r}")
    li = np.asarray(table[anchor], dtype=float)
    bias = np.zeros(K.shape[0])
    for k, lid in enumerate(landmark_ids):
        if lid == anchor:
            continue
        bias += K[:, 2 * k : 2 * k + 2] @ (np.asarray(table[lid], dtype=float) - li)
    return bias


def limited_fov_control(K: np.ndarray, landmark_ids, anchor: str, y_anchor, table: dict) -> np.ndarray:
    """Single-landmark form of u = K y: (sum_j K_j) y_i + bias_i."""
    K = np.asarray(K, dtype=float)
    if K.shape[1] != 2 * len(landmark_ids):
        raise ValueError("gain columns do not match the landmark stack")
    if anchor not in landmark_ids:
        raise KeyError(f"unknown landmark {anchor!r}")
    ksum = sum(K[:, 2 * k : 2 * k + 2] for k in range(len(landmark_ids)))
    return ksum @ as_point(y_anchor) + fov_bias(K, landmark_ids, anchor, table)


def active_edge(tree: RoadmapTree, x, epsilon: float):
    """Edge (i, parent(i)) of the nearest non-root node, or AT_ROOT when the
    root is the nearest node and within ``epsilon``. Distance ties go to the
    lower node id."""
    x = as_point(x)
    root = tree.root
    if float(np.linalg.norm(x - tree.nodes[root])) <= epsilon:
        d_root = float(np.linalg.norm(x - tree.nodes[root]))
        if all(float(np.linalg.norm(x - p)) >= d_root for k, p in tree.nodes.items() if k != root):
            return AT_ROOT
    best = None
    for k in sorted(tree.nodes):
        if k == root:
            continue
        d = float(np.linalg.norm(x - tree.nodes[k]))
        if best is None or d < best[0]:
            best = (d, k)
    if best is None:
        return AT_ROOT
    return (best[1], tree.parent[best[1]])


def should_switch(x, x_j, epsilon: float) -> bool:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return float(np.linalg.norm(as_point(x) - as_point(x_j))) <= epsilon


def unicycle_map(u, phi: float, alpha: float = 0.1, beta: float = 0.5):
    """Forward speed and turn rate steering the heading toward u."""
    u = as_point(u)
    nu = float(np.linalg.norm(u))
    if nu == 0.0:
        return 0.0, 0.0
    c, s = math.cos(phi), math.sin(phi)
    ux = alpha / nu * (c * u[0] + s * u[1])
    wz = beta / nu * (c * u[1] - s * u[0])
    return ux, wz


def world_align(phi: float, body) -> np.ndarray:
    """Rotate a body-frame displacement into the world frame."""
    return rotation(phi) @ as_point(body)


def body_frame(phi: float, world) -> np.ndarray:
    return rotation(phi).T @ as_point(world)


@dataclass
class ControlState:
    active_edge: object = None
    last_control: np.ndarray = field(default_factory=lambda: np.zeros(2))
    active_landmark: str | None = None


class Policy:
    """Edge bookkeeping for the switched controller.

    The robot follows edge (i, j) until its position estimate enters the
    epsilon-ball of x_j or crosses the exit face through x_j, then hands
    over to (j, parent(j)). An estimate outside the current cell falls back
    to the nearest-node edge. Past the last edge into the root a pursuit
    law toward the root takes over.
    """

    def __init__(self, tree: RoadmapTree, gains: dict, cells: dict, terminal_K: np.ndarray, epsilon: float):
        self.tree = tree
        self.gains = gains
        self.cells = cells
        self.terminal_K = terminal_K
        self.epsilon = epsilon

    def gain(self, edge) -> np.ndarray:
        return self.terminal_K if edge == TERMINAL else self.gains[edge]

    def _next(self, j):
        return TERMINAL if j == self.tree.root else (j, self.tree.parent[j])

    def update(self, edge, x_hat):
        if edge is None:
            edge = active_edge(self.tree, x_hat, self.epsilon)
            if edge == AT_ROOT:
                return TERMINAL
        seen = set()
        for _ in range(len(self.tree.nodes) + 1):
            if edge == TERMINAL:
                return edge
            seen.add(edge)
            i, j = edge
            cell = self.cells[edge]
            if should_switch(x_hat, cell.target, self.epsilon) or cell.lyapunov(x_hat) <= 0.0:
                edge = self._next(j)
                continue
            if not cell.polytope.contains(x_hat, tol=1e-9):
                nearest = active_edge(self.tree, x_hat, self.epsilon)
                if nearest == AT_ROOT:
                    return TERMINAL
                if nearest not in seen:
                    edge = nearest
                    continue
            return edge
        return edge
