"""RRT* that keeps the samples it rejects for being in collision."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import EnvironmentModel, is_edge_collision, is_sample_collision
from .geometry import as_point
from .tree import RoadmapTree


class PlannerError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerParams:
    max_itr: int = 1000
    eta: float = 60.0
    gamma_override: float | None = None

    def __post_init__(self):
        if int(self.max_itr) != self.max_itr or self.max_itr < 1:
            raise PlannerError("max_itr must be a positive integer")
        if not self.eta > 0:
            raise PlannerError("eta must be positive")
        if self.gamma_override is not None and not self.gamma_override > 0:
            raise PlannerError("gamma_override must be positive")


def gamma_star(d: int, free_area: float) -> float:
    return 2.0 * ((1.0 + 1.0 / d) * free_area / math.pi) ** (1.0 / d)


def near_radius(num_nodes: int, d: int, eta: float, free_area: float, gamma: float | None = None) -> float:
    """Connection radius min(gamma* (log|V|/|V|)^(1/(d+1)), eta)."""
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    if not free_area > 0:
        raise ValueError("free_area must be positive")
    g = gamma_star(d, free_area) if gamma is None else gamma
    return min(g * (math.log(num_nodes) / num_nodes) ** (1.0 / (d + 1)), eta)


def steer(frm, toward, eta: float) -> np.ndarray:
    frm, toward = as_point(frm), as_point(toward)
    delta = toward - frm
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        raise ValueError("steer: coincident points")
    if dist <= eta:
        return toward.copy()
    return frm + eta * delta / dist


def _sampler(env: EnvironmentModel, rng: np.random.Generator):
    xmin, xmax, ymin, ymax = env.bounds.bounding_box()

    def sample():
        while True:
            p = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])
            if env.bounds.contains(p, tol=0.0):
                return p

    return sample


def choose_parent(env, positions, costs, near_ids, nearest, x_new):
    """Cheapest collision-free connection among ``nearest`` and ``near_ids``."""
    best = nearest
    best_cost = costs[nearest] + float(np.linalg.norm(positions[nearest] - x_new))
    for k in near_ids:
        c = costs[k] + float(np.linalg.norm(positions[k] - x_new))
        if c < best_cost and not is_edge_collision(env, positions[k], x_new):
            best, best_cost = k, c
    return best, best_cost


def build_rrt(env: EnvironmentModel, start, params: PlannerParams, seed: int | None = None) -> RoadmapTree:
    start = as_point(start)
    if is_sample_collision(env, start):
        raise PlannerError(f"start {start.tolist()} is in collision")
    rng = np.random.default_rng(env.seed if seed is None else seed)
    sample = _sampler(env, rng)
    free_area = env.free_area()

    positions = {0: start.copy()}
    parent = {0: None}
    children = {0: set()}
    costs = {0: 0.0}
    pos_arr = np.empty((params.max_itr + 1, 2))
    pos_arr[0] = start
    n = 1
    collision_samples = []

    for _ in range(params.max_itr):
        x_rand = sample()
        if is_sample_collision(env, x_rand):
            collision_samples.append(x_rand)
            continue
        d2 = np.sum((pos_arr[:n] - x_rand) ** 2, axis=1)
        nearest = int(np.argmin(d2))  # first minimum = lowest id
        if d2[nearest] == 0.0:
            continue
        x_new = steer(positions[nearest], x_rand, params.eta)
        if is_edge_collision(env, positions[nearest], x_new):
            continue
        r = near_radius(n, 2, params.eta, free_area, params.gamma_override)
        dn = np.sqrt(np.sum((pos_arr[:n] - x_new) ** 2, axis=1))
        near_ids = [int(k) for k in np.nonzero(dn <= r)[0]]
        best, best_cost = choose_parent(env, positions, costs, near_ids, nearest, x_new)

        new = n
        positions[new] = x_new
        pos_arr[new] = x_new
        parent[new] = best
        children[new] = set()
        children[best].add(new)
        costs[new] = best_cost
        n += 1

        for k in near_ids:
            if k == best:
                continue
            c = best_cost + float(dn[k])
            if c < costs[k] and not is_edge_collision(env, x_new, positions[k]):
                children[parent[k]].discard(k)
                parent[k] = new
                children[new].add(k)
                delta = c - costs[k]
                stack = [k]
                while stack:
                    q = stack.pop()
                    costs[q] += delta
                    stack.extend(children[q])

    if n == 1:
        raise PlannerError("no collision-free sample was connected to the tree")
    return RoadmapTree(positions, parent, 0, collision_samples)
