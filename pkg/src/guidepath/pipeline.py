"""Stage functions shared by the command line and the tests:
plan -> synthesize -> simulate, each working on in-memory objects."""

from __future__ import annotations

import numpy as np

from .artifacts import GainsBundle
from .environment import EnvironmentModel
from .rrt import PlannerParams, build_rrt
from .runtime import Policy
from .simplify import simplify
from .simulator import SimOptions, Trajectory, run_closed_loop
from .synthesis import Dynamics, SynthesisParams, landmark_stack, synthesize_all, terminal_gains
from .tree import RoadmapTree


def default_root(env: EnvironmentModel) -> np.ndarray:
    xmin, xmax, ymin, ymax = env.bounds.bounding_box()
    return np.array([(xmin + xmax) / 2.0, (ymin + ymax) / 2.0])


def plan(env: EnvironmentModel, root=None, params: PlannerParams = PlannerParams(), seed: int | None = None, leaf_mode: str = "median", stats: dict | None = None):
    """Raw RRT* tree rooted at the goal and its simplification."""
    root = default_root(env) if root is None else np.asarray(root, dtype=float)
    raw = build_rrt(env, root, params, seed)
    return raw, simplify(raw, env, leaf_mode=leaf_mode, stats=stats)


def synthesize(tree: RoadmapTree, env: EnvironmentModel, dyn: Dynamics | None = None, params: SynthesisParams = SynthesisParams(), threads: int | None = None) -> GainsBundle:
    dyn = Dynamics.single_integrator() if dyn is None else dyn
    gains = synthesize_all(tree, env, dyn, params, threads)
    ids, L = landmark_stack(env)
    term = terminal_gains(L, tree.nodes[tree.root], params.c_v, dyn.m)
    A_u, b_u = params.input_polytope(env, dyn.m)
    pdict = {
        "c_v": params.c_v,
        "c_h": params.c_h,
        "w_V": params.w_V,
        "w_h": list(params.w_h),
        "input_A": A_u,
        "input_b": b_u,
        "relax": params.relax,
        "cone_apex": params.cone_apex,
    }
    table = env.landmark_table()
    return GainsBundle(dyn, pdict, ids, {k: table[k] for k in ids}, gains, term, tree.root, params.relax)


def make_policy(tree: RoadmapTree, bundle: GainsBundle, epsilon: float) -> Policy:
    return Policy(tree, bundle.K_map(), bundle.cells(), bundle.terminal_K, epsilon)


def simulate(env: EnvironmentModel, tree: RoadmapTree, bundle: GainsBundle, start, opts: SimOptions = SimOptions(), phi0: float | None = None) -> Trajectory:
    policy = make_policy(tree, bundle, opts.epsilon)
    return run_closed_loop(env, tree, policy, bundle.landmark_ids, bundle.landmark_table, start, opts, bundle.dynamics, phi0)
