"""Command line: plan, synthesize, simulate, render, report.

Exit codes: 0 success, 1 a simulated run failed, 2 input error,
3 synthesis infeasible, 4 artifact mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import ArtifactError, check_inputs, dumps, file_sha256, gains_from_dict, gains_to_dict, provenance, read_json
from .demo import DEFORMATIONS, PRESET_STARTS, write_demo_environment
from .environment import Deformation, EnvError, deform, is_sample_collision, load_environment
from .geometry import GeometryError
from .lp import LpError
from .pipeline import default_root, plan, simulate, synthesize
from .render import render_figure, render_svg
from .rrt import PlannerError, PlannerParams
from .simplify import SimplifyError
from .simulator import SimOptions, SimulationError, read_trajectory_csv
from .synthesis import SynthesisError, SynthesisParams, verify_gains
from .tree import TreeError, tree_from_dict, tree_to_dict

EXIT_OK, EXIT_RUN_FAILED, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_MISMATCH = 0, 1, 2, 3, 4


class InputError(ValueError):
    pass


def _point(text: str, sizes=(2,)) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None
    if len(vals) not in sizes:
        raise InputError(f"expected {' or '.join(map(str, sizes))} numbers, got {text!r}")
    return np.array(vals)


def _out_path(args, name: str) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _load_tree(path):
    doc = read_json(path)
    return tree_from_dict(doc), doc


def _deformation(spec: str | None):
    if spec is None:
        return None
    if spec in DEFORMATIONS:
        return DEFORMATIONS[spec]
    p = Path(spec)
    if not p.exists():
        raise InputError(f"unknown deformation {spec!r} (presets: {', '.join(sorted(DEFORMATIONS))})")
    return Deformation.from_dict(read_json(p))


# -- subcommands ------------------------------------------------------------


def cmd_plan(args) -> int:
    env = load_environment(args.env)
    root = _point(args.root) if args.root else default_root(env)
    params = PlannerParams(args.max_itr, args.eta, args.gamma)
    stats = {}
    raw, simp = plan(env, root, params, args.seed, args.leaf_mode, stats)
    meta = {
        "provenance": provenance(env=args.env),
        "params": {"max_itr": args.max_itr, "eta": args.eta, "gamma_override": args.gamma, "seed": env.seed if args.seed is None else args.seed},
    }
    raw_doc = dict(tree_to_dict(raw), **meta)
    simp_doc = dict(tree_to_dict(simp), **meta, simplify={"leaf_mode": args.leaf_mode, "passes": stats.get("passes")})
    _out_path(args, "raw_tree.json").write_text(dumps(raw_doc))
    _out_path(args, "simplified_tree.json").write_text(dumps(simp_doc))
    print(f"raw_nodes,{len(raw)}")
    print(f"simplified_nodes,{len(simp)}")
    print(f"collision_samples,{len(raw.collision_samples)}")
    return EXIT_OK


def _synth_params(args) -> SynthesisParams:
    w_h = tuple(float(v) for v in args.w_h.split(","))
    return SynthesisParams(
        c_v=args.c_v,
        c_h=args.c_h,
        w_V=args.w_v,
        w_h=w_h,
        u_max=args.u_max,
        input_sides=args.input_sides,
        relax=args.relax,
        cone_apex=args.cone_apex,
    )


def reverify(bundle) -> list:
    """Re-run the vertex check for every edge of a loaded gains bundle;
    returns the edges that fail."""
    p = bundle.params
    sp = SynthesisParams(c_v=p["c_v"], c_h=p["c_h"], w_V=p["w_V"], w_h=tuple(p["w_h"]), relax=p["relax"])
    A_u = np.asarray(p["input_A"], float).reshape(-1, bundle.dynamics.m)
    b_u = np.asarray(p["input_b"], float)
    L = bundle.landmark_stack
    return [e for e, g in sorted(bundle.gains.items()) if not verify_gains(g.cell, g.cone, g, bundle.dynamics, L, sp, A_u, b_u)["pass"]]


def cmd_synthesize(args) -> int:
    env = load_environment(args.env)
    tree, tree_doc = _load_tree(args.tree)
    if "provenance" in tree_doc:  # hand-written trees carry no hashes
        check_inputs(tree_doc, env=args.env)
    if args.verify_only:
        doc = read_json(args.verify_only)
        check_inputs(doc, env=args.env, tree=args.tree)
        bundle = gains_from_dict(doc)
        bad = reverify(bundle)
        print(f"edges,{len(bundle.gains)}")
        print(f"verified,{len(bundle.gains) - len(bad)}")
        for e in bad:
            print(f"failed,{e[0]}-{e[1]}")
        return EXIT_OK if not bad else EXIT_INFEASIBLE
    params = _synth_params(args)
    try:
        bundle = synthesize(tree, env, params=params, threads=args.threads)
    except SynthesisError as exc:
        print(str(exc), file=sys.stderr)
        for edge, _ in exc.failures:
            print(f"infeasible,{edge[0]}-{edge[1]}")
        return EXIT_INFEASIBLE
    bundle.params["epsilon"] = args.epsilon
    bundle.provenance = provenance(env=args.env, tree=args.tree)
    out = Path(args.out) if args.out else _out_path(args, "gains.json")
    out.write_text(dumps(gains_to_dict(bundle)))
    sv = [g.S_V for g in bundle.gains.values()]
    print(f"edges,{len(bundle.gains)}")
    print(f"verified,{sum(g.verified for g in bundle.gains.values())}")
    print(f"worst_S_V,{max(sv):.6g}")
    if bundle.relaxed:
        print("warning,relaxed synthesis output is not a safety certificate", file=sys.stderr)
    return EXIT_OK


def _starts(args):
    starts = []
    for s in args.start or []:
        p = _point(s, (2, 3))
        starts.append((p[:2], float(p[2]) if len(p) == 3 else None))
    if args.preset is not None:
        idx = range(len(PRESET_STARTS)) if args.preset == "all" else [int(args.preset)]
        for k in idx:
            if not 0 <= k < len(PRESET_STARTS):
                raise InputError(f"preset index must be 0..{len(PRESET_STARTS) - 1}")
            starts.append((np.array(PRESET_STARTS[k], float), None))
    if not starts:
        raise InputError("give at least one --start or --preset")
    return starts


def _sim_options(args, bundle) -> SimOptions:
    eps = args.epsilon if args.epsilon is not None else float(bundle.params.get("epsilon", 0.1))
    fov = None if args.fov in (None, "full") else math.radians(float(args.fov))
    speed = None if args.speed == "none" else float(args.speed)
    return SimOptions(
        mode=args.mode,
        dt=args.dt,
        max_time=args.max_time,
        epsilon=eps,
        fov_half_angle=fov,
        fov_range=args.fov_range,
        speed_norm=speed,
        deformation=_deformation(args.deform),
        dwell=args.dwell,
        alpha=args.alpha,
        beta=args.beta,
    )


def cmd_simulate(args) -> int:
    env = load_environment(args.env)
    tree, _ = _load_tree(args.tree)
    doc = read_json(args.gains)
    check_inputs(doc, env=args.env, tree=args.tree)
    bundle = gains_from_dict(doc)
    opts = _sim_options(args, bundle)
    starts = _starts(args)
    truth = deform(env, opts.deformation) if opts.deformation is not None else env
    for p, _ in starts:
        if is_sample_collision(truth, p):
            raise InputError(f"start {p.tolist()} is in collision")
    meta = f"guidepath {__version__} gains={file_sha256(args.gains)} mode={opts.mode} deform={args.deform or 'none'}"
    failed = 0
    print("run,start_x,start_y,outcome,time,path_length,file")
    for k, (p, phi) in enumerate(starts):
        try:
            traj = simulate(env, tree, bundle, p, opts, phi)
        except SimulationError as exc:
            raise InputError(str(exc)) from None
        if args.out and len(starts) == 1:
            path = Path(args.out)
        else:
            path = _out_path(args, f"trajectory_{k}.csv")
        path.write_text(traj.to_csv(meta))
        failed += not traj.success
        print(f"{k},{p[0]:.6g},{p[1]:.6g},{traj.outcome},{traj.duration:.2f},{traj.path_length():.4f},{path}")
    return EXIT_OK if failed == 0 else EXIT_RUN_FAILED


def cmd_render(args) -> int:
    env = load_environment(args.env)
    d = _deformation(args.deform)
    if d is not None:
        env = deform(env, d)
    tree = _load_tree(args.tree)[0] if args.tree else None
    trajs = [read_trajectory_csv(Path(p).read_text()) for p in args.trajectory or []]
    out = Path(args.out) if args.out else _out_path(args, "map.svg")
    out.write_text(render_svg(env, tree, trajs, args.title))
    print(f"svg,{out}")
    if args.figure:
        render_figure(args.figure, env, tree, trajs, args.title)
        print(f"figure,{args.figure}")
    return EXIT_OK


def cmd_report(args) -> int:
    """Full pipeline on one environment: artifacts, a delimited summary
    and figures, all inside --out-dir."""
    env_path = Path(args.env)
    env = load_environment(env_path)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = {}
    raw, simp = plan(env, default_root(env), PlannerParams(args.max_itr, args.eta), args.seed, "median", stats)
    meta = {"provenance": provenance(env=env_path), "params": {"max_itr": args.max_itr, "eta": args.eta, "gamma_override": None, "seed": env.seed if args.seed is None else args.seed}}
    (out / "raw_tree.json").write_text(dumps(dict(tree_to_dict(raw), **meta)))
    tree_path = out / "simplified_tree.json"
    tree_path.write_text(dumps(dict(tree_to_dict(simp), **meta, simplify={"leaf_mode": "median", "passes": stats.get("passes")})))
    simp = _load_tree(tree_path)[0]  # same rounding as the separate stages
    try:
        bundle = synthesize(simp, env, threads=args.threads)
    except SynthesisError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    bundle.params["epsilon"] = 0.1
    bundle.provenance = provenance(env=env_path, tree=tree_path)
    gains_path = out / "gains.json"
    gains_path.write_text(dumps(gains_to_dict(bundle)))
    bundle = gains_from_dict(read_json(gains_path))
    starts = [np.array(s, float) for s in PRESET_STARTS]
    scenarios = [("original", None, "integrator", None), ("rotate30", "rotate30", "integrator", None), ("unicycle-fov30", None, "unicycle", math.radians(30.0))]
    if args.with_failure:
        scenarios.append(("collapse", "collapse", "integrator", None))
    rows = []
    failed = 0
    for name, dname, mode, fov in scenarios:
        opts = SimOptions(mode=mode, fov_half_angle=fov, deformation=DEFORMATIONS[dname] if dname else None)
        trajs = []
        for k, p in enumerate(starts):
            traj = simulate(env, simp, bundle, p, opts)
            (out / f"{name}_{k}.csv").write_text(traj.to_csv(f"guidepath {__version__} scenario={name}"))
            trajs.append(traj)
            rows.append([name, k, f"{p[0]:.6g}", f"{p[1]:.6g}", traj.outcome, f"{traj.duration:.2f}", f"{traj.path_length():.4f}"])
            if name != "collapse":
                failed += not traj.success
        shown = deform(env, DEFORMATIONS[dname]) if dname else env
        (out / f"{name}.svg").write_text(render_svg(shown, simp, trajs, name))
        render_figure(out / f"{name}.png", shown, simp, trajs, name)
    render_figure(out / "tree.png", env, simp, (), f"simplified tree ({len(simp)} of {len(raw)} nodes)")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "start", "start_x", "start_y", "outcome", "time", "path_length"])
    w.writerows(rows)
    (out / "summary.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK if failed == 0 else EXIT_RUN_FAILED


def cmd_demo_env(args) -> int:
    out = Path(args.out) if args.out else _out_path(args, "demo_env.json")
    write_demo_environment(out)
    print(f"env,{out}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for written artifacts (default: .)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: the environment's seed)")

    p = argparse.ArgumentParser(prog="guidepath", description="Landmark-guided roadmap planning and controller synthesis.")
    p.add_argument("--version", action="version", version=f"guidepath {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", parents=[common], help="build and simplify the roadmap tree")
    sp.add_argument("--env", required=True, help="environment JSON")
    sp.add_argument("--max-itr", type=int, default=1000, help="RRT* iterations (default: 1000)")
    sp.add_argument("--eta", type=float, default=60.0, help="steering step cap (default: 60)")
    sp.add_argument("--gamma", type=float, default=None, help="override the near-radius prefactor")
    sp.add_argument("--root", default=None, help="goal x,y (default: centre of the bounds)")
    sp.add_argument("--leaf-mode", choices=("median", "extremes"), default="median", help="which sibling leaves survive leaf cutting")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("synthesize", parents=[common], help="solve the per-edge robust LPs")
    sp.add_argument("--env", required=True, help="environment JSON")
    sp.add_argument("--tree", required=True, help="simplified tree JSON")
    sp.add_argument("--c-v", type=float, default=1.0, help="Lyapunov decay rate")
    sp.add_argument("--c-h", type=float, default=1.0, help="barrier decay rate")
    sp.add_argument("--w-v", type=float, default=1.0, help="objective weight of the Lyapunov margin")
    sp.add_argument("--w-h", default="1,1", help="objective weights of the two barrier margins")
    sp.add_argument("--u-max", type=float, default=None, help="input bound radius (default: bounds diagonal)")
    sp.add_argument("--input-sides", type=int, default=16, help="sides of the polygonal input set; 4 gives a box")
    sp.add_argument("--epsilon", type=float, default=0.1, help="switching radius stored for simulation")
    sp.add_argument("--cone-apex", choices=("node", "parent"), default="node", help="where the barrier cone rows pass through")
    sp.add_argument("--relax", action="store_true", help="allow positive barrier margins (diagnosis only)")
    sp.add_argument("--threads", type=int, default=None, help="parallel solves (default: GUIDEPATH_THREADS or up to 4)")
    sp.add_argument("--verify-only", metavar="GAINS", default=None, help="re-check an existing gains file")
    sp.add_argument("--out", default=None, help="gains path (default: OUT_DIR/gains.json)")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("simulate", parents=[common], help="closed-loop runs")
    sp.add_argument("--env", required=True, help="environment JSON")
    sp.add_argument("--tree", required=True, help="simplified tree JSON")
    sp.add_argument("--gains", required=True, help="gains JSON from synthesize")
    sp.add_argument("--start", action="append", help="x,y or x,y,phi; repeatable")
    sp.add_argument("--preset", default=None, help="demo start index 0-3 or 'all'")
    sp.add_argument("--mode", choices=("integrator", "unicycle"), default="integrator", help="robot dynamics")
    sp.add_argument("--fov", default="full", help="half-angle in degrees, or 'full'")
    sp.add_argument("--fov-range", type=float, default=math.inf, help="sensing range (default: unlimited)")
    sp.add_argument("--deform", default=None, help="preset name or deformation JSON file")
    sp.add_argument("--speed", default="1.0", help="normalized speed, or 'none'")
    sp.add_argument("--max-time", type=float, default=120.0, help="timeout in simulated seconds")
    sp.add_argument("--dt", type=float, default=0.01, help="RK4 step")
    sp.add_argument("--epsilon", type=float, default=None, help="switching radius (default: the value in the gains file)")
    sp.add_argument("--dwell", type=float, default=0.5, help="seconds without a visible landmark before giving up")
    sp.add_argument("--alpha", type=float, default=0.1, help="unicycle forward gain")
    sp.add_argument("--beta", type=float, default=0.5, help="unicycle turning gain")
    sp.add_argument("--out", default=None, help="CSV path for a single run")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("render", parents=[common], help="draw environment, tree and trajectories")
    sp.add_argument("--env", required=True, help="environment JSON")
    sp.add_argument("--tree", default=None, help="tree JSON to draw")
    sp.add_argument("--trajectory", action="append", help="trajectory CSV; repeatable")
    sp.add_argument("--deform", default=None, help="draw the environment under this deformation")
    sp.add_argument("--title", default=None, help="figure title")
    sp.add_argument("--out", default=None, help="SVG path (default: OUT_DIR/map.svg)")
    sp.add_argument("--figure", default=None, help="also write a matplotlib figure (PNG, PDF, ...)")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("report", parents=[common], help="run the whole pipeline and write summary.csv plus figures")
    sp.add_argument("--env", required=True, help="environment JSON")
    sp.add_argument("--max-itr", type=int, default=1000, help="RRT* iterations (default: 1000)")
    sp.add_argument("--eta", type=float, default=60.0, help="steering step cap (default: 60)")
    sp.add_argument("--threads", type=int, default=None, help="parallel solves")
    sp.add_argument("--with-failure", action="store_true", help="also run the collapse deformation")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("demo-env", parents=[common], help="write the demo environment file")
    sp.add_argument("--out", default=None, help="file path (default: OUT_DIR/demo_env.json)")
    sp.set_defaults(func=cmd_demo_env)
    return p


COORD_FLAGS = ("--start", "--root")


def _glue_negative_coords(argv):
    """Let '--start -4.3,2' through: argparse reads a leading '-' as an option."""
    out = list(argv)
    for k in range(len(out) - 1):
        if out[k] in COORD_FLAGS and re.match(r"-\.?\d", out[k + 1]):
            out[k : k + 2] = [f"{out[k]}={out[k + 1]}", ""]
    return [a for a in out if a != ""]


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_negative_coords(argv))
    try:
        return args.func(args)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH if "hash" in str(exc) or "does not match" in str(exc) else EXIT_INPUT
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, EnvError, TreeError, PlannerError, SimplifyError, GeometryError, SimulationError, LpError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
