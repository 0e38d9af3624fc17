"""Static pictures of an environment, a roadmap and trajectories.

``render_svg`` writes a hand-built SVG whose bytes depend only on the
inputs. ``render_figure`` draws the same layers with matplotlib for a
quick raster view.
"""

from __future__ import annotations

import numpy as np

from .environment import Circle, EnvironmentModel
from .tree import RoadmapTree

SCALE = 60.0  # pixels per world unit
MARGIN = 20.0
TRAJ_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _n(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    def __init__(self, env: EnvironmentModel):
        xmin, xmax, ymin, ymax = env.bounds.bounding_box()
        self.xmin, self.ymax = xmin, ymax
        self.width = (xmax - xmin) * SCALE + 2 * MARGIN
        self.height = (ymax - ymin) * SCALE + 2 * MARGIN

    def pt(self, p):
        return MARGIN + (p[0] - self.xmin) * SCALE, MARGIN + (self.ymax - p[1]) * SCALE

    def fmt(self, p):
        x, y = self.pt(p)
        return f"{_n(x)},{_n(y)}"


def render_svg(env: EnvironmentModel, tree: RoadmapTree | None = None, trajectories=(), title: str | None = None) -> str:
    """SVG text with layered groups: bounds, obstacles, samples, tree,
    landmarks, trajectories. One path per tree edge and one polyline per
    trajectory with a point per trajectory row."""
    fr = _Frame(env)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(fr.width)}" height="{_n(fr.height)}" '
        f'viewBox="0 0 {_n(fr.width)} {_n(fr.height)}">',
    ]
    if title:
        out.append(f"<title>{_escape(title)}</title>")
    verts = env.bounds.vertices()
    out.append('<g id="bounds">')
    out.append(f'<polygon points="{" ".join(fr.fmt(v) for v in verts)}" fill="#ffffff" stroke="#000000" stroke-width="1"/>')
    out.append("</g>")
    out.append('<g id="obstacles">')
    for o in env.obstacles:
        if isinstance(o, Circle):
            cx, cy = fr.pt(o.center)
            out.append(f'<circle cx="{_n(cx)}" cy="{_n(cy)}" r="{_n(o.radius * SCALE)}" fill="#9aa5c4" stroke="#44506e"/>')
        else:
            out.append(f'<polygon points="{" ".join(fr.fmt(v) for v in o.vertices)}" fill="#9aa5c4" stroke="#44506e"/>')
    out.append("</g>")
    out.append('<g id="collision-samples">')
    if tree is not None:
        for s in tree.collision_samples:
            cx, cy = fr.pt(s)
            out.append(f'<circle cx="{_n(cx)}" cy="{_n(cy)}" r="1.5" fill="#e0b000"/>')
    out.append("</g>")
    out.append('<g id="tree">')
    if tree is not None:
        for c, p in tree.edges():
            out.append(f'<path id="edge-{c}-{p}" d="M{fr.fmt(tree.nodes[c])} L{fr.fmt(tree.nodes[p])}" stroke="#2a8a2a" stroke-width="1" fill="none"/>')
        cx, cy = fr.pt(tree.nodes[tree.root])
        out.append(f'<circle id="root" cx="{_n(cx)}" cy="{_n(cy)}" r="4" fill="#000000"/>')
    out.append("</g>")
    out.append('<g id="landmarks">')
    for lm in sorted(env.landmarks, key=lambda lm: lm.id):
        x, y = fr.pt(lm.position)
        out.append(f'<rect x="{_n(x - 3)}" y="{_n(y - 3)}" width="6" height="6" fill="#c03030"><title>{_escape(lm.id)}</title></rect>')
    out.append("</g>")
    out.append('<g id="trajectories">')
    for k, traj in enumerate(trajectories):
        pts = traj.positions()
        color = TRAJ_COLORS[k % len(TRAJ_COLORS)]
        out.append(f'<polyline id="trajectory-{k}" points="{" ".join(fr.fmt(p) for p in pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_figure(path, env: EnvironmentModel, tree: RoadmapTree | None = None, trajectories=(), title: str | None = None) -> None:
    """Raster figure of the same layers via matplotlib (format from suffix)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Circle as CirclePatch
    from matplotlib.patches import Polygon as PolygonPatch

    fig, ax = plt.subplots(figsize=(6, 6))
    verts = env.bounds.vertices()
    ax.add_patch(PolygonPatch(verts, closed=True, fill=False, edgecolor="black"))
    for o in env.obstacles:
        if isinstance(o, Circle):
            ax.add_patch(CirclePatch(o.center, o.radius, facecolor="#9aa5c4", edgecolor="#44506e"))
        else:
            ax.add_patch(PolygonPatch(o.vertices, closed=True, facecolor="#9aa5c4", edgecolor="#44506e"))
    if tree is not None:
        if tree.collision_samples:
            cs = np.array(tree.collision_samples)
            ax.plot(cs[:, 0], cs[:, 1], ".", color="#e0b000", ms=2)
        for c, p in tree.edges():
            a, b = tree.nodes[c], tree.nodes[p]
            ax.plot([a[0], b[0]], [a[1], b[1]], "-", color="#2a8a2a", lw=0.7)
        r = tree.nodes[tree.root]
        ax.plot(r[0], r[1], "ko", ms=5)
    lm = np.array([l.position for l in env.landmarks])
    ax.plot(lm[:, 0], lm[:, 1], "s", color="#c03030", ms=3)
    for k, traj in enumerate(trajectories):
        p = traj.positions()
        ax.plot(p[:, 0], p[:, 1], "-", color=TRAJ_COLORS[k % len(TRAJ_COLORS)], lw=1.5)
    xmin, xmax, ymin, ymax = env.bounds.bounding_box()
    pad = 0.02 * max(xmax - xmin, ymax - ymin)
    ax.set_xlim(xmin - pad, xmax + pad)
    ax.set_ylim(ymin - pad, ymax + pad)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
