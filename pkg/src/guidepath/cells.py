"""Per-edge cells, exit directions and CBF cones built from collision samples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryError, Polytope2, cross2, facet_rows, oriented_angle
from .tree import RoadmapTree


class CellError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeCell:
    """Cell of edge (i, j): ``polytope`` is A_x x <= b_x. ``sources`` tags
    each row as ``node:<k>``, ``parent`` or ``bound:<m>``."""

    edge: tuple
    polytope: Polytope2
    exit_dir: np.ndarray
    target: np.ndarray
    origin: np.ndarray
    sources: tuple = ()

    def lyapunov(self, x) -> float:
        return float(self.exit_dir @ (np.asarray(x, dtype=float) - self.target))


@dataclass(frozen=True)
class CbfCone:
    """Safe set {x : A x + b > 0}; zero, one or two rows."""

    A: np.ndarray
    b: np.ndarray
    supports: tuple = field(default=())
    sides: tuple = field(default=())  # +1 for the counterclockwise side, -1 otherwise

    def __len__(self) -> int:
        return len(self.b)

    def h(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) + self.b


def _edge_points(tree: RoadmapTree, edge):
    i, j = edge
    if tree.parent.get(i) != j:
        raise CellError(f"edge ({i}, {j}): {j} is not the parent of {i}")
    xi, xj = tree.nodes[i], tree.nodes[j]
    if not np.any(xi != xj):
        raise CellError(f"edge ({i}, {j}): coincident nodes")
    return xi, xj


def exit_direction(tree: RoadmapTree, edge) -> np.ndarray:
    """Unit vector pointing from the parent x_j toward the child x_i."""
    xi, xj = _edge_points(tree, edge)
    d = xi - xj
    return d / np.linalg.norm(d)


def lyapunov_value(z, target, x) -> float:
    return float(np.asarray(z) @ (np.asarray(x, dtype=float) - np.asarray(target)))


def build_cell(tree: RoadmapTree, edge, bounds: Polytope2, reduce: bool = True) -> EdgeCell:
    """Voronoi-like cell of node i: bisectors against every node except the
    parent, the face through x_j orthogonal to the edge, and the bounds.

    With ``reduce`` only the rows that support an edge of the cell are kept;
    the set itself is unchanged.
    """
    i, j = edge
    xi, xj = _edge_points(tree, edge)
    others = [k for k in tree.nodes if k not in (i, j)]
    # nearest nodes first so clipping shrinks the polygon early
    others.sort(key=lambda k: (float(np.sum((tree.nodes[k] - xi) ** 2)), k))
    rows, offs, src = [], [], []
    dj = xj - xi
    lj = float(np.linalg.norm(dj))
    rows.append(dj / lj)
    offs.append(float(dj @ xi) / lj + lj)
    src.append("parent")
    for k in others:
        dk = tree.nodes[k] - xi
        lk = float(np.linalg.norm(dk))
        if lk == 0.0:
            raise CellError(f"edge ({i}, {j}): node {k} coincides with node {i}, cell has empty interior")
        rows.append(dk / lk)
        offs.append(float(dk @ xi) / lk + lk / 2.0)
        src.append(f"node:{k}")
    for m in range(len(bounds)):
        rows.append(bounds.A[m])
        offs.append(float(bounds.b[m]))
        src.append(f"bound:{m}")
    poly = Polytope2.from_rows(rows, offs)
    interior = float(np.min(poly.slack(xi)))
    if not interior > 1e-12:
        raise CellError(f"edge ({i}, {j}): cell has empty interior (slack {interior:.3g} at node {i})")
    if reduce:
        try:
            keep = facet_rows(poly)
        except GeometryError as exc:
            raise CellError(f"edge ({i}, {j}): {exc}") from None
        poly = Polytope2.from_rows(poly.A[keep], poly.b[keep])
        src = [src[k] for k in keep]
    z = -dj / lj
    return EdgeCell((i, j), poly, z, xj.copy(), xi.copy(), tuple(src))


def build_cbf_cone(tree: RoadmapTree, edge, samples, apex: str = "node") -> CbfCone:
    """Cone of at most two halfplanes through the apex and the nearest
    collision sample on each side of the edge.

    ``apex='node'`` puts the apex at x_i; ``apex='parent'`` at x_j, in which
    case rows are signed so that x_i is inside and x_j lies on the boundary.
    """
    if apex not in ("node", "parent"):
        raise ValueError(f"unknown cone apex {apex!r}")
    i, j = edge
    xi, xj = _edge_points(tree, edge)
    d = xj - xi
    dd = float(d @ d)
    ld = dd**0.5
    best = {1: None, -1: None}  # side -> (perp, |theta|, index, point)
    for idx, o in enumerate(samples):
        o = np.asarray(o, dtype=float)
        s = float((o - xi) @ d) / dd
        if s < 0.0 or s > 1.0:
            continue
        perp = cross2(d, o - xi) / ld
        if abs(perp) <= 1e-12 * max(1.0, ld):
            raise CellError(f"edge ({i}, {j}): collision sample {o.tolist()} lies on the edge")
        theta = oriented_angle(d, o - xi)
        side = 1 if theta > 0 else -1
        key = (abs(perp), abs(theta), idx)
        if best[side] is None or key < best[side][:3]:
            best[side] = key + (o,)
    a_pt, inside = (xi, xj) if apex == "node" else (xj, xi)
    A, b, sup, sides = [], [], [], []
    for side in (1, -1):
        if best[side] is None:
            continue
        o = best[side][3]
        t = o - a_pt
        n = np.array([-t[1], t[0]]) / np.linalg.norm(t)
        off = -float(n @ a_pt)
        if float(n @ inside) + off < 0:
            n, off = -n, -off
        margin = float(n @ inside) + off
        if not margin >= 1e-6:
            raise CellError(f"edge ({i}, {j}): cone row through {o.tolist()} leaves the target on its boundary")
        A.append(n)
        b.append(off)
        sup.append(o.copy())
        sides.append(side)
    return CbfCone(np.array(A, dtype=float).reshape(-1, 2), np.array(b, dtype=float), tuple(sup), tuple(sides))
