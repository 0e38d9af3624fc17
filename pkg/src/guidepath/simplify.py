"""Roadmap simplification: post-processing rewiring, crossing removal and
leaf cutting, iterated until the tree stops changing."""

from __future__ import annotations

import heapq

import numpy as np

from .environment import EnvironmentModel, is_edge_collision
from .geometry import oriented_angle, segment_intersection
from .tree import RoadmapTree


class SimplifyError(RuntimeError):
    pass


def post_process_rewiring(tree: RoadmapTree, env: EnvironmentModel) -> RoadmapTree:
    """Breadth-first from the root, hop each node up to its grandparent for
    as long as the direct edge is collision-free, no longer than the
    two-edge detour, and crosses no more edges than the edge it replaces.

    The last condition keeps rewiring from undoing crossing splits along
    collinear chains, which would otherwise bring the crossings back.
    """
    t = tree.copy()
    pos = t.nodes
    order = tree.bfs_order()
    slot = {c: n for n, c in enumerate(order)}
    P1 = np.array([pos[c] for c in order])
    P2 = np.array([pos[t.parent[c]] if t.parent[c] is not None else pos[c] for c in order])

    def crossings(s, a, b):
        mask = _crossing_candidates(P1, P2, a, b)
        mask[s] = False
        return sum(1 for o in np.nonzero(mask)[0] if segment_intersection(a, b, P1[o], P2[o]) is not None)

    for node in order:
        s = slot[node]
        while True:
            p = t.parent[node]
            if p is None:
                break
            g = t.parent[p]
            if g is None:
                break
            direct = float(np.linalg.norm(pos[node] - pos[g]))
            detour = float(np.linalg.norm(pos[node] - pos[p])) + float(np.linalg.norm(pos[p] - pos[g]))
            if direct > detour + 1e-12 or is_edge_collision(env, pos[node], pos[g]):
                break
            if crossings(s, pos[node], pos[g]) > crossings(s, pos[node], pos[p]):
                break
            t.parent[node] = g
            P2[s] = pos[g]
    return t


def _crossing_candidates(P1, P2, q1, q2, tol=1e-9):
    """Vectorized proper-crossing screen of segment q1-q2 against rows of
    (P1, P2); exact confirmation is left to segment_intersection."""

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    d1 = orient(q1, q2, P1)
    d2 = orient(q1, q2, P2)
    d3 = orient(P1, P2, q1)
    d4 = orient(P1, P2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def find_crossing(tree: RoadmapTree):
    """First properly crossing edge pair in lexicographic child-id order."""
    edges = tree.edges()
    if len(edges) < 2:
        return None
    P1 = np.array([tree.nodes[c] for c, _ in edges])
    P2 = np.array([tree.nodes[p] for _, p in edges])
    for a in range(len(edges) - 1):
        mask = _crossing_candidates(P1[a + 1 :], P2[a + 1 :], P1[a], P2[a])
        for off in np.nonzero(mask)[0]:
            b = a + 1 + int(off)
            k = segment_intersection(P1[a], P2[a], P1[b], P2[b])
            if k is not None:
                return edges[a], edges[b], k
    return None


def count_crossings(tree: RoadmapTree) -> int:
    edges = tree.edges()
    n = 0
    for a in range(len(edges)):
        for b in range(a + 1, len(edges)):
            (i, j), (p, q) = edges[a], edges[b]
            if segment_intersection(tree.nodes[i], tree.nodes[j], tree.nodes[p], tree.nodes[q]) is not None:
                n += 1
    return n


def _path_cost(nodes, parent, node) -> float:
    total = 0.0
    while parent[node] is not None:
        p = parent[node]
        total += float(np.linalg.norm(nodes[node] - nodes[p]))
        node = p
    return total


def remove_crossing(tree: RoadmapTree) -> RoadmapTree:
    """Split properly crossing edges at their intersection until none remain.

    Crossings are resolved in lexicographic order of the two edges' child
    ids. Only edges touched by a split are rescanned, so the result equals
    that of repeatedly rescanning the whole tree.
    """
    t = tree.copy()
    nodes, parent = t.nodes, t.parent
    cap = 2 * len(nodes) + 16
    ids = np.full(cap, -1, dtype=np.int64)  # slot -> child id of a live edge
    P1 = np.zeros((cap, 2))
    P2 = np.zeros((cap, 2))
    slot_of = {}
    heap = []

    def grow():
        nonlocal ids, P1, P2, cap
        cap *= 2
        ids = np.concatenate([ids, np.full(cap - len(ids), -1, dtype=np.int64)])
        P1 = np.vstack([P1, np.zeros((cap - len(P1), 2))])
        P2 = np.vstack([P2, np.zeros((cap - len(P2), 2))])

    def scan(c):
        # push every crossing between edge c and the other live edges
        s = slot_of[c]
        live = ids >= 0
        live[s] = False
        mask = live & _crossing_candidates(P1, P2, P1[s], P2[s])
        for o in np.nonzero(mask)[0]:
            other = int(ids[o])
            if segment_intersection(P1[s], P2[s], P1[o], P2[o]) is not None:
                heapq.heappush(heap, (min(c, other), max(c, other)))

    def place(c):
        if c not in slot_of:
            free = np.nonzero(ids < 0)[0]
            if len(free) == 0:
                grow()
                free = np.nonzero(ids < 0)[0]
            slot_of[c] = int(free[0])
        s = slot_of[c]
        ids[s] = c
        P1[s] = nodes[c]
        P2[s] = nodes[parent[c]]

    for c, _ in t.edges():
        place(c)
    for c, _ in t.edges():
        s = slot_of[c]
        live = ids >= 0
        live[: s + 1] = False
        for o in np.nonzero(live & _crossing_candidates(P1, P2, P1[s], P2[s]))[0]:
            other = int(ids[o])
            if segment_intersection(P1[s], P2[s], P1[o], P2[o]) is not None:
                heapq.heappush(heap, (min(c, other), max(c, other)))

    while heap:
        a, b = heapq.heappop(heap)
        if heap and heap[0] == (a, b):
            continue
        i, p = a, b
        j, q = parent[i], parent[p]
        k = segment_intersection(nodes[i], nodes[j], nodes[p], nodes[q])
        if k is None:
            continue  # stale pair: one of the edges changed since it was queued
        cost_j = _path_cost(nodes, parent, j) + float(np.linalg.norm(k - nodes[j]))
        cost_q = _path_cost(nodes, parent, q) + float(np.linalg.norm(k - nodes[q]))
        via = j if cost_j < cost_q or (cost_j == cost_q and j <= q) else q
        new = max(nodes) + 1
        nodes[new] = np.asarray(k, dtype=float)
        parent[new] = via
        parent[i] = new
        parent[p] = new
        for c in (i, p, new):
            place(c)
        for c in (i, p, new):
            scan(c)
    return t


def cut_leaves(tree: RoadmapTree, mode: str = "median") -> RoadmapTree:
    """Prune sibling leaves, keeping the median-angle one (``mode='median'``)
    or the smallest- and largest-angle ones (``mode='extremes'``)."""
    if mode not in ("median", "extremes"):
        raise ValueError(f"unknown leaf mode {mode!r}")
    t = tree.copy()
    children = tree.children()
    leaves = tree.leaves()
    for node in sorted(tree.nodes):
        kids = [c for c in children[node] if c in leaves]
        if len(kids) < 2:
            continue
        p = tree.parent[node]
        base = np.array([1.0, 0.0]) if p is None else tree.nodes[node] - tree.nodes[p]
        ranked = sorted((oriented_angle(base, tree.nodes[c] - tree.nodes[node]), c) for c in kids)
        if mode == "median":
            keep = {ranked[(len(ranked) - 1) // 2][1]}
        else:
            keep = {ranked[0][1], ranked[-1][1]}
        for _, c in ranked:
            if c not in keep:
                del t.nodes[c]
                del t.parent[c]
    return t


def simplify(tree: RoadmapTree, env: EnvironmentModel, max_passes: int = 100, leaf_mode: str = "median", stats: dict | None = None) -> RoadmapTree:
    """Apply rewiring, crossing removal and leaf cutting until a full pass
    leaves the tree unchanged."""
    t = tree
    for n in range(1, max_passes + 1):
        before = (t.structure(), tuple(sorted(t.nodes)))
        t = cut_leaves(remove_crossing(post_process_rewiring(t, env)), leaf_mode)
        if (t.structure(), tuple(sorted(t.nodes))) == before:
            if stats is not None:
                stats["passes"] = n
            return t
    raise SimplifyError(
        f"simplification did not reach a fixpoint within {max_passes} passes "
        f"({len(t)} nodes, {count_crossings(t)} crossings left)"
    )
