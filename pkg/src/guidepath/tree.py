"""Roadmap tree value type and its JSON form."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class TreeError(ValueError):
    pass


@dataclass
class RoadmapTree:
    """Tree rooted at the goal; edges point from child to parent."""

    nodes: dict  # id -> np.ndarray(2)
    parent: dict  # id -> parent id or None
    root: int
    collision_samples: list = field(default_factory=list)

    def copy(self) -> "RoadmapTree":
        return RoadmapTree(
            {k: v.copy() for k, v in self.nodes.items()},
            dict(self.parent),
            self.root,
            [s.copy() for s in self.collision_samples],
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def edges(self) -> list:
        """(child, parent) pairs sorted by child id."""
        return [(c, p) for c, p in sorted(self.parent.items()) if p is not None]

    def children(self) -> dict:
        ch = {k: [] for k in self.nodes}
        for c, p in sorted(self.parent.items()):
            if p is not None:
                ch[p].append(c)
        return ch

    def leaves(self) -> set:
        ch = self.children()
        return {k for k, v in ch.items() if not v and k != self.root}

    def cost(self, node: int) -> float:
        total = 0.0
        seen = 0
        while self.parent[node] is not None:
            p = self.parent[node]
            total += float(np.linalg.norm(self.nodes[node] - self.nodes[p]))
            node = p
            seen += 1
            if seen > len(self.nodes):
                raise TreeError("cycle in parent map")
        return total

    def costs(self) -> dict:
        out = {self.root: 0.0}
        ch = self.children()
        queue = deque([self.root])
        while queue:
            k = queue.popleft()
            for c in ch[k]:
                out[c] = out[k] + float(np.linalg.norm(self.nodes[c] - self.nodes[k]))
                queue.append(c)
        if len(out) != len(self.nodes):
            raise TreeError("tree is disconnected or cyclic")
        return out

    def bfs_order(self) -> list:
        ch = self.children()
        order, queue = [], deque([self.root])
        while queue:
            k = queue.popleft()
            order.append(k)
            queue.extend(ch[k])
        return order

    def validate(self) -> None:
        roots = [k for k, p in self.parent.items() if p is None]
        if roots != [self.root]:
            raise TreeError(f"expected exactly one root {self.root}, found {roots}")
        if set(self.parent) != set(self.nodes):
            raise TreeError("parent map and node set disagree")
        for c, p in self.parent.items():
            if p is not None and p not in self.nodes:
                raise TreeError(f"node {c} has unknown parent {p}")
        self.costs()

    def structure(self) -> tuple:
        return tuple(sorted(self.parent.items(), key=lambda kv: kv[0]))

    def max_id(self) -> int:
        return max(self.nodes)


def tree_to_dict(tree: RoadmapTree) -> dict:
    return {
        "nodes": [{"id": k, "pos": tree.nodes[k].tolist()} for k in sorted(tree.nodes)],
        "edges": [{"child": c, "parent": p} for c, p in tree.edges()],
        "root": tree.root,
        "collision_samples": [s.tolist() for s in tree.collision_samples],
    }


def tree_from_dict(d: dict) -> RoadmapTree:
    try:
        nodes = {int(n["id"]): np.asarray(n["pos"], dtype=float) for n in d["nodes"]}
        parent = {k: None for k in nodes}
        for e in d["edges"]:
            parent[int(e["child"])] = int(e["parent"])
        tree = RoadmapTree(nodes, parent, int(d["root"]), [np.asarray(s, dtype=float) for s in d["collision_samples"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise TreeError(f"malformed tree document: {exc}") from None
    tree.validate()
    return tree
