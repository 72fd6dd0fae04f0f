"""Undirected graphs with oriented-edge incidence algebra and plug composition.

Every edge carries a fixed orientation chosen at construction: the first
node of the pair is the positive end, the second the negative end. The
orientation is arbitrary but stable, so incidence matrices and edge-indexed
quantities are reproducible. Graphs are immutable values; composing a plug
plan returns a new graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import GraphError


@dataclass(frozen=True)
class Graph:
    """Undirected graph with integer node labels and oriented edges.

    ``edges[k] = (i, j)`` means node ``i`` is the positive end and node
    ``j`` the negative end of edge ``k``. No self-loops, no duplicate
    undirected edges.
    """

    node_ids: tuple[int, ...]
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(int(i) for i in self.node_ids))
        object.__setattr__(
            self, "edges", tuple((int(i), int(j)) for i, j in self.edges)
        )
        if len(set(self.node_ids)) != len(self.node_ids):
            raise GraphError(f"duplicate node ids in {self.node_ids}")
        known = set(self.node_ids)
        seen: set[frozenset[int]] = set()
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if i not in known or j not in known:
                raise GraphError(f"edge ({i}, {j}) references an unknown node")
            key = frozenset((i, j))
            if key in seen:
                raise GraphError(f"duplicate undirected edge ({i}, {j})")
            seen.add(key)

    @classmethod
    def from_pairs(cls, node_ids: Iterable[int], pairs: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph orienting every edge with the smaller label positive."""
        edges = tuple((min(i, j), max(i, j)) for i, j in pairs)
        return cls(tuple(node_ids), edges)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def p(self) -> int:
        return len(self.edges)

    def index(self, node: int) -> int:
        try:
            return self.node_ids.index(node)
        except ValueError:
            raise GraphError(f"node {node} not in graph") from None

    def neighbors(self, node: int) -> frozenset[int]:
        self.index(node)
        out = set()
        for i, j in self.edges:
            if i == node:
                out.add(j)
            elif j == node:
                out.add(i)
        return frozenset(out)

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    def has_edge(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in {frozenset(e) for e in self.edges}

    def edge_keys(self) -> set[frozenset[int]]:
        return {frozenset(e) for e in self.edges}


def incidence(g: Graph) -> np.ndarray:
    """Node-by-edge incidence matrix with +1 at positive ends, -1 at negative.

    Integer-valued; column sums are exactly zero.
    """
    d = np.zeros((g.n, g.p), dtype=int)
    pos = {node: k for k, node in enumerate(g.node_ids)}
    for k, (i, j) in enumerate(g.edges):
        d[pos[i], k] = 1
        d[pos[j], k] = -1
    return d


def is_connected(g: Graph) -> bool:
    """True iff every node is reachable from every other (empty graph: True)."""
    if g.n <= 1:
        return True
    adjacency: dict[int, set[int]] = {i: set() for i in g.node_ids}
    for i, j in g.edges:
        adjacency[i].add(j)
        adjacency[j].add(i)
    start = g.node_ids[0]
    visited = {start}
    stack = [start]
    while stack:
        current = stack.pop()
        for nxt in adjacency[current] - visited:
            visited.add(nxt)
            stack.append(nxt)
    return len(visited) == g.n


@dataclass(frozen=True)
class PlugPlan:
    """Description of a plug operation: a node or a whole graph joins ``base``.

    Boundary pairs may be written in either order; they are normalized at
    construction to the orientation the certificate constructions use:

    * single added node: ``(added_node, base_node)`` -- the new node is the
      positive end of the new edge;
    * added graph: ``(base_node, added_node)`` -- the base side is positive.
    """

    base: Graph
    added: Union[Graph, int]
    boundary: tuple[tuple[int, int], ...]

    def __post_init__(self):
        boundary = tuple((int(a), int(b)) for a, b in self.boundary)
        if not boundary:
            raise GraphError("plug plan needs at least one boundary edge")
        base_nodes = set(self.base.node_ids)

        if isinstance(self.added, Graph):
            added_nodes = set(self.added.node_ids)
            if base_nodes & added_nodes:
                raise GraphError(
                    f"node labels shared between parts: {sorted(base_nodes & added_nodes)}"
                )
            normalized = []
            for a, b in boundary:
                if a in base_nodes and b in added_nodes:
                    normalized.append((a, b))
                elif b in base_nodes and a in added_nodes:
                    normalized.append((b, a))
                else:
                    raise GraphError(
                        f"boundary edge ({a}, {b}) must join the base to the added graph"
                    )
            if len({frozenset(e) for e in normalized}) != len(normalized):
                raise GraphError("duplicate boundary edge")
            object.__setattr__(self, "boundary", tuple(normalized))
        else:
            new = int(self.added)
            object.__setattr__(self, "added", new)
            if new in base_nodes:
                raise GraphError(f"added node {new} already present in base")
            if len(boundary) != 1:
                raise GraphError(
                    "single-node plug connects through exactly one edge "
                    f"(got {len(boundary)})"
                )
            a, b = boundary[0]
            if a == new and b in base_nodes:
                pair = (new, b)
            elif b == new and a in base_nodes:
                pair = (new, a)
            else:
                raise GraphError(
                    f"boundary edge ({a}, {b}) must join node {new} to the base"
                )
            object.__setattr__(self, "boundary", (pair,))

    @property
    def is_single_node(self) -> bool:
        return not isinstance(self.added, Graph)


def assumption_1_violation(plan: PlugPlan) -> tuple[tuple[int, int], tuple[int, int]] | None:
    """Return the first offending pair of boundary edges, or None if compliant.

    Two distinct boundary edges must attach to distinct, non-adjacent nodes
    on each side. Sharing an attachment node counts as a violation: the
    certificate's weight bookkeeping assumes one boundary edge per node.
    """
    if not isinstance(plan.added, Graph):
        raise GraphError("the interconnection rule applies to network plug plans")
    edges = plan.boundary
    for r in range(len(edges)):
        for s in range(r + 1, len(edges)):
            (pr, qr), (ps, qs) = edges[r], edges[s]
            if pr == ps or plan.base.has_edge(pr, ps):
                return edges[r], edges[s]
            if qr == qs or plan.added.has_edge(qr, qs):
                return edges[r], edges[s]
    return None


def check_assumption_1(plan: PlugPlan) -> bool:
    """True iff boundary attachment nodes are pairwise non-adjacent on both sides.

    Vacuously true for a single boundary edge.
    """
    return assumption_1_violation(plan) is None


def compose(plan: PlugPlan) -> Graph:
    """Augmented graph: base edges first, added edges next, boundary edges last.

    Node labels are preserved and the base's edge orientation and column
    order survive as the leading block of the incidence matrix.
    """
    if isinstance(plan.added, Graph):
        nodes = plan.base.node_ids + plan.added.node_ids
        edges = plan.base.edges + plan.added.edges + plan.boundary
    else:
        nodes = plan.base.node_ids + (plan.added,)
        edges = plan.base.edges + plan.boundary
    return Graph(nodes, edges)
