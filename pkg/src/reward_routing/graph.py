"""Directed graphs, paths, and small-instance cycle utilities.

Nodes are dense integer ids ``0 .. node_count - 1``. Adjacency is stored
as sorted tuples, so every traversal in this library visits successors in
ascending id order; combined with explicit tie-breaking in the solvers
this makes all outputs reproducible.

The cycle searches (:func:`hamiltonian_cycle`, :func:`longest_simple_cycle`)
are exact backtracking searches and refuse graphs above a configurable
node limit, since they are exponential by necessity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    BadEdgeError,
    EmptyPathError,
    InstanceTooLargeError,
    NoCycleError,
    NotStronglyConnectedError,
)

#: Default node limit for the exact cycle searches.
DESK_SCALE_NODE_LIMIT = 15


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph over dense integer node ids.

    ``adjacency[v]`` is the sorted tuple of successors of ``v``.
    Self-loops are permitted, parallel edges are collapsed.
    """

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("graph needs at least one node")
        if len(self.adjacency) != self.node_count:
            raise ValueError("adjacency length disagrees with node_count")
        for v, succs in enumerate(self.adjacency):
            if list(succs) != sorted(set(succs)):
                raise ValueError(f"adjacency of node {v} must be sorted and deduplicated")
            for w in succs:
                if not 0 <= w < self.node_count:
                    raise ValueError(f"edge ({v}, {w}) endpoint out of range")
        if self.labels is not None and len(self.labels) != self.node_count:
            raise ValueError("labels length disagrees with node_count")

    @staticmethod
    def from_edges(
        node_count: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[str] | None = None,
    ) -> "Graph":
        """Build a graph from an edge list (deduplicated, sorted)."""
        succs: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ValueError(f"edge ({u}, {v}) endpoint out of range")
            succs[u].add(v)
        return Graph(
            node_count,
            tuple(tuple(sorted(s)) for s in succs),
            tuple(labels) if labels is not None else None,
        )

    def successors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def edges(self) -> Iterable[tuple[int, int]]:
        for u, succs in enumerate(self.adjacency):
            for v in succs:
                yield u, v

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.adjacency)

    def label(self, v: int) -> str:
        if self.labels is not None:
            return self.labels[v]
        return str(v)


@dataclass(frozen=True)
class Path:
    """A finite path; ``length`` counts edges, so a single node has length 0."""

    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.nodes:
            raise EmptyPathError("a path needs at least one node")

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, t: int) -> int:
        return self.nodes[t]


@dataclass(frozen=True)
class Lasso:
    """An ultimately periodic infinite path: ``prefix`` then ``cycle`` forever.

    ``prefix`` may be empty; ``cycle`` must contain at least one node and is
    traversed as a closed walk (last node connects back to the first).
    """

    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.cycle:
            raise EmptyPathError("a lasso needs a non-empty cycle")

    def unroll(self, steps: int) -> tuple[int, ...]:
        """First ``steps + 1`` nodes of the infinite path."""
        need = steps + 1
        nodes = list(self.prefix[:need])
        while len(nodes) < need:
            nodes.extend(self.cycle[: need - len(nodes)])
        return tuple(nodes)


def validate_path(g: Graph, nodes: Sequence[int]) -> Path:
    """Check a node sequence against the graph and wrap it as a :class:`Path`.

    Raises :class:`EmptyPathError` for an empty sequence and
    :class:`BadEdgeError` identifying the first non-edge step.
    """
    if not nodes:
        raise EmptyPathError("a path needs at least one node")
    for v in nodes:
        if not 0 <= v < g.node_count:
            raise ValueError(f"node {v} out of range")
    for i in range(len(nodes) - 1):
        if not g.has_edge(nodes[i], nodes[i + 1]):
            raise BadEdgeError(i, nodes[i], nodes[i + 1])
    return Path(tuple(nodes))


def validate_lasso(g: Graph, prefix: Sequence[int], cycle: Sequence[int]) -> Lasso:
    """Check prefix and cycle connectivity and wrap them as a :class:`Lasso`."""
    if not cycle:
        raise EmptyPathError("a lasso needs a non-empty cycle")
    joined = list(prefix) + list(cycle)
    validate_path(g, joined)
    if not g.has_edge(cycle[-1], cycle[0]):
        raise BadEdgeError(len(joined) - 1, cycle[-1], cycle[0])
    return Lasso(tuple(prefix), tuple(cycle))


def last_visit(p: Path, t: int, v: int) -> int:
    """Steps since the previous visit of ``v`` on ``p`` before time ``t``.

    Returns ``t - j`` for the largest ``j < t`` with ``p[j] == v``, capped
    at ``t + 1`` when ``v`` has not been seen before ``t``. Defined for
    ``0 <= t <= p.length``.
    """
    if not 0 <= t <= p.length:
        raise IndexError(f"time {t} outside [0, {p.length}]")
    for j in range(t - 1, -1, -1):
        if p.nodes[j] == v:
            return t - j
    return t + 1


@dataclass(frozen=True)
class SCCDecomposition:
    """Strongly connected components plus their condensation DAG.

    Components are sorted internally and listed in ascending order of their
    smallest node. ``condensation`` holds edges between distinct component
    indices and is always acyclic.
    """

    components: tuple[tuple[int, ...], ...]
    component_of: tuple[int, ...]
    condensation: frozenset[tuple[int, int]]


def scc_decompose(g: Graph) -> SCCDecomposition:
    """Partition the nodes into maximal strongly connected components.

    Iterative Tarjan; linear in nodes plus edges.
    """
    n = g.node_count
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        # Explicit DFS stack of (node, iterator position).
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            succs = g.adjacency[v]
            while pos < len(succs):
                w = succs[pos]
                pos += 1
                if index[w] == -1:
                    work.append((v, pos))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])

    components.sort(key=lambda c: c[0])
    component_of = [0] * n
    for i, comp in enumerate(components):
        for v in comp:
            component_of[v] = i
    condensation = set()
    for u, v in g.edges():
        if component_of[u] != component_of[v]:
            condensation.add((component_of[u], component_of[v]))
    return SCCDecomposition(
        tuple(tuple(c) for c in components),
        tuple(component_of),
        frozenset(condensation),
    )


def reachable_from(g: Graph, v0: int) -> tuple[int, ...]:
    """Nodes reachable from ``v0`` (including ``v0``), ascending."""
    seen = {v0}
    queue = deque([v0])
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return tuple(sorted(seen))


def shortest_path(g: Graph, src: int, dst: int, within: set[int] | None = None) -> Path:
    """BFS shortest path from ``src`` to ``dst``, optionally inside a node set.

    Deterministic: the BFS expands successors in ascending order, so among
    equally short paths the lexicographically smallest one is returned.
    """
    if within is not None and (src not in within or dst not in within):
        raise ValueError("endpoints outside the restriction set")
    if src == dst:
        return Path((src,))
    parent: dict[int, int] = {src: -1}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if within is not None and w not in within:
                continue
            if w not in parent:
                parent[w] = v
                if w == dst:
                    nodes = [dst]
                    while nodes[-1] != src:
                        nodes.append(parent[nodes[-1]])
                    return Path(tuple(reversed(nodes)))
                queue.append(w)
    raise NoCycleError(f"no path from {src} to {dst}")


def max_reachable_scc(
    g: Graph, v0: int, weight: Sequence[float]
) -> tuple[tuple[int, ...], float]:
    """Heaviest strongly connected component reachable from ``v0``.

    Among SCCs reachable from ``v0`` returns one maximizing the sum of the
    given non-negative node weights (unit weights give maximal cardinality).
    Ties go to the component with the smallest node id.
    """
    if len(weight) != g.node_count:
        raise ValueError("weight length disagrees with node_count")
    if any(w < 0 for w in weight):
        raise ValueError("weights must be non-negative")
    decomp = scc_decompose(g)
    reach = set(reachable_from(g, v0))
    best: tuple[int, ...] | None = None
    best_weight = -1.0
    for comp in decomp.components:
        if comp[0] not in reach:
            continue
        total = sum(weight[v] for v in comp)
        if total > best_weight:
            best, best_weight = comp, total
    assert best is not None  # v0's own component is always reachable
    return best, best_weight


def covering_cycle(g: Graph, scc: Iterable[int]) -> Path:
    """Closed walk through every node of a strongly connected component.

    Visits the component's nodes in ascending id order, connecting them by
    BFS shortest paths inside the component, and returns to the start; the
    result has length at most ``len(scc) ** 2``. Raises
    :class:`NotStronglyConnectedError` if the node set is not strongly
    connected or bears no closed walk (an isolated node without self-loop).
    """
    nodes = sorted(set(scc))
    if not nodes:
        raise NotStronglyConnectedError("empty node set")
    inside = set(nodes)
    if len(nodes) == 1:
        v = nodes[0]
        if g.has_edge(v, v):
            return Path((v, v))
        raise NotStronglyConnectedError(f"node {v} has no closed walk")
    walk = [nodes[0]]
    try:
        for target in nodes[1:]:
            leg = shortest_path(g, walk[-1], target, within=inside)
            walk.extend(leg.nodes[1:])
        back = shortest_path(g, walk[-1], nodes[0], within=inside)
    except NoCycleError as exc:
        raise NotStronglyConnectedError(str(exc)) from exc
    walk.extend(back.nodes[1:])
    return Path(tuple(walk))


def _check_desk_scale(g: Graph, max_nodes: int) -> None:
    if g.node_count > max_nodes:
        raise InstanceTooLargeError(
            f"exact cycle search refuses {g.node_count} nodes (limit {max_nodes})"
        )


def hamiltonian_cycle(g: Graph, max_nodes: int = DESK_SCALE_NODE_LIMIT) -> Path | None:
    """Exact search for a simple cycle through every node.

    Returns the cycle as a closed path (first node repeated at the end) or
    ``None``. Backtracking over successor choices in ascending order; only
    intended for small instances.
    """
    _check_desk_scale(g, max_nodes)
    n = g.node_count
    if n == 1:
        return Path((0, 0)) if g.has_edge(0, 0) else None
    visited = [False] * n
    visited[0] = True
    order = [0]

    def extend(v: int) -> bool:
        if len(order) == n:
            return g.has_edge(v, 0)
        for w in g.adjacency[v]:
            if not visited[w]:
                visited[w] = True
                order.append(w)
                if extend(w):
                    return True
                order.pop()
                visited[w] = False
        return False

    if extend(0):
        return Path(tuple(order) + (0,))
    return None


def longest_simple_cycle(g: Graph, max_nodes: int = DESK_SCALE_NODE_LIMIT) -> Path:
    """Exact search for a maximum-length simple cycle, as a closed path.

    Each cycle is enumerated once, rooted at its smallest node; among
    equally long cycles the first in lexicographic order wins. Raises
    :class:`NoCycleError` on acyclic graphs.
    """
    _check_desk_scale(g, max_nodes)
    n = g.node_count
    best: list[int] | None = None

    for root in range(n):
        if best is not None and len(best) == n:
            break
        # Simple paths through nodes >= root only, so each cycle is found
        # exactly once, rooted at its minimum node.
        visited = [False] * n
        visited[root] = True
        order = [root]

        def extend(v: int) -> None:
            nonlocal best
            for w in g.adjacency[v]:
                if w == root:
                    if best is None or len(order) > len(best):
                        best = list(order)
                elif w > root and not visited[w]:
                    visited[w] = True
                    order.append(w)
                    extend(w)
                    order.pop()
                    visited[w] = False

        extend(root)

    if best is None:
        raise NoCycleError("graph has no cycle")
    return Path(tuple(best) + (best[0],))
