"""Finite-memory strategies and bounded-memory optimal synthesis.

A strategy with a finite memory of size B corresponds exactly to a
memoryless strategy in the product of the graph with B memory slots, where
the memory transition is chosen freely alongside the node transition.
Memoryless product strategies induce lasso-shaped paths, so an optimal
B-memory strategy can be found by honest enumeration at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import ChoiceNotEdgeError, InstanceTooLargeError
from .graph import Graph, Lasso, Path, validate_lasso
from .rewards import RewardSpec, RewardValue, average_reward

ProductNode = tuple[int, int]


@dataclass(frozen=True)
class MemoryStructure:
    """Finite memory: slots ``1 .. size``, an initial slot, and an update map.

    ``update[(slot, node)]`` is the slot after observing that ``node`` was
    departed; it must be total over slots and nodes.
    """

    size: int
    initial: int
    update: Mapping[tuple[int, int], int]

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("memory needs at least one slot")
        if not 1 <= self.initial <= self.size:
            raise ValueError("initial slot out of range")
        for (slot, _node), target in self.update.items():
            if not (1 <= slot <= self.size and 1 <= target <= self.size):
                raise ValueError("memory update leaves the slot range")

    def next_slot(self, slot: int, node: int) -> int:
        try:
            return self.update[(slot, node)]
        except KeyError:
            raise ChoiceNotEdgeError(
                f"memory update undefined for slot {slot} after node {node}"
            ) from None


@dataclass(frozen=True)
class FiniteStrategy:
    """A choice map ``(node, slot) -> next node`` driven by a memory structure."""

    memory: MemoryStructure
    choice: Mapping[tuple[int, int], int]
    start: int

    def next_node(self, node: int, slot: int) -> int:
        try:
            return self.choice[(node, slot)]
        except KeyError:
            raise ChoiceNotEdgeError(
                f"no choice for node {node} in memory slot {slot}"
            ) from None


def _validate_choices(g: Graph, strategy: FiniteStrategy) -> None:
    for (node, _slot), target in strategy.choice.items():
        if not g.has_edge(node, target):
            raise ChoiceNotEdgeError(
                f"strategy chooses ({node}, {target}) which is not an edge"
            )


def outcome(g: Graph, strategy: FiniteStrategy, steps: int) -> Path:
    """The first ``steps`` edges of the unique path the strategy generates.

    The memory slot is advanced with the node being departed, then the
    choice map picks the successor. Choices are validated against the edge
    set up front.
    """
    _validate_choices(g, strategy)
    node = strategy.start
    slot = strategy.memory.initial
    nodes = [node]
    for _ in range(steps):
        target = strategy.next_node(node, slot)
        slot = strategy.memory.next_slot(slot, node)
        node = target
        nodes.append(node)
    return Path(tuple(nodes))


@dataclass(frozen=True)
class ProductGraph:
    """Graph times ``memory_size`` memory slots, every slot change allowed.

    Product nodes are ``(node, slot)`` with slots ``1 .. memory_size``;
    an edge exists whenever the underlying nodes are connected, regardless
    of the slots. Memoryless strategies here are exactly the strategies
    with that much memory in the base graph.
    """

    base: Graph
    memory_size: int

    def __post_init__(self) -> None:
        if self.memory_size < 1:
            raise ValueError("memory size must be at least 1")

    def nodes(self) -> list[ProductNode]:
        return [
            (v, m)
            for v in range(self.base.node_count)
            for m in range(1, self.memory_size + 1)
        ]

    def successors(self, node: ProductNode) -> list[ProductNode]:
        v, _ = node
        return [
            (w, m)
            for w in self.base.adjacency[v]
            for m in range(1, self.memory_size + 1)
        ]

    def has_edge(self, a: ProductNode, b: ProductNode) -> bool:
        return self.base.has_edge(a[0], b[0])


@dataclass(frozen=True)
class ProductLasso:
    """A lasso in the product graph together with its node projection."""

    prefix: tuple[ProductNode, ...]
    cycle: tuple[ProductNode, ...]
    projected: Lasso


def lasso_of_memoryless(
    product: ProductGraph,
    choice: Mapping[ProductNode, ProductNode],
    start: ProductNode,
) -> ProductLasso:
    """Follow a memoryless product strategy until a product node repeats.

    The walk closes within ``node_count * memory_size`` steps; the repeated
    node splits it into prefix and cycle, which are projected to the base
    graph.
    """
    bound = product.base.node_count * product.memory_size
    seq: list[ProductNode] = [start]
    pos: dict[ProductNode, int] = {start: 0}
    current = start
    while True:
        try:
            target = choice[current]
        except KeyError:
            raise ChoiceNotEdgeError(
                f"no choice for reachable product node {current}"
            ) from None
        if not product.has_edge(current, target):
            raise ChoiceNotEdgeError(
                f"choice {current} -> {target} is not a product edge"
            )
        if target in pos:
            split = pos[target]
            prefix = tuple(seq[:split])
            cycle = tuple(seq[split:])
            projected = validate_lasso(
                product.base,
                [p[0] for p in prefix],
                [p[0] for p in cycle],
            )
            return ProductLasso(prefix, cycle, projected)
        seq.append(target)
        pos[target] = len(seq) - 1
        assert len(seq) <= bound + 1  # pigeonhole over product nodes
        current = target


@dataclass(frozen=True)
class BoundedMemorySolution:
    value: RewardValue
    strategy: FiniteStrategy
    witness: Lasso


def _canonical_cycle(nodes: tuple[int, ...]) -> tuple[int, ...]:
    """Primitive period of a cyclic node sequence, smallest rotation first."""
    n = len(nodes)
    for period in range(1, n + 1):
        if n % period == 0 and nodes == nodes[period:] + nodes[:period]:
            nodes = nodes[:period]
            break
    return min(
        tuple(nodes[i:] + nodes[:i]) for i in range(len(nodes))
    )


def solve_bounded_memory(
    g: Graph,
    spec: RewardSpec,
    v0: int,
    memory_size: int,
    *,
    max_nodes: int = 4,
    max_memory: int = 3,
) -> BoundedMemorySolution:
    """Best limit-average reward over strategies with bounded memory.

    Enumerates every memoryless strategy of the product graph restricted to
    product nodes reachable under the strategy itself, scores the induced
    lasso exactly, and keeps the maximum. The number of strategies is
    exponential, so instances are guarded to stay tiny. Choices at
    unreachable product nodes are fixed to the smallest successor.
    """
    if g.node_count > max_nodes or memory_size > max_memory:
        raise InstanceTooLargeError(
            f"bounded-memory enumeration guarded at {max_nodes} nodes "
            f"and memory {max_memory}"
        )
    if spec.node_count != g.node_count:
        raise ValueError("spec size disagrees with the graph")
    product = ProductGraph(g, memory_size)
    start: ProductNode = (v0, 1)
    choice: dict[ProductNode, ProductNode] = {}
    cycle_values: dict[tuple[int, ...], float] = {}
    best: tuple[float, dict[ProductNode, ProductNode], list[ProductNode], int] | None = None

    def score(seq: list[ProductNode], split: int) -> float:
        key = _canonical_cycle(tuple(p[0] for p in seq[split:]))
        value = cycle_values.get(key)
        if value is None:
            value = average_reward(spec, Lasso((), key)).value
            cycle_values[key] = value
        return value

    def explore() -> None:
        nonlocal best
        seq = [start]
        pos = {start: 0}
        current = start
        while True:
            target = choice.get(current)
            if target is None:
                for candidate in product.successors(current):
                    choice[current] = candidate
                    explore()
                del choice[current]
                return
            if target in pos:
                value = score(seq, pos[target])
                if best is None or value > best[0]:
                    best = (value, dict(choice), seq, pos[target])
                return
            seq.append(target)
            pos[target] = len(seq) - 1
            current = target

    explore()
    assert best is not None  # every node keeps an outgoing choice or errors
    value, choices, seq, split = best

    witness = validate_lasso(
        g, [p[0] for p in seq[:split]], [p[0] for p in seq[split:]]
    )
    exact = average_reward(spec, witness)

    # Fill the unreachable product nodes with the smallest successor and
    # package the product choices as an explicit memory structure.
    update: dict[tuple[int, int], int] = {}
    tau: dict[tuple[int, int], int] = {}
    for node in product.nodes():
        v, slot = node
        picked = choices.get(node)
        if picked is None:
            succs = g.adjacency[v]
            if not succs:
                update[(slot, v)] = 1
                continue
            picked = (succs[0], 1)
        tau[(v, slot)] = picked[0]
        update[(slot, v)] = picked[1]
    strategy = FiniteStrategy(
        MemoryStructure(memory_size, 1, update), tau, v0
    )
    return BoundedMemorySolution(exact, strategy, witness)


def memory_error_bound(spec: RewardSpec, node_count: int, memory_size: int) -> float:
    """Worst-case shortfall of the best bounded-memory strategy.

    Closed-form guarantee in terms of the memory size measured in digits
    base ``node_count``; only informative once the memory is large enough
    to emulate a deep visit-age truncation. Node-invariant parameters,
    memory above 1, and decay required.
    """
    lam = spec.uniform_lambda()
    gamma = spec.uniform_gamma()
    if memory_size <= 1:
        raise ValueError("memory size must exceed 1")
    if gamma >= 1.0:
        raise ValueError("bound only defined with decay (gamma < 1)")
    if node_count < 2:
        raise ValueError("bound needs at least two nodes")
    digits = 0
    while node_count ** (digits + 1) <= memory_size:
        digits += 1
    return lam / (1.0 - gamma) * gamma ** (digits - 1)
