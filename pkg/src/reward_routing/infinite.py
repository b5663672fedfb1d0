"""Limit-average reward: exact solver without decay, approximation with it.

When rewards never disappear (all survival probabilities equal 1) the
optimal long-run average is the heaviest reachable strongly connected
component, collected by looping a covering walk; that solver is polynomial.

With decay the problem is approximated on a truncated visit-age graph:
states ``(node, ages)`` track how long ago each node was visited, capped at
a depth ``K`` (age 0 encodes "longer ago than K"). Each state carries a
pessimistic and an optimistic weight; Karp's minimum mean cycle recurrence
on the reachable component then yields a bracket ``[r_under, r_over]``
around the true optimum whose width is controlled by ``K``, together with
ultimately periodic witness paths.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    NoCycleError,
    NotStronglyConnectedError,
    StateBudgetExceededError,
)
from .graph import (
    Graph,
    Lasso,
    covering_cycle,
    reachable_from,
    scc_decompose,
    shortest_path,
    validate_lasso,
)
from .rewards import (
    TOLERANCE,
    RewardSpec,
    RewardValue,
    average_reward,
    geometric_series,
)

DEFAULT_STATE_BUDGET = 5_000_000

# Karp's table holds (m + 1) * m floats for m states; refuse sizes where
# that stops fitting comfortably in memory.
_KARP_CELL_LIMIT = 60_000_000

State = tuple[int, tuple[int, ...]]


def truncation_depth(spec: RewardSpec, epsilon: float) -> int:
    """Smallest age cap that keeps the per-step truncation error within epsilon.

    Per node the error of capping ages at ``K`` is
    ``lam * gamma**K / (1 - gamma)``; the result is the largest per-node
    requirement, at least 1. Nodes that generate nothing are ignored.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    depth = 1
    for lam, gamma in zip(spec.lam, spec.gamma):
        if lam == 0.0:
            continue
        if gamma >= 1.0:
            raise ValueError("survival probability 1 cannot be truncated")
        ratio = epsilon * (1.0 - gamma) / lam
        if ratio >= 1.0:
            continue
        # The 1e-12 slack keeps exact integer boundaries from rounding up.
        needed = math.ceil(math.log(ratio) / math.log(gamma) - 1e-12)
        depth = max(depth, needed)
    return depth


@dataclass(frozen=True)
class WeightPair:
    """Pessimistic/optimistic weights of one truncated visit-age state.

    ``cost_over``/``cost_under`` bound the true cost ``gamma ** age`` from
    above and below when the age overflowed the cap (encoded as 0);
    ``reward_under``/``reward_over`` are their collected-reward duals.
    """

    cost_over: float
    cost_under: float
    reward_under: float
    reward_over: float


def weight_pair(spec: RewardSpec, state: State, depth: int) -> WeightPair:
    v, ages = state
    lam, gamma = spec.lam[v], spec.gamma[v]
    age = ages[v]
    if age > 0:
        cost = gamma**age
        exact = lam * geometric_series(gamma, age)
        return WeightPair(cost, cost, exact, exact)
    return WeightPair(
        gamma**depth,
        0.0,
        lam * geometric_series(gamma, depth),
        lam / (1.0 - gamma),
    )


@dataclass(frozen=True)
class WeightTable:
    """Per-state weight arrays aligned with ``TruncatedGraph.states``."""

    cost_over: np.ndarray
    cost_under: np.ndarray
    reward_under: np.ndarray
    reward_over: np.ndarray


@dataclass(frozen=True)
class TruncatedGraph:
    """The reachable part of the truncated visit-age graph.

    States are sorted lexicographically (by node, then age vector), so
    state indices double as deterministic tie-break ranks. ``state_graph``
    is the plain directed graph over state indices.
    """

    graph: Graph
    depth: int
    states: tuple[State, ...]
    initial: int
    state_graph: Graph

    @property
    def state_count(self) -> int:
        return len(self.states)

    def node_of(self, index: int) -> int:
        return self.states[index][0]

    def weights(self, spec: RewardSpec) -> WeightTable:
        pairs = [weight_pair(spec, s, self.depth) for s in self.states]
        return WeightTable(
            np.array([p.cost_over for p in pairs]),
            np.array([p.cost_under for p in pairs]),
            np.array([p.reward_under for p in pairs]),
            np.array([p.reward_over for p in pairs]),
        )


def _truncated_successor(
    ages: tuple[int, ...], v: int, w: int, depth: int, n: int
) -> State:
    # Leaving v resets its age to 1; every other age ticks up and overflows
    # to 0 once it passes the cap (0 also stays 0).
    return (
        w,
        tuple(
            1
            if u == v
            else (ages[u] + 1 if 0 < ages[u] and ages[u] + 1 <= depth else 0)
            for u in range(n)
        ),
    )


def build_truncated(
    g: Graph,
    v0: int,
    depth: int,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> TruncatedGraph:
    """Breadth-first expansion of the truncated visit-age graph from ``v0``.

    Starts at ``(v0, (1, ..., 1))`` and only materializes reachable states.
    Raises :class:`StateBudgetExceededError` past the state budget.
    """
    if depth < 1:
        raise ValueError("truncation depth must be at least 1")
    if not 0 <= v0 < g.node_count:
        raise ValueError(f"start node {v0} out of range")
    n = g.node_count
    initial: State = (v0, (1,) * n)
    discovered: dict[State, int] = {initial: 0}
    order: list[State] = [initial]
    edges: list[tuple[int, int]] = []
    queue = deque([initial])
    while queue:
        state = queue.popleft()
        v, ages = state
        src = discovered[state]
        for w in g.adjacency[v]:
            succ = _truncated_successor(ages, v, w, depth, n)
            idx = discovered.get(succ)
            if idx is None:
                idx = len(order)
                if idx >= state_budget:
                    raise StateBudgetExceededError(
                        state_budget,
                        f"truncated graph at depth {depth} exceeds "
                        f"{state_budget} states",
                    )
                discovered[succ] = idx
                order.append(succ)
                queue.append(succ)
            edges.append((src, idx))

    # Re-rank states lexicographically so indices are stable tie-breakers.
    ranked = sorted(range(len(order)), key=lambda i: order[i])
    rank_of = [0] * len(order)
    for new, old in enumerate(ranked):
        rank_of[old] = new
    states = tuple(order[old] for old in ranked)
    adjacency: list[list[int]] = [[] for _ in range(len(states))]
    for src, dst in edges:
        adjacency[rank_of[src]].append(rank_of[dst])
    state_graph = Graph(
        len(states), tuple(tuple(sorted(set(a))) for a in adjacency)
    )
    return TruncatedGraph(g, depth, states, rank_of[0], state_graph)


def _edge_arrays(
    edges: Sequence[tuple[int, int]] | tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(edges, tuple) and len(edges) == 2 and isinstance(edges[0], np.ndarray):
        return edges[0].astype(np.int64), edges[1].astype(np.int64)
    arr = np.asarray(list(edges), dtype=np.int64)
    if arr.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def _verify_strongly_connected(m: int, src: np.ndarray, dst: np.ndarray) -> None:
    if m < 1:
        raise NotStronglyConnectedError("empty subgraph")
    if len(src) == 0:
        raise NotStronglyConnectedError("subgraph has no edges, hence no cycle")
    fwd: list[list[int]] = [[] for _ in range(m)]
    bwd: list[list[int]] = [[] for _ in range(m)]
    for u, v in zip(src.tolist(), dst.tolist()):
        fwd[u].append(v)
        bwd[v].append(u)
    for adj in (fwd, bwd):
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != m:
            raise NotStronglyConnectedError(
                f"only {len(seen)} of {m} states are mutually reachable"
            )


def karp_mean_cycle(
    state_count: int,
    edges: Sequence[tuple[int, int]] | tuple[np.ndarray, np.ndarray],
    weights: Sequence[float],
    mode: str = "min",
) -> tuple[float, list[int]]:
    """Optimal mean node weight over cycles of a strongly connected graph.

    Karp's recurrence: ``W[n][v]``, the cheapest walk of length ``n`` from
    state 0 to ``v``, is tabulated for ``n`` up to the state count; the
    optimum is ``min over v of max over n`` of the normalized differences.
    A witness cycle is recovered by walking the table backwards from the
    minimizing state and cutting at the repetition nearest the walk's end.

    ``mode="max"`` negates the weights. States should be indexed in the
    caller's preferred tie-break order: index 0 seeds the walks and ties
    resolve toward lower indices. Returns ``(mean, cycle)`` where ``cycle``
    lists state indices once, in traversal order.
    """
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    src, dst = _edge_arrays(edges)
    _verify_strongly_connected(state_count, src, dst)
    w = np.asarray(weights, dtype=np.float64)
    if len(w) != state_count:
        raise ValueError("weights length disagrees with state_count")
    if mode == "max":
        inner_mean, cycle = karp_mean_cycle(state_count, (src, dst), -w, "min")
        return -inner_mean, cycle

    m = state_count
    if (m + 1) * m > _KARP_CELL_LIMIT:
        raise StateBudgetExceededError(
            _KARP_CELL_LIMIT,
            f"Karp table for {m} states does not fit the cell limit; "
            "use a coarser approximation target",
        )

    # Sort edges by destination (then source) so each destination forms a
    # contiguous segment with ascending sources.
    order = np.lexsort((src, dst))
    src_sorted = src[order]
    dst_sorted = dst[order]
    seg_starts = np.searchsorted(dst_sorted, np.arange(m))

    table = np.full((m + 1, m), np.inf)
    table[0, 0] = 0.0
    for n in range(1, m + 1):
        best_in = np.minimum.reduceat(table[n - 1, src_sorted], seg_starts)
        table[n] = best_in + w

    with np.errstate(invalid="ignore"):
        diffs = table[m][None, :] - table[:m, :]
        denoms = (m - np.arange(m)).astype(np.float64)[:, None]
        ratios = np.where(np.isinf(table[:m, :]), -np.inf, diffs / denoms)
    per_state = ratios.max(axis=0)
    per_state = np.where(np.isinf(table[m]), np.inf, per_state)
    target = int(np.argmin(per_state))
    mean = float(per_state[target])

    # Reconstruct the cheapest length-m walk ending at the target.
    walk = [target]
    cursor = target
    for n in range(m, 0, -1):
        lo = seg_starts[cursor]
        hi = seg_starts[cursor + 1] if cursor + 1 < m else len(src_sorted)
        preds = src_sorted[lo:hi]
        cursor = int(preds[np.argmin(table[n - 1, preds])])
        walk.append(cursor)
    walk.reverse()

    # Any cycle inside this walk attains the optimal mean; take the one
    # closest to the end, deterministically.
    seen: dict[int, int] = {}
    cycle: list[int] | None = None
    for i in range(len(walk) - 1, -1, -1):
        state = walk[i]
        if state in seen:
            cycle = walk[i : seen[state]]
            break
        seen[state] = i
    assert cycle is not None  # a length-m walk over m states must repeat

    achieved = float(np.mean(w[cycle]))
    if abs(achieved - mean) > TOLERANCE * max(1.0, abs(mean)):
        raise RuntimeError(
            f"extracted cycle mean {achieved} disagrees with {mean}"
        )
    return mean, cycle


@dataclass(frozen=True)
class ValueBracket:
    """Approximation bracket around the optimal limit-average reward.

    ``r_under`` is the exact long-run value of ``pi_under`` (a real path,
    hence a lower bound); ``r_over`` is the optimistic cycle mean on the
    truncated graph, an upper bound on every path's value. Their gap is
    at most the requested epsilon.
    """

    r_under: float
    r_over: float
    pi_under: Lasso
    pi_over: Lasso
    depth: int
    epsilon_achieved: float
    state_count: int


@dataclass(frozen=True)
class NondiscountedSolution:
    value: RewardValue
    witness: Lasso
    component: tuple[int, ...]


def _cycle_bearing_components(state_graph: Graph) -> list[tuple[int, ...]]:
    decomp = scc_decompose(state_graph)
    keep = []
    for comp in decomp.components:
        if len(comp) > 1 or state_graph.has_edge(comp[0], comp[0]):
            keep.append(comp)
    return keep


def _component_karp(
    tg: TruncatedGraph, comp: tuple[int, ...], weights: np.ndarray, mode: str
) -> tuple[float, list[int]]:
    """Run Karp on one component; returns the mean and global state cycle."""
    local = {s: i for i, s in enumerate(comp)}
    edges = [
        (local[u], local[v])
        for u in comp
        for v in tg.state_graph.adjacency[u]
        if v in local
    ]
    mean, cycle = karp_mean_cycle(
        len(comp), edges, [float(weights[s]) for s in comp], mode
    )
    return mean, [comp[i] for i in cycle]


def _cycle_to_lasso(tg: TruncatedGraph, cycle: list[int]) -> Lasso:
    """Reach path plus cycle, projected from states down to graph nodes."""
    pivot = cycle.index(min(cycle))
    rotated = cycle[pivot:] + cycle[:pivot]
    reach = shortest_path(tg.state_graph, tg.initial, rotated[0])
    prefix = [tg.node_of(s) for s in reach.nodes[:-1]]
    nodes = [tg.node_of(s) for s in rotated]
    return validate_lasso(tg.graph, prefix, nodes)


def solve_nondiscounted(
    g: Graph, lam: Sequence[float], v0: int
) -> NondiscountedSolution:
    """Optimal limit-average reward when rewards never disappear.

    The value is the largest total generation rate over strongly connected
    components reachable from ``v0``; a witness loops a covering walk of
    the winning component forever. Polynomial time.
    """
    if len(lam) != g.node_count:
        raise ValueError("lam length disagrees with the graph")
    reach = set(reachable_from(g, v0))
    best: tuple[int, ...] | None = None
    best_total = -1.0
    for comp in _cycle_bearing_components(g):
        if comp[0] not in reach:
            continue
        total = sum(lam[v] for v in comp)
        if total > best_total:
            best, best_total = comp, total
    if best is None:
        raise NoCycleError(f"no infinite path starts at node {v0}")
    walk = covering_cycle(g, best)
    to_walk = shortest_path(g, v0, walk.nodes[0])
    witness = validate_lasso(g, to_walk.nodes[:-1], walk.nodes[:-1])
    return NondiscountedSolution(
        RewardValue(best_total, "limit_average"), witness, best
    )


def _feasible_epsilon_estimate(spec: RewardSpec, budget: int) -> float:
    """Crude epsilon that would likely fit the budget, for error messages."""
    n = spec.node_count
    depth = max(1, int((budget / max(n, 1)) ** (1.0 / n)) - 1)
    worst = 0.0
    for lam, gamma in zip(spec.lam, spec.gamma):
        if lam > 0 and gamma < 1:
            worst = max(worst, lam * gamma**depth / (1.0 - gamma))
    return worst


def solve_infinite_approx(
    g: Graph,
    spec: RewardSpec,
    v0: int,
    epsilon: float,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> ValueBracket:
    """Bracket the optimal limit-average reward to within ``epsilon``.

    Builds the truncated visit-age graph, runs Karp's recurrence per
    reachable cycle-bearing component under both weightings, and returns
    the best pessimistic and optimistic cycles. ``r_under`` is reported as
    the exact replay value of its witness, so
    ``average_reward(spec, pi_under) == r_under`` holds identically.

    All survival probabilities must be below 1 (with no decay anywhere,
    the exact solver takes over and the bracket collapses to a point).
    """
    if spec.node_count != g.node_count:
        raise ValueError("spec size disagrees with the graph")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if all(gamma == 1.0 for gamma in spec.gamma):
        exact = solve_nondiscounted(g, spec.lam, v0)
        return ValueBracket(
            r_under=exact.value.value,
            r_over=exact.value.value,
            pi_under=exact.witness,
            pi_over=exact.witness,
            depth=0,
            epsilon_achieved=0.0,
            state_count=0,
        )
    if any(gamma == 1.0 for gamma in spec.gamma):
        raise ValueError(
            "mixing decaying and non-decaying nodes is not supported"
        )

    depth = truncation_depth(spec, epsilon)
    try:
        tg = build_truncated(g, v0, depth, state_budget=state_budget)
    except StateBudgetExceededError as exc:
        raise StateBudgetExceededError(
            state_budget,
            f"{exc}; epsilon around {_feasible_epsilon_estimate(spec, state_budget):.3g} "
            "should fit the budget",
        ) from exc
    weights = tg.weights(spec)

    components = _cycle_bearing_components(tg.state_graph)
    if not components:
        raise NoCycleError(f"no infinite path starts at node {v0}")

    best_under: tuple[float, list[int]] | None = None
    best_over: tuple[float, list[int]] | None = None
    for comp in components:
        mean_u, cycle_u = _component_karp(tg, comp, weights.reward_under, "max")
        if best_under is None or mean_u > best_under[0]:
            best_under = (mean_u, cycle_u)
        mean_o, cycle_o = _component_karp(tg, comp, weights.reward_over, "max")
        if best_over is None or mean_o > best_over[0]:
            best_over = (mean_o, cycle_o)
    assert best_under is not None and best_over is not None

    pi_under = _cycle_to_lasso(tg, best_under[1])
    pi_over = _cycle_to_lasso(tg, best_over[1])
    r_under = average_reward(spec, pi_under).value
    # r_under is the exact value of a real path, so it never exceeds the
    # optimum; lifting r_over to it only sheds rounding noise.
    r_over = max(best_over[0], r_under)
    if r_under > r_over + TOLERANCE or r_over - r_under > epsilon + TOLERANCE:
        raise RuntimeError(
            f"bracket [{r_under}, {r_over}] violates its contract at "
            f"epsilon {epsilon}"
        )
    return ValueBracket(
        r_under=r_under,
        r_over=r_over,
        pi_under=pi_under,
        pi_over=pi_over,
        depth=depth,
        epsilon_achieved=r_over - r_under,
        state_count=tg.state_count,
    )


def decide_infinite_value(
    g: Graph,
    spec: RewardSpec,
    v0: int,
    threshold: float,
    epsilon: float,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> tuple[str, ValueBracket]:
    """Compare the optimal limit-average reward against a threshold.

    Returns ``("yes", bracket)`` when the lower bound already clears the
    threshold, ``("no", bracket)`` when the upper bound stays below it,
    and ``("unknown", bracket)`` otherwise; the caller may retry with a
    smaller epsilon.
    """
    bracket = solve_infinite_approx(
        g, spec, v0, epsilon, state_budget=state_budget
    )
    if bracket.r_under >= threshold - TOLERANCE:
        return "yes", bracket
    if bracket.r_over < threshold - TOLERANCE:
        return "no", bracket
    return "unknown", bracket
