from __future__ import annotations

import itertools
import random

import pytest

from reward_routing import (
    ChoiceNotEdgeError,
    FiniteStrategy,
    Graph,
    InstanceTooLargeError,
    Lasso,
    MemoryStructure,
    ProductGraph,
    RewardSpec,
    average_reward,
    lasso_of_memoryless,
    memory_error_bound,
    outcome,
    solve_bounded_memory,
    validate_lasso,
)

from conftest import parse_route, random_graph, spell, two_cycles_graph

TWO_CYCLES = two_cycles_graph()
SPEC_26 = RewardSpec.uniform(4, 1.0, 0.26)


def memoryless(g: Graph, choices: dict[int, int], start: int) -> FiniteStrategy:
    memory = MemoryStructure(1, 1, {(1, v): 1 for v in range(g.node_count)})
    return FiniteStrategy(memory, {(v, 1): w for v, w in choices.items()}, start)


class TestOutcome:
    def test_memoryless_triangle(self):
        strategy = memoryless(TWO_CYCLES, {0: 1, 1: 2, 2: 0}, 0)
        path = outcome(TWO_CYCLES, strategy, 7)
        assert spell(TWO_CYCLES, path.nodes) == "abcabcab"

    def test_single_slot_self_loop(self):
        g = Graph.from_edges(1, [(0, 0)])
        strategy = memoryless(g, {0: 0}, 0)
        assert outcome(g, strategy, 4).nodes == (0,) * 5

    def test_three_slot_strategy_alternates_the_loops(self):
        # Two triangle rounds, then the short loop, forever.
        update = {}
        choice = {}
        for slot in (1, 2, 3):
            for v in range(4):
                update[(slot, v)] = slot
                choice[(v, slot)] = {0: 1, 1: 2, 2: 0, 3: 0}[v]
        update[(1, 2)] = 2  # after leaving c the first time, advance
        update[(2, 2)] = 3  # after leaving c the second time, advance
        update[(3, 3)] = 1  # leaving d resets
        choice[(0, 1)] = 1
        choice[(0, 2)] = 1
        choice[(0, 3)] = 3
        strategy = FiniteStrategy(MemoryStructure(3, 1, update), choice, 0)
        path = outcome(TWO_CYCLES, strategy, 15)
        assert spell(TWO_CYCLES, path.nodes) == "abcabcadabcabcad"

    def test_choice_off_the_edge_set_is_rejected_eagerly(self):
        strategy = memoryless(TWO_CYCLES, {0: 2, 1: 2, 2: 0, 3: 0}, 0)
        with pytest.raises(ChoiceNotEdgeError):
            outcome(TWO_CYCLES, strategy, 3)

    def test_missing_choice_on_a_reachable_node(self):
        strategy = memoryless(TWO_CYCLES, {0: 1, 1: 2}, 0)
        with pytest.raises(ChoiceNotEdgeError):
            outcome(TWO_CYCLES, strategy, 5)


class TestLassoOfMemoryless:
    def test_worked_three_slot_cycle(self):
        product = ProductGraph(TWO_CYCLES, 3)
        choice = {
            (0, 1): (1, 1),
            (1, 1): (2, 2),
            (2, 2): (0, 2),
            (0, 2): (1, 2),
            (1, 2): (2, 3),
            (2, 3): (0, 3),
            (0, 3): (3, 1),
            (3, 1): (0, 1),
        }
        result = lasso_of_memoryless(product, choice, (0, 1))
        assert result.cycle == (
            (0, 1), (1, 1), (2, 2), (0, 2), (1, 2), (2, 3), (0, 3), (3, 1),
        )
        assert result.prefix == ()
        assert spell(TWO_CYCLES, result.projected.cycle) == "abcabcad"

    def test_single_slot_product_is_the_base_graph(self):
        product = ProductGraph(TWO_CYCLES, 1)
        choice = {(0, 1): (3, 1), (3, 1): (0, 1)}
        result = lasso_of_memoryless(product, choice, (0, 1))
        assert spell(TWO_CYCLES, result.projected.cycle) == "ad"

    def test_lasso_closes_within_the_product_size(self):
        rng = random.Random(12)
        for _ in range(40):
            g = random_graph(rng, rng.randint(1, 4))
            slots = rng.randint(1, 3)
            product = ProductGraph(g, slots)
            choice = {}
            for node in product.nodes():
                succs = product.successors(node)
                if succs:
                    choice[node] = rng.choice(succs)
            start = (rng.randrange(g.node_count), 1)
            result = lasso_of_memoryless(product, choice, start)
            total = len(result.prefix) + len(result.cycle)
            assert total <= g.node_count * slots
            validate_lasso(g, result.projected.prefix, result.projected.cycle)


class TestSolveBoundedMemory:
    def test_three_slots_beat_memoryless(self):
        three = solve_bounded_memory(TWO_CYCLES, SPEC_26, 0, 3)
        one = solve_bounded_memory(TWO_CYCLES, SPEC_26, 0, 1)
        assert spell(TWO_CYCLES, three.witness.cycle) in (
            "abcabcad", "bcabcada", "cabcadab", "abcadabc",
            "bcadabca", "cadabcab", "adabcabc", "dabcabca",
        )
        expected = average_reward(
            SPEC_26,
            validate_lasso(TWO_CYCLES, [], parse_route(TWO_CYCLES, "abcabcad")),
        ).value
        assert three.value.value == pytest.approx(expected, abs=1e-12)
        assert three.value.value > one.value.value + 1e-6

    def test_memoryless_on_gentle_decay_stays_in_the_triangle(self):
        spec = RewardSpec.uniform(4, 1.0, 0.1)
        best = solve_bounded_memory(TWO_CYCLES, spec, 0, 1)
        assert spell(TWO_CYCLES, best.witness.cycle) == "abc"
        assert best.value.value == pytest.approx((1 - 0.1**3) / 0.9, abs=1e-12)

    def test_self_loop_any_memory(self):
        g = Graph.from_edges(1, [(0, 0)])
        spec = RewardSpec.uniform(1, 1.9, 0.5)
        for slots in (1, 2, 3):
            solution = solve_bounded_memory(g, spec, 0, slots)
            assert solution.value.value == pytest.approx(1.9, abs=1e-12)

    def test_value_monotone_in_memory(self):
        previous = -1.0
        for slots in (1, 2, 3):
            value = solve_bounded_memory(TWO_CYCLES, SPEC_26, 0, slots).value.value
            assert value >= previous - 1e-12
            previous = value

    def test_guard(self):
        g = random_graph(random.Random(0), 5)
        spec = RewardSpec.uniform(5, 1.0, 0.5)
        with pytest.raises(InstanceTooLargeError):
            solve_bounded_memory(g, spec, 0, 2)
        with pytest.raises(InstanceTooLargeError):
            solve_bounded_memory(TWO_CYCLES, SPEC_26, 0, 4)

    def test_strategy_outcome_replays_the_witness(self):
        solution = solve_bounded_memory(TWO_CYCLES, SPEC_26, 0, 3)
        total = len(solution.witness.prefix) + 3 * len(solution.witness.cycle)
        replay = outcome(TWO_CYCLES, solution.strategy, total)
        expected = solution.witness.unroll(total)
        assert replay.nodes == expected

    def test_matches_full_strategy_enumeration_on_a_tiny_instance(self):
        # Exhaustive (choice, update) enumeration as an independent oracle.
        g = Graph.from_edges(2, [(0, 1), (1, 0), (1, 1)])
        spec = RewardSpec((1.0, 0.5), (0.4, 0.7))
        slots = 2
        best = -1.0
        node_slots = [(v, m) for v in range(2) for m in (1, 2)]
        choice_space = [g.successors(v) for v, _ in node_slots]
        update_space = [(1, 2)] * len(node_slots)
        for picks in itertools.product(*choice_space):
            for updates in itertools.product(*update_space):
                strategy = FiniteStrategy(
                    MemoryStructure(
                        slots,
                        1,
                        {
                            (m, v): updates[i]
                            for i, (v, m) in enumerate(node_slots)
                        },
                    ),
                    {
                        (v, m): picks[i]
                        for i, (v, m) in enumerate(node_slots)
                    },
                    0,
                )
                # Unroll far enough to read off the limiting cycle.
                path = outcome(g, strategy, 12)
                tail = path.nodes[-5:]
                # Find the cycle by locating the repeat of the last state.
                seen = {}
                cycle = None
                states = []
                node, slot = 0, 1
                for _ in range(10):
                    key = (node, slot)
                    if key in seen:
                        cycle = states[seen[key]:]
                        break
                    seen[key] = len(states)
                    states.append(key)
                    nxt = strategy.next_node(node, slot)
                    slot = strategy.memory.next_slot(slot, node)
                    node = nxt
                assert cycle is not None
                value = average_reward(
                    spec, Lasso((), tuple(v for v, _ in cycle))
                ).value
                best = max(best, value)
        solution = solve_bounded_memory(g, spec, 0, slots, max_nodes=2, max_memory=2)
        assert solution.value.value == pytest.approx(best, abs=1e-12)


class TestVisitationOrderInsufficiency:
    def test_counting_beats_every_order_based_route(self):
        # Remembering only the order of last visits can only produce these
        # six routes; counting repeat visits does strictly better.
        order_based = [
            ("", "abc"),
            ("abc", "ad"),
            ("", "abcad"),
            ("", "ad"),
            ("ad", "abc"),
            ("", "adabc"),
        ]
        best_order = max(
            average_reward(
                SPEC_26,
                validate_lasso(
                    TWO_CYCLES,
                    parse_route(TWO_CYCLES, prefix),
                    parse_route(TWO_CYCLES, cycle),
                ),
            ).value
            for prefix, cycle in order_based
        )
        counting = average_reward(
            SPEC_26,
            validate_lasso(TWO_CYCLES, [], parse_route(TWO_CYCLES, "abcabcad")),
        ).value
        assert counting > best_order + 1e-6


class TestMemoryErrorBound:
    def test_exact_power_gives_the_truncation_error(self):
        spec = RewardSpec.uniform(4, 1.0, 0.5)
        node_count, depth = 4, 3
        bound = memory_error_bound(spec, node_count, node_count ** (depth + 1))
        assert bound == pytest.approx(1.0 / 0.5 * 0.5**depth)

    def test_small_memory_bound_is_vacuous(self):
        bound = memory_error_bound(SPEC_26, 4, 3)
        assert bound == pytest.approx((1 / 0.74) * 0.26**-1)
        assert bound > 1 / 0.74  # exceeds the whole value range

    def test_small_survival_shrinks_the_bound(self):
        spec_small = RewardSpec.uniform(4, 1.0, 0.05)
        spec_large = RewardSpec.uniform(4, 1.0, 0.5)
        big_memory = 4**5
        assert memory_error_bound(spec_small, 4, big_memory) < memory_error_bound(
            spec_large, 4, big_memory
        )

    def test_preconditions(self):
        with pytest.raises(ValueError):
            memory_error_bound(SPEC_26, 4, 1)
        with pytest.raises(ValueError):
            memory_error_bound(RewardSpec.uniform(4, 1.0, 1.0), 4, 3)
        with pytest.raises(ValueError):
            memory_error_bound(SPEC_26, 1, 3)
