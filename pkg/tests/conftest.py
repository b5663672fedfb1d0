from __future__ import annotations

import random

import pytest
from hypothesis import HealthCheck, settings

from reward_routing import Graph, RewardSpec

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def two_cycles_graph() -> Graph:
    """Four nodes a..d: triangle a-b-c and 2-loop a-d sharing node a."""
    return Graph.from_edges(
        4, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 0)], labels="abcd"
    )


def ring_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def random_graph(
    rng: random.Random,
    node_count: int,
    min_out: int = 1,
    max_out: int | None = None,
) -> Graph:
    """Random digraph where every node keeps at least min_out successors."""
    max_out = max_out if max_out is not None else node_count
    edges = []
    for v in range(node_count):
        degree = rng.randint(min_out, max_out)
        for w in rng.sample(range(node_count), degree):
            edges.append((v, w))
    return Graph.from_edges(node_count, edges)


def spell(g: Graph, nodes) -> str:
    return "".join(g.label(v) for v in nodes)


def parse_route(g: Graph, text: str) -> list[int]:
    assert g.labels is not None
    return [g.labels.index(ch) for ch in text]


@pytest.fixture
def two_cycles() -> Graph:
    return two_cycles_graph()


@pytest.fixture
def uniform_spec():
    def make(node_count: int, lam: float, gamma: float) -> RewardSpec:
        return RewardSpec.uniform(node_count, lam, gamma)

    return make
