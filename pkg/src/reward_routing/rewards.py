"""The reward and cost algebra for decaying, accumulating node rewards.

Each node ``v`` generates an expected reward ``lam[v]`` per step; an
uncollected reward survives one more step with probability ``gamma[v]``.
Visiting a node collects everything that accumulated there since the
previous visit. The closed forms here evaluate finite paths exactly and
ultimately periodic paths in their steady state.

Closed forms are preferred over naive geometric summation, except very
close to ``gamma = 1`` where the explicit sum avoids cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import NodeVariantSpecError, ProfileTableExhaustedError
from .graph import Graph, Lasso, Path, last_visit, longest_simple_cycle

#: Comparison tolerance used throughout the library.
TOLERANCE = 1e-9

# Below this distance from 1 the closed form (1 - g**q) / (1 - g) loses
# precision to cancellation; sum explicitly instead.
_NEAR_ONE = 1e-6


def geometric_series(gamma: float, count: int) -> float:
    """Sum of ``gamma ** j`` for ``j in range(count)``, stable near 1."""
    if count <= 0:
        return 0.0
    if gamma == 1.0:
        return float(count)
    if 1.0 - gamma < _NEAR_ONE:
        return math.fsum(gamma**j for j in range(count))
    return (1.0 - gamma**count) / (1.0 - gamma)


@dataclass(frozen=True)
class RewardSpec:
    """Per-node expected generation rates and survival probabilities."""

    lam: tuple[float, ...]
    gamma: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lam) != len(self.gamma):
            raise ValueError("lam and gamma must have equal length")
        if not self.lam:
            raise ValueError("spec needs at least one node")
        for v, value in enumerate(self.lam):
            if value < 0:
                raise ValueError(f"lam[{v}] must be non-negative")
        for v, value in enumerate(self.gamma):
            if not 0.0 < value <= 1.0:
                raise ValueError(f"gamma[{v}] must lie in (0, 1]")

    @staticmethod
    def uniform(node_count: int, lam: float, gamma: float) -> "RewardSpec":
        return RewardSpec((lam,) * node_count, (gamma,) * node_count)

    @property
    def node_count(self) -> int:
        return len(self.lam)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.lam)) == 1 and len(set(self.gamma)) == 1

    def uniform_gamma(self) -> float:
        """The shared survival probability; errors if it varies by node."""
        if len(set(self.gamma)) != 1:
            raise NodeVariantSpecError("gamma differs between nodes")
        return self.gamma[0]

    def uniform_lambda(self) -> float:
        if len(set(self.lam)) != 1:
            raise NodeVariantSpecError("lam differs between nodes")
        return self.lam[0]


@dataclass(frozen=True)
class RewardValue:
    """A reward amount tagged with its flavor.

    ``kind`` is ``"finite_sum"`` (total over a horizon, which is then set)
    or ``"limit_average"`` (per-step long-run average).
    """

    value: float
    kind: str
    horizon: int | None = None

    def __float__(self) -> float:
        return self.value


def accumulated_reward(spec: RewardSpec, p: Path, t: int, v: int) -> float:
    """Expected reward waiting at node ``v`` at time ``t`` along ``p``.

    Everything generated at ``v`` since its previous visit, decayed by its
    age: ``lam * (1 + gamma + ... + gamma**(age-1))`` where ``age`` is
    :func:`last_visit`.
    """
    age = last_visit(p, t, v)
    return spec.lam[v] * geometric_series(spec.gamma[v], age)


def _visit_ages(nodes: Sequence[int]) -> list[int]:
    """Age of the occupied node at each position (single forward pass)."""
    seen: dict[int, int] = {}
    ages = []
    for t, v in enumerate(nodes):
        ages.append(t - seen[v] if v in seen else t + 1)
        seen[v] = t
    return ages


def path_reward(spec: RewardSpec, p: Path) -> RewardValue:
    """Total expected reward collected along a finite path."""
    total = math.fsum(
        spec.lam[v] * geometric_series(spec.gamma[v], age)
        for v, age in zip(p.nodes, _visit_ages(p.nodes))
    )
    return RewardValue(total, "finite_sum", horizon=p.length)


def path_cost(spec: RewardSpec, p: Path) -> float:
    """Total cost ``sum(gamma ** age)`` of a finite path.

    Only defined for node-invariant ``gamma``; the cost is the reward's
    exact complement: ``reward = (N+1) * lam / (1-gamma) - lam / (1-gamma) * cost``.
    """
    gamma = spec.uniform_gamma()
    return math.fsum(gamma**age for age in _visit_ages(p.nodes))


def _steady_cycle_ages(lasso: Lasso) -> list[int]:
    """Per-position visit ages over one steady period of the lasso.

    Unrolls the prefix and up to four periods of the cycle; the age vector
    must repeat between consecutive periods (it always does, from the
    second period on), otherwise this fails loudly.
    """
    seen: dict[int, int] = {}
    t = 0
    for v in lasso.prefix:
        seen[v] = t
        t += 1
    previous: list[int] | None = None
    for _ in range(4):
        ages = []
        for v in lasso.cycle:
            ages.append(t - seen[v] if v in seen else t + 1)
            seen[v] = t
            t += 1
        if previous is not None and ages == previous:
            return ages
        previous = ages
    raise RuntimeError("visit ages did not reach a steady state")


def average_reward(spec: RewardSpec, lasso: Lasso) -> RewardValue:
    """Exact limit-average expected reward of an ultimately periodic path.

    The average over one steady period of the cycle; the prefix only
    shifts which period is steady and never affects the value.
    """
    ages = _steady_cycle_ages(lasso)
    total = math.fsum(
        spec.lam[v] * geometric_series(spec.gamma[v], age)
        for v, age in zip(lasso.cycle, ages)
    )
    return RewardValue(total / len(lasso.cycle), "limit_average")


def average_cost(spec: RewardSpec, lasso: Lasso) -> float:
    """Limit-average cost of an ultimately periodic path (node-invariant)."""
    gamma = spec.uniform_gamma()
    ages = _steady_cycle_ages(lasso)
    return math.fsum(gamma**age for age in ages) / len(lasso.cycle)


@dataclass(frozen=True)
class DecayProfile:
    """An explicit decay sequence: fraction of a reward left after ``i`` steps.

    ``table`` starts at 1 and decreases strictly. Past the table the profile
    follows the tail rule: ``"geometric"`` continues from the last entry
    with the given ratio, ``"zero"`` drops to nothing, and ``None`` means
    reading past the table is an error.
    """

    table: tuple[float, ...]
    tail: str | None = None
    ratio: float | None = None

    def __post_init__(self) -> None:
        if not self.table or self.table[0] != 1.0:
            raise ValueError("profile table must start at 1.0")
        for i in range(1, len(self.table)):
            if not 0.0 < self.table[i] < self.table[i - 1]:
                raise ValueError("profile table must decrease strictly toward 0")
        if self.tail not in (None, "geometric", "zero"):
            raise ValueError(f"unknown tail rule {self.tail!r}")
        if self.tail == "geometric":
            if self.ratio is None or not 0.0 < self.ratio < 1.0:
                raise ValueError("geometric tail needs a ratio in (0, 1)")
        elif self.ratio is not None:
            raise ValueError("ratio only applies to the geometric tail")
        # Cumulative sums of the table for O(1) prefix queries.
        acc, sums = 0.0, []
        for value in self.table:
            acc += value
            sums.append(acc)
        object.__setattr__(self, "_table_sums", tuple(sums))

    @staticmethod
    def geometric(gamma: float) -> "DecayProfile":
        """The multiplicative profile ``gamma ** i`` (requires ``gamma < 1``)."""
        return DecayProfile((1.0,), tail="geometric", ratio=gamma)

    def value(self, i: int) -> float:
        """Remaining fraction after ``i`` steps of decay."""
        if i < 0:
            raise IndexError("decay index must be non-negative")
        if i < len(self.table):
            return self.table[i]
        if self.tail == "zero":
            return 0.0
        if self.tail == "geometric":
            assert self.ratio is not None
            return self.table[-1] * self.ratio ** (i - len(self.table) + 1)
        raise ProfileTableExhaustedError(
            f"profile table has {len(self.table)} entries, index {i} requested"
        )

    def sum_first(self, count: int) -> float:
        """Sum of the first ``count`` profile values."""
        if count <= 0:
            return 0.0
        sums: tuple[float, ...] = self._table_sums  # type: ignore[attr-defined]
        if count <= len(self.table):
            return sums[count - 1]
        if self.tail == "zero":
            return sums[-1]
        if self.tail == "geometric":
            assert self.ratio is not None
            extra = count - len(self.table)
            return sums[-1] + self.table[-1] * self.ratio * geometric_series(
                self.ratio, extra
            )
        raise ProfileTableExhaustedError(
            f"profile table has {len(self.table)} entries, {count} values requested"
        )

    def sum_range(self, i: int, j: int) -> float:
        """Sum of profile values at indices ``i .. j`` inclusive."""
        if i > j:
            return 0.0
        return self.sum_first(j + 1) - self.sum_first(i)


def decayed_path_reward(
    profiles: Sequence[DecayProfile], lam: Sequence[float], p: Path
) -> RewardValue:
    """Total expected reward along a path under per-node decay profiles.

    Each visit collects ``lam[v]`` units generated at the current and the
    previous ``age - 1`` steps, decayed by ``profile(0) .. profile(age-1)``.
    With a geometric profile this reproduces :func:`path_reward` exactly.
    """
    total = math.fsum(
        lam[v] * profiles[v].sum_first(age)
        for v, age in zip(p.nodes, _visit_ages(p.nodes))
    )
    return RewardValue(total, "finite_sum", horizon=p.length)


def average_reward_bounds(
    g: Graph, spec: RewardSpec, v0: int = 0
) -> tuple[float, float]:
    """Closed-form bounds on the optimal limit-average reward.

    Lower bound: the value of repeating a longest simple cycle (length
    ``p``); upper bound: the same form with the full node count. Uses the
    exact cycle search, so only suitable at desk scale. Node-invariant
    parameters required.
    """
    gamma = spec.uniform_gamma()
    lam = spec.uniform_lambda()
    p = longest_simple_cycle(g).length
    n = g.node_count
    if gamma == 1.0:
        return lam * p, lam * n
    lower = lam * (1.0 - gamma**p) / (1.0 - gamma)
    upper = lam * (1.0 - gamma**n) / (1.0 - gamma)
    return lower, upper


def make_step_reward(spec: RewardSpec) -> Callable[[int, int], float]:
    """Memoized ``(node, age) -> collected reward`` for the DP solvers."""
    cache: dict[tuple[int, int], float] = {}

    def step(v: int, age: int) -> float:
        key = (v, age)
        hit = cache.get(key)
        if hit is None:
            hit = spec.lam[v] * geometric_series(spec.gamma[v], age)
            cache[key] = hit
        return hit

    return step


def make_step_reward_decay(
    profiles: Sequence[DecayProfile], lam: Sequence[float]
) -> Callable[[int, int], float]:
    """Memoized step reward under explicit decay profiles."""
    cache: dict[tuple[int, int], float] = {}

    def step(v: int, age: int) -> float:
        key = (v, age)
        hit = cache.get(key)
        if hit is None:
            hit = lam[v] * profiles[v].sum_first(age)
            cache[key] = hit
        return hit

    return step
