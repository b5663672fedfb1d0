"""Command-line interface: graph files in, result documents out.

Graph files are JSON: a ``nodes`` list ({id, lambda, gamma or
decay_profile}), an ``edges`` list of [from, to] id pairs, and optional
``defaults`` applied to nodes that omit lambda/gamma. Every command prints
a single JSON result document with the command echo, values, witnesses as
id sequences, and timing, using 12 significant digits so outputs are
stable across runs.

Exit codes: 0 success (or decision "yes"), 1 decision "no", 2 malformed
input, 3 state budget exceeded, 4 decision "unknown". The environment
variable ``RRP_STATE_BUDGET`` overrides the state cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Any, Sequence

from . import finite, infinite, memory, simulate
from .errors import RewardRoutingError, StateBudgetExceededError
from .graph import Graph, Lasso, Path, validate_lasso, validate_path
from .rewards import (
    TOLERANCE,
    DecayProfile,
    RewardSpec,
    average_reward,
    decayed_path_reward,
    path_reward,
)

EXIT_OK = 0
EXIT_NO = 1
EXIT_BAD_INPUT = 2
EXIT_BUDGET = 3
EXIT_UNKNOWN = 4


class GraphFileError(RewardRoutingError):
    """Malformed graph file; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class GraphModel:
    """A parsed graph file: structure, reward parameters, id mapping."""

    graph: Graph
    spec: RewardSpec
    profiles: tuple[DecayProfile | None, ...]
    ids: tuple[str, ...]

    def index_of(self, node_id: str) -> int:
        try:
            return self.ids.index(node_id)
        except ValueError:
            raise GraphFileError("start", f"unknown node id {node_id!r}") from None

    def id_path(self, nodes: Sequence[int]) -> list[str]:
        return [self.ids[v] for v in nodes]


def _require(obj: dict, key: str, field: str) -> Any:
    if key not in obj:
        raise GraphFileError(field, f"missing required key {key!r}")
    return obj[key]


def _parse_profile(raw: Any, field: str) -> DecayProfile:
    if not isinstance(raw, dict):
        raise GraphFileError(field, "decay profile must be an object")
    table = _require(raw, "table", f"{field}.table")
    if not isinstance(table, list) or not all(
        isinstance(x, (int, float)) for x in table
    ):
        raise GraphFileError(f"{field}.table", "must be a list of numbers")
    tail = _require(raw, "tail", f"{field}.tail")
    if tail not in ("geometric", "zero"):
        raise GraphFileError(f"{field}.tail", "must be 'geometric' or 'zero'")
    ratio = raw.get("ratio")
    try:
        return DecayProfile(
            tuple(float(x) for x in table),
            tail=tail,
            ratio=float(ratio) if ratio is not None else None,
        )
    except ValueError as exc:
        raise GraphFileError(field, str(exc)) from None


def parse_graph_document(doc: Any) -> GraphModel:
    """Validate a decoded graph document and build the model."""
    if not isinstance(doc, dict):
        raise GraphFileError("document", "top level must be an object")
    defaults = doc.get("defaults", {})
    if not isinstance(defaults, dict):
        raise GraphFileError("defaults", "must be an object")
    raw_nodes = _require(doc, "nodes", "nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise GraphFileError("nodes", "must be a non-empty list")

    ids: list[str] = []
    lams: list[float] = []
    gammas: list[float] = []
    profiles: list[DecayProfile | None] = []
    for i, raw in enumerate(raw_nodes):
        field = f"nodes[{i}]"
        if not isinstance(raw, dict):
            raise GraphFileError(field, "must be an object")
        node_id = _require(raw, "id", f"{field}.id")
        if not isinstance(node_id, str):
            raise GraphFileError(f"{field}.id", "must be a string")
        if node_id in ids:
            raise GraphFileError(f"{field}.id", f"duplicate id {node_id!r}")
        ids.append(node_id)

        lam = raw.get("lambda", defaults.get("lambda"))
        if lam is None:
            raise GraphFileError(
                f"{field}.lambda", "missing and no default provided"
            )
        if not isinstance(lam, (int, float)) or lam < 0:
            raise GraphFileError(f"{field}.lambda", "must be a non-negative number")
        lams.append(float(lam))

        gamma = raw.get("gamma")
        profile_raw = raw.get("decay_profile")
        if gamma is not None and profile_raw is not None:
            raise GraphFileError(
                field, "gamma and decay_profile are mutually exclusive"
            )
        if profile_raw is not None:
            profiles.append(_parse_profile(profile_raw, f"{field}.decay_profile"))
            gammas.append(1.0)  # placeholder, unused behind a profile
            continue
        if gamma is None:
            gamma = defaults.get("gamma")
        if gamma is None:
            raise GraphFileError(
                f"{field}.gamma", "missing and no default provided"
            )
        if not isinstance(gamma, (int, float)) or not 0 < gamma <= 1:
            raise GraphFileError(f"{field}.gamma", "must be a number in (0, 1]")
        gammas.append(float(gamma))
        profiles.append(None)

    raw_edges = _require(doc, "edges", "edges")
    if not isinstance(raw_edges, list):
        raise GraphFileError("edges", "must be a list")
    edges: list[tuple[int, int]] = []
    for i, raw in enumerate(raw_edges):
        field = f"edges[{i}]"
        if not isinstance(raw, list) or len(raw) != 2:
            raise GraphFileError(field, "must be a [from, to] pair")
        endpoints = []
        for endpoint in raw:
            if endpoint not in ids:
                raise GraphFileError(field, f"unknown node id {endpoint!r}")
            endpoints.append(ids.index(endpoint))
        edges.append((endpoints[0], endpoints[1]))

    graph = Graph.from_edges(len(ids), edges, labels=ids)
    spec = RewardSpec(tuple(lams), tuple(gammas))
    return GraphModel(graph, spec, tuple(profiles), tuple(ids))


def load_graph_file(path: str) -> GraphModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise GraphFileError("graph", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise GraphFileError("graph", f"invalid JSON in {path}: {exc}") from None
    return parse_graph_document(doc)


def dump_graph_document(model: GraphModel) -> dict:
    """Serialize a model back to the graph file schema (round-trips)."""
    nodes = []
    for v, node_id in enumerate(model.ids):
        entry: dict[str, Any] = {"id": node_id, "lambda": model.spec.lam[v]}
        profile = model.profiles[v]
        if profile is not None:
            body: dict[str, Any] = {"table": list(profile.table), "tail": profile.tail}
            if profile.ratio is not None:
                body["ratio"] = profile.ratio
            entry["decay_profile"] = body
        else:
            entry["gamma"] = model.spec.gamma[v]
        nodes.append(entry)
    edges = [
        [model.ids[u], model.ids[v]] for u, v in model.graph.edges()
    ]
    return {"nodes": nodes, "edges": edges}


def _round_floats(value: Any) -> Any:
    """12 significant digits on every float, recursively."""
    if isinstance(value, float):
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round_floats(v) for v in value]
    return value


def _emit(document: dict) -> None:
    print(json.dumps(_round_floats(document), indent=2, sort_keys=True))


def _state_budget() -> int:
    raw = os.environ.get("RRP_STATE_BUDGET")
    if raw is None:
        return infinite.DEFAULT_STATE_BUDGET
    try:
        budget = int(raw)
    except ValueError:
        raise GraphFileError("RRP_STATE_BUDGET", f"not an integer: {raw!r}") from None
    if budget < 1:
        raise GraphFileError("RRP_STATE_BUDGET", "must be positive")
    return budget


def _base_document(command: str, args: argparse.Namespace, model: GraphModel) -> dict:
    return {
        "command": command,
        "arguments": {
            key: value
            for key, value in sorted(vars(args).items())
            if key != "func" and value is not None
        },
        "node_order": list(model.ids),
    }


def _check_rescore(emitted: float, replayed: float) -> None:
    if abs(emitted - replayed) > TOLERANCE * max(1.0, abs(emitted)):
        raise RuntimeError(
            f"witness re-scores to {replayed}, document says {emitted}"
        )


def _lasso_document(model: GraphModel, lasso: Lasso) -> dict:
    return {
        "prefix": model.id_path(lasso.prefix),
        "cycle": model.id_path(lasso.cycle),
    }


def cmd_finite(args: argparse.Namespace) -> int:
    model = load_graph_file(args.graph)
    v0 = model.index_of(args.start)
    started = time.perf_counter()
    if args.decay:
        if any(p is None for p in model.profiles):
            raise GraphFileError(
                "nodes", "--decay requires a decay_profile on every node"
            )
        solution = finite.solve_finite_decay(
            model.graph,
            model.spec.lam,
            [p for p in model.profiles if p is not None],
            v0,
            args.horizon,
            state_budget=_state_budget(),
        )
        replay = decayed_path_reward(
            [p for p in model.profiles if p is not None],
            model.spec.lam,
            solution.witness,
        ).value
    else:
        if any(p is not None for p in model.profiles):
            raise GraphFileError(
                "nodes", "graph declares decay profiles; pass --decay"
            )
        solution = finite.solve_finite(
            model.graph, model.spec, v0, args.horizon, state_budget=_state_budget()
        )
        replay = path_reward(model.spec, solution.witness).value
    elapsed = time.perf_counter() - started
    validate_path(model.graph, solution.witness.nodes)
    _check_rescore(solution.value.value, replay)
    doc = _base_document("finite", args, model)
    doc.update(
        {
            "value": solution.value.value,
            "horizon": args.horizon,
            "witness": {"path": model.id_path(solution.witness.nodes)},
            "state_count": solution.states_expanded,
            "wall_time_seconds": elapsed,
        }
    )
    _emit(doc)
    return EXIT_OK


def _bracket_document(model: GraphModel, bracket: infinite.ValueBracket) -> dict:
    return {
        "r_under": bracket.r_under,
        "r_over": bracket.r_over,
        "epsilon_achieved": bracket.epsilon_achieved,
        "truncation_depth": bracket.depth,
        "witness_under": _lasso_document(model, bracket.pi_under),
        "witness_over": _lasso_document(model, bracket.pi_over),
    }


def _require_plain_gammas(model: GraphModel) -> None:
    if any(p is not None for p in model.profiles):
        raise GraphFileError(
            "nodes", "this command needs gamma values, not decay profiles"
        )


def cmd_infinite(args: argparse.Namespace) -> int:
    model = load_graph_file(args.graph)
    _require_plain_gammas(model)
    v0 = model.index_of(args.start)
    doc = _base_document("infinite", args, model)
    started = time.perf_counter()
    if all(g == 1.0 for g in model.spec.gamma):
        solution = infinite.solve_nondiscounted(model.graph, model.spec.lam, v0)
        elapsed = time.perf_counter() - started
        _check_rescore(
            solution.value.value,
            average_reward(model.spec, solution.witness).value,
        )
        doc.update(
            {
                "notice": "no decay anywhere; solved exactly instead",
                "value": solution.value.value,
                "witness": _lasso_document(model, solution.witness),
                "wall_time_seconds": elapsed,
            }
        )
        _emit(doc)
        return EXIT_OK
    bracket = infinite.solve_infinite_approx(
        model.graph, model.spec, v0, args.epsilon, state_budget=_state_budget()
    )
    elapsed = time.perf_counter() - started
    _check_rescore(
        bracket.r_under, average_reward(model.spec, bracket.pi_under).value
    )
    doc.update(
        {
            "bracket": _bracket_document(model, bracket),
            "state_count": bracket.state_count,
            "wall_time_seconds": elapsed,
        }
    )
    _emit(doc)
    return EXIT_OK


def cmd_decide(args: argparse.Namespace) -> int:
    model = load_graph_file(args.graph)
    _require_plain_gammas(model)
    v0 = model.index_of(args.start)
    started = time.perf_counter()
    decision, bracket = infinite.decide_infinite_value(
        model.graph,
        model.spec,
        v0,
        args.threshold,
        args.epsilon,
        state_budget=_state_budget(),
    )
    elapsed = time.perf_counter() - started
    doc = _base_document("decide", args, model)
    doc.update(
        {
            "decision": decision,
            "threshold": args.threshold,
            "bracket": _bracket_document(model, bracket),
            "state_count": bracket.state_count,
            "wall_time_seconds": elapsed,
        }
    )
    _emit(doc)
    if decision == "yes":
        return EXIT_OK
    if decision == "no":
        return EXIT_NO
    return EXIT_UNKNOWN


def cmd_nondiscounted(args: argparse.Namespace) -> int:
    model = load_graph_file(args.graph)
    v0 = model.index_of(args.start)
    started = time.perf_counter()
    solution = infinite.solve_nondiscounted(model.graph, model.spec.lam, v0)
    elapsed = time.perf_counter() - started
    doc = _base_document("nondiscounted", args, model)
    doc.update(
        {
            "value": solution.value.value,
            "component": model.id_path(solution.component),
            "witness": _lasso_document(model, solution.witness),
            "wall_time_seconds": elapsed,
        }
    )
    _emit(doc)
    return EXIT_OK


def cmd_bounded(args: argparse.Namespace) -> int:
    model = load_graph_file(args.graph)
    _require_plain_gammas(model)
    v0 = model.index_of(args.start)
    started = time.perf_counter()
    solution = memory.solve_bounded_memory(
        model.graph, model.spec, v0, args.memory
    )
    elapsed = time.perf_counter() - started
    _check_rescore(
        solution.value.value,
        average_reward(model.spec, solution.witness).value,
    )
    doc = _base_document("bounded", args, model)
    doc.update(
        {
            "value": solution.value.value,
            "memory": args.memory,
            "witness": _lasso_document(model, solution.witness),
            "wall_time_seconds": elapsed,
        }
    )
    _emit(doc)
    return EXIT_OK


def _parse_id_list(model: GraphModel, raw: str, field: str) -> list[int]:
    nodes = []
    for part in raw.split(","):
        part = part.strip()
        if part not in model.ids:
            raise GraphFileError(field, f"unknown node id {part!r}")
        nodes.append(model.ids.index(part))
    return nodes


def cmd_simulate(args: argparse.Namespace) -> int:
    model = load_graph_file(args.graph)
    _require_plain_gammas(model)
    doc = _base_document("simulate", args, model)
    cfg = simulate.SimConfig(
        trials=args.trials,
        seed=args.seed,
        generation=args.mode,
        horizon=args.horizon,
    )
    started = time.perf_counter()
    if args.path is not None:
        if args.cycle is not None or args.prefix is not None:
            raise GraphFileError("path", "--path excludes --prefix/--cycle")
        nodes = _parse_id_list(model, args.path, "path")
        route = validate_path(model.graph, nodes)
        result = simulate.simulate_finite_reward(model.graph, model.spec, route, cfg)
        expected = path_reward(model.spec, route).value
        doc["route"] = {"path": model.id_path(route.nodes)}
    else:
        if args.cycle is None:
            raise GraphFileError("cycle", "need --path or --cycle")
        prefix = (
            _parse_id_list(model, args.prefix, "prefix")
            if args.prefix is not None
            else []
        )
        cycle = _parse_id_list(model, args.cycle, "cycle")
        lasso = validate_lasso(model.graph, prefix, cycle)
        result = simulate.simulate_average_reward(model.graph, model.spec, lasso, cfg)
        expected = average_reward(model.spec, lasso).value
        doc["route"] = _lasso_document(model, lasso)
    elapsed = time.perf_counter() - started
    doc.update(
        {
            "mean": result.mean,
            "stderr": result.stderr,
            "trials": result.trials,
            "seed": result.seed,
            "closed_form": expected,
            "wall_time_seconds": elapsed,
        }
    )
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reward-routing",
        description="Optimal reward collection on graphs with decaying rewards.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--graph", required=True, help="graph file (JSON)")
        p.add_argument("--start", required=True, help="start node id")

    p_finite = sub.add_parser("finite", help="optimal total reward over a horizon")
    common(p_finite)
    p_finite.add_argument("--horizon", type=int, required=True)
    p_finite.add_argument(
        "--decay", action="store_true", help="use explicit decay profiles"
    )
    p_finite.set_defaults(func=cmd_finite)

    p_inf = sub.add_parser("infinite", help="bracket the optimal long-run average")
    common(p_inf)
    p_inf.add_argument("--epsilon", type=float, required=True)
    p_inf.set_defaults(func=cmd_infinite)

    p_dec = sub.add_parser("decide", help="threshold decision for the long-run average")
    common(p_dec)
    p_dec.add_argument("--threshold", type=float, required=True)
    p_dec.add_argument("--epsilon", type=float, required=True)
    p_dec.set_defaults(func=cmd_decide)

    p_non = sub.add_parser("nondiscounted", help="exact solver when nothing decays")
    common(p_non)
    p_non.set_defaults(func=cmd_nondiscounted)

    p_bnd = sub.add_parser("bounded", help="best strategy with bounded memory")
    common(p_bnd)
    p_bnd.add_argument("--memory", type=int, required=True)
    p_bnd.set_defaults(func=cmd_bounded)

    p_sim = sub.add_parser("simulate", help="Monte Carlo check of a route's reward")
    p_sim.add_argument("--graph", required=True)
    p_sim.add_argument("--path", help="comma-separated node ids (finite total)")
    p_sim.add_argument("--prefix", help="comma-separated node ids before the cycle")
    p_sim.add_argument("--cycle", help="comma-separated node ids (long-run average)")
    p_sim.add_argument("--trials", type=int, default=10000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument(
        "--mode", choices=("poisson", "deterministic"), default="poisson"
    )
    p_sim.add_argument("--horizon", type=int, help="steps for the average mode")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GraphFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except StateBudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except RewardRoutingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
