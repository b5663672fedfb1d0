from __future__ import annotations

import io
import json
import os
from contextlib import redirect_stderr, redirect_stdout
from importlib import resources

import pytest

from reward_routing import (
    average_reward,
    path_reward,
    validate_lasso,
    validate_path,
)
from reward_routing.cli import (
    EXIT_BAD_INPUT,
    EXIT_BUDGET,
    EXIT_NO,
    EXIT_OK,
    EXIT_UNKNOWN,
    GraphFileError,
    dump_graph_document,
    load_graph_file,
    main,
    parse_graph_document,
)

FIXTURES = resources.files("reward_routing") / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


def run(argv: list[str]) -> tuple[int, dict | None, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    payload = out.getvalue()
    return code, json.loads(payload) if payload else None, err.getvalue()


def normalized(doc: dict) -> dict:
    doc = dict(doc)
    doc.pop("wall_time_seconds", None)
    doc["arguments"] = dict(doc["arguments"])
    doc["arguments"]["graph"] = os.path.basename(doc["arguments"]["graph"])
    return doc


def golden(name: str) -> dict:
    with open(fixture_path(f"golden/{name}")) as handle:
        return json.load(handle)


class TestGraphFiles:
    def test_round_trip_is_identity(self):
        model = load_graph_file(fixture_path("two_cycles_gamma_0.5.json"))
        doc = dump_graph_document(model)
        again = parse_graph_document(doc)
        assert dump_graph_document(again) == doc

    def test_missing_nodes_named(self):
        with pytest.raises(GraphFileError) as err:
            parse_graph_document({"edges": []})
        assert err.value.field == "nodes"

    def test_bad_gamma_is_named_with_its_index(self):
        doc = {
            "nodes": [{"id": "a", "lambda": 1.0, "gamma": 2.0}],
            "edges": [["a", "a"]],
        }
        with pytest.raises(GraphFileError) as err:
            parse_graph_document(doc)
        assert err.value.field == "nodes[0].gamma"

    def test_duplicate_id_rejected(self):
        doc = {
            "nodes": [
                {"id": "a", "lambda": 1, "gamma": 0.5},
                {"id": "a", "lambda": 1, "gamma": 0.5},
            ],
            "edges": [],
        }
        with pytest.raises(GraphFileError) as err:
            parse_graph_document(doc)
        assert err.value.field == "nodes[1].id"

    def test_unknown_edge_endpoint(self):
        doc = {
            "nodes": [{"id": "a", "lambda": 1, "gamma": 0.5}],
            "edges": [["a", "z"]],
        }
        with pytest.raises(GraphFileError) as err:
            parse_graph_document(doc)
        assert err.value.field == "edges[0]"

    def test_gamma_and_profile_conflict(self):
        doc = {
            "nodes": [
                {
                    "id": "a",
                    "lambda": 1,
                    "gamma": 0.5,
                    "decay_profile": {"table": [1.0], "tail": "zero"},
                }
            ],
            "edges": [["a", "a"]],
        }
        with pytest.raises(GraphFileError) as err:
            parse_graph_document(doc)
        assert err.value.field == "nodes[0]"

    def test_defaults_fill_missing_parameters(self):
        model = load_graph_file(fixture_path("two_cycles_gamma_0.26.json"))
        assert model.spec.gamma == (0.26,) * 4
        assert model.spec.lam == (1.0,) * 4


class TestCommands:
    def test_finite_matches_golden(self):
        code, doc, _ = run(
            [
                "finite",
                "--graph", fixture_path("two_cycles_no_decay.json"),
                "--start", "a",
                "--horizon", "6",
            ]
        )
        assert code == EXIT_OK
        assert normalized(doc) == golden("finite_no_decay_h6.json")

    def test_finite_witness_revalidates_and_rescores(self):
        code, doc, _ = run(
            [
                "finite",
                "--graph", fixture_path("two_cycles_gamma_0.5.json"),
                "--start", "a",
                "--horizon", "5",
            ]
        )
        assert code == EXIT_OK
        model = load_graph_file(fixture_path("two_cycles_gamma_0.5.json"))
        nodes = [model.index_of(i) for i in doc["witness"]["path"]]
        route = validate_path(model.graph, nodes)
        assert path_reward(model.spec, route).value == pytest.approx(
            doc["value"], abs=1e-9
        )

    def test_horizon_zero(self):
        code, doc, _ = run(
            [
                "finite",
                "--graph", fixture_path("two_cycles_gamma_0.5.json"),
                "--start", "a",
                "--horizon", "0",
            ]
        )
        assert code == EXIT_OK
        assert doc["value"] == pytest.approx(1.0, abs=1e-12)

    def test_infinite_matches_golden(self):
        code, doc, _ = run(
            [
                "infinite",
                "--graph", fixture_path("two_cycles_gamma_0.26.json"),
                "--start", "a",
                "--epsilon", "1e-5",
            ]
        )
        assert code == EXIT_OK
        assert normalized(doc) == golden("infinite_gamma_0.26.json")

    def test_infinite_witness_revalidates(self):
        code, doc, _ = run(
            [
                "infinite",
                "--graph", fixture_path("two_cycles_gamma_0.26.json"),
                "--start", "a",
                "--epsilon", "1e-4",
            ]
        )
        model = load_graph_file(fixture_path("two_cycles_gamma_0.26.json"))
        under = doc["bracket"]["witness_under"]
        lasso = validate_lasso(
            model.graph,
            [model.index_of(i) for i in under["prefix"]],
            [model.index_of(i) for i in under["cycle"]],
        )
        assert average_reward(model.spec, lasso).value == pytest.approx(
            doc["bracket"]["r_under"], abs=1e-9
        )

    def test_infinite_routes_to_exact_solver_without_decay(self):
        code, doc, _ = run(
            [
                "infinite",
                "--graph", fixture_path("two_cycles_no_decay.json"),
                "--start", "a",
                "--epsilon", "1e-4",
            ]
        )
        assert code == EXIT_OK
        assert "notice" in doc
        assert doc["value"] == 4.0

    def test_nondiscounted_matches_golden(self):
        code, doc, _ = run(
            [
                "nondiscounted",
                "--graph", fixture_path("two_cycles_no_decay.json"),
                "--start", "a",
            ]
        )
        assert code == EXIT_OK
        assert normalized(doc) == golden("nondiscounted.json")

    def test_decide_exit_codes(self):
        base = [
            "decide",
            "--graph", fixture_path("two_cycles_gamma_0.26.json"),
            "--start", "a",
        ]
        yes, doc_yes, _ = run(base + ["--threshold", "0", "--epsilon", "1e-3"])
        assert yes == EXIT_OK and doc_yes["decision"] == "yes"
        no, doc_no, _ = run(base + ["--threshold", "10", "--epsilon", "1e-3"])
        assert no == EXIT_NO and doc_no["decision"] == "no"
        unknown, doc_unknown, _ = run(
            base + ["--threshold", "1.32765", "--epsilon", "1"]
        )
        assert unknown == EXIT_UNKNOWN and doc_unknown["decision"] == "unknown"

    def test_bounded_finds_the_counting_route(self):
        code, doc, _ = run(
            [
                "bounded",
                "--graph", fixture_path("two_cycles_gamma_0.26.json"),
                "--start", "a",
                "--memory", "3",
            ]
        )
        assert code == EXIT_OK
        assert len(doc["witness"]["cycle"]) == 8

    def test_simulate_deterministic_matches_golden(self):
        code, doc, _ = run(
            [
                "simulate",
                "--graph", fixture_path("two_cycles_gamma_0.5.json"),
                "--path", "a,d,a,b,c,a,d",
                "--mode", "deterministic",
                "--trials", "1",
                "--seed", "0",
            ]
        )
        assert code == EXIT_OK
        assert normalized(doc) == golden("simulate_deterministic.json")

    def test_simulate_matches_finite_command_exactly(self):
        args = [
            "--graph", fixture_path("two_cycles_gamma_0.5.json"),
            "--start", "a",
            "--horizon", "6",
        ]
        _, finite_doc, _ = run(["finite"] + args)
        route = ",".join(finite_doc["witness"]["path"])
        _, sim_doc, _ = run(
            [
                "simulate",
                "--graph", fixture_path("two_cycles_gamma_0.5.json"),
                "--path", route,
                "--mode", "deterministic",
                "--trials", "1",
                "--seed", "0",
            ]
        )
        assert sim_doc["mean"] == pytest.approx(finite_doc["value"], abs=1e-9)

    def test_infinite_high_survival_bracket(self, tmp_path):
        doc = {
            "defaults": {"lambda": 1.0, "gamma": 0.9},
            "nodes": [{"id": i} for i in "abcd"],
            "edges": [["a", "b"], ["b", "c"], ["c", "a"], ["a", "d"], ["d", "a"]],
        }
        graph_file = tmp_path / "high_survival.json"
        graph_file.write_text(json.dumps(doc))
        code, out, _ = run(
            ["infinite", "--graph", str(graph_file), "--start", "a",
             "--epsilon", "1e-4"]
        )
        assert code == EXIT_OK
        gamma = 0.9
        optimum = (1 / (1 - gamma)) * (
            1 - (gamma**2 + gamma**3 + 3 * gamma**5) / 5
        )
        bracket = out["bracket"]
        assert bracket["r_under"] - 1e-9 <= optimum <= bracket["r_over"] + 1e-9
        cycle = "".join(bracket["witness_under"]["cycle"])
        assert sorted(cycle) == sorted("abcad")

    def test_finite_with_decay_profiles(self, tmp_path):
        doc = {
            "nodes": [
                {
                    "id": i,
                    "lambda": 1.0,
                    "decay_profile": {"table": [1.0, 0.5, 0.25], "tail": "zero"},
                }
                for i in "abcd"
            ],
            "edges": [["a", "b"], ["b", "c"], ["c", "a"], ["a", "d"], ["d", "a"]],
        }
        graph_file = tmp_path / "profiles.json"
        graph_file.write_text(json.dumps(doc))
        code, out, _ = run(
            ["finite", "--graph", str(graph_file), "--start", "a",
             "--horizon", "4", "--decay"]
        )
        assert code == EXIT_OK
        assert out["value"] > 0
        # The same file without --decay is refused, and vice versa.
        code2, _, err = run(
            ["finite", "--graph", str(graph_file), "--start", "a", "--horizon", "4"]
        )
        assert code2 == EXIT_BAD_INPUT and "decay" in err
        code3, _, err3 = run(
            ["finite", "--graph", fixture_path("two_cycles_gamma_0.5.json"),
             "--start", "a", "--horizon", "4", "--decay"]
        )
        assert code3 == EXIT_BAD_INPUT and "decay_profile" in err3

    def test_simulate_average_mode(self):
        code, doc, _ = run(
            [
                "simulate",
                "--graph", fixture_path("two_cycles_gamma_0.5.json"),
                "--cycle", "a,b,c",
                "--trials", "400",
                "--seed", "3",
                "--horizon", "1000",
            ]
        )
        assert code == EXIT_OK
        assert abs(doc["mean"] - doc["closed_form"]) <= 4 * doc["stderr"] + 1e-2


class TestExitCodes:
    def test_missing_file_is_bad_input(self):
        code, _, err = run(
            ["finite", "--graph", "/no/such/file.json", "--start", "a", "--horizon", "1"]
        )
        assert code == EXIT_BAD_INPUT
        assert "graph" in err

    def test_unknown_start_is_bad_input(self):
        code, _, err = run(
            [
                "finite",
                "--graph", fixture_path("two_cycles_gamma_0.5.json"),
                "--start", "z",
                "--horizon", "1",
            ]
        )
        assert code == EXIT_BAD_INPUT
        assert "start" in err

    def test_budget_env_override(self, monkeypatch):
        monkeypatch.setenv("RRP_STATE_BUDGET", "10")
        code, _, err = run(
            [
                "infinite",
                "--graph", fixture_path("two_cycles_gamma_0.26.json"),
                "--start", "a",
                "--epsilon", "1e-5",
            ]
        )
        assert code == EXIT_BUDGET
        assert "states" in err

    def test_malformed_budget_env(self, monkeypatch):
        monkeypatch.setenv("RRP_STATE_BUDGET", "many")
        code, _, _ = run(
            [
                "infinite",
                "--graph", fixture_path("two_cycles_gamma_0.26.json"),
                "--start", "a",
                "--epsilon", "1e-3",
            ]
        )
        assert code == EXIT_BAD_INPUT
