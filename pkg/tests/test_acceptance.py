"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Everything here runs offline: embedded graphs, replay gateways, no sockets.
Run with `pytest tests/test_acceptance.py -v -s` to see the criterion lines.
"""

import contextlib
import json
import socket
import time

import pytest

from graphqa.backend import EmbeddedBackend, OutcomeClass, QueryOutcome, classify
from graphqa.cypher import ResultTable, evaluate, parse
from graphqa.evalharness import load_dataset, run_eval
from graphqa.extraction import extract_from_text
from graphqa.llm import ReplayGateway, load_replay_script, replay_gateway_for
from graphqa.pipeline import GradeStatus, PipelineConfig, run, run_single
from graphqa.schema import introspect, parse_pattern_line, render_nodes, render_relationships
from graphqa.verification import normalized_indel_similarity
from tests.conftest import data_path
from tests.fixtures import (
    TRACED_QUERY_1,
    TRACED_QUESTION,
    fictional_graph,
    ifc_graph,
    traced_replay_script,
)
from tests.oracle import QUERY_CORPUS, oracle_evaluate, random_graph, rows_multiset, table_multiset

_module_start = time.perf_counter()


@contextlib.contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:02d} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {number:02d} {name}: PASS")


def test_criterion_01_similarity_exactness():
    with criterion(1, "similarity exactness"):
        cases = [
            ("corlys velaryon", "Corlys Velaryon", 86.66),
            ("corlys velaryon", "Lucerys Velaryon", 77.41),
            ("corlys velaryon", "Jacaerys Velaryon", 75.0),
            ("daemon targaryen", "Daemon Targaryen", 87.5),
            ("daemon targaryen", "Aemon Targaryen", 83.87),
            ("daemon targaryen", "Aemond Targaryen", 81.25),
        ]
        for a, b, expected in cases:
            start = time.perf_counter()
            score = normalized_indel_similarity(a, b)
            elapsed = time.perf_counter() - start
            assert score.display == expected, (a, b, score.display, expected)
            assert elapsed < 0.001, f"similarity took {elapsed * 1000:.3f} ms"


def test_criterion_02_extraction_exactness():
    with criterion(2, "extraction exactness"):
        expected = {
            "node_labels": ["Character"],
            "node_property_values": [
                ["Character", "name", "corlys velaryon"],
                ["Character", "name", "daemon targaryen"],
            ],
            "pairwise_relationships": [
                "(:Character)-[:hasFather]->(:Character)",
                "(:Character)-[:hasSpouse]->(:Character)",
            ],
        }
        report = extract_from_text(TRACED_QUERY_1)
        assert report.to_json_dict() == expected
        assert len(report.node_labels) == 1
        assert len(report.node_property_values) == 2
        assert len(report.pairwise_relationships) == 2
        # the undirected hasSpouse relationship is normalized to an arrow
        assert report.pairwise_relationships[1].endswith("->(:Character)")
        assert report.to_json() == extract_from_text(TRACED_QUERY_1).to_json()
        assert report.to_json() == json.dumps(expected, indent=2, ensure_ascii=False)


def test_criterion_03_trace_replay():
    with criterion(3, "trace replay"):
        start = time.perf_counter()
        backend = EmbeddedBackend(fictional_graph())
        schema = introspect(backend)
        gateway = ReplayGateway(traced_replay_script())
        trace = run(TRACED_QUESTION, schema, backend, gateway, PipelineConfig())
        elapsed = time.perf_counter() - start

        assert len(trace.iterations) == 2
        first, second = trace.iterations
        assert first.grade.status is GradeStatus.ERROR_OR_EMPTY
        assert first.verification is not None
        assert not first.verification.all_found()
        assert second.grade.status is GradeStatus.ACCEPT
        assert second.outcome.rows.rows == [{"count(DISTINCT c)": 3}]
        assert trace.final_status == "Accepted"
        assert "3" in trace.final_answer
        assert elapsed < 5.0, f"trace replay took {elapsed:.2f} s"


def test_criterion_04_loop_bound_both_modes():
    with criterion(4, "loop bound"):
        backend = EmbeddedBackend(fictional_graph())
        schema = introspect(backend)

        reject = json.dumps({"status": "Error or empty", "feedback": "no rows"})
        agentic_gateway = ReplayGateway(
            {
                "generator": ["MATCH (c:Character) WHERE c.name = c.description RETURN c"] * 4,
                "evaluator": [reject] * 4,
                "aggregator": ["try again"] * 3,
                "interpreter": ["No grounded answer was obtained."],
            }
        )
        agentic = run(TRACED_QUESTION, schema, backend, agentic_gateway, PipelineConfig(max_iters=4))
        assert agentic_gateway.calls_for("generator") == 4
        assert agentic.final_status == "Exhausted"

        single_gateway = ReplayGateway(
            {
                "generator": ["MATCH (broken"] * 4,
                "interpreter": ["No grounded answer was obtained."],
            }
        )
        single = run_single(TRACED_QUESTION, schema, backend, single_gateway, PipelineConfig(max_iters=4))
        assert single_gateway.calls_for("generator") == 4
        assert single.final_status == "Exhausted"


def test_criterion_05_engine_oracle_equivalence():
    with criterion(5, "engine-oracle equivalence"):
        start = time.perf_counter()
        assert len(QUERY_CORPUS) >= 50
        asts = [parse(query) for query in QUERY_CORPUS]
        for seed in range(100):
            graph = random_graph(seed, max_nodes=8, max_edges=12)
            for query, ast in zip(QUERY_CORPUS, asts):
                expected_columns, expected_rows = oracle_evaluate(ast, graph)
                actual = evaluate(ast, graph)
                assert actual.columns == expected_columns, (seed, query)
                assert table_multiset(actual) == rows_multiset(expected_columns, expected_rows), (
                    seed,
                    query,
                )
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"property run took {elapsed:.1f} s"


def test_criterion_06_schema_snapshot():
    with criterion(6, "schema snapshot"):
        backend = EmbeddedBackend(fictional_graph())
        schema = introspect(backend)
        with open(data_path("schema_nodes.golden.txt"), encoding="utf-8") as handle:
            assert render_nodes(schema) == handle.read()
        with open(data_path("schema_relationships.golden.txt"), encoding="utf-8") as handle:
            rels_text = handle.read()
            assert render_relationships(schema) == rels_text
        recovered = [
            triple
            for triple in (parse_pattern_line(line) for line in rels_text.splitlines())
            if triple is not None
        ]
        assert sorted(recovered) == backend.distinct_relationship_patterns()


def test_criterion_07_outcome_classification():
    with criterion(7, "outcome classification"):
        rows = lambda columns, data: QueryOutcome.from_rows(ResultTable(columns, data))
        table = [
            (QueryOutcome.from_error("runtime exception"), OutcomeClass.ERROR),
            (QueryOutcome.from_error("Not yet implemented: atom expression"), OutcomeClass.ERROR),
            (rows(["x"], []), OutcomeClass.EMPTY),
            (rows(["x"], [{"x": None}]), OutcomeClass.EMPTY),
            (rows(["x", "y"], [{"x": None, "y": None}]), OutcomeClass.EMPTY),
            (rows(["x"], [{"x": None}, {"x": None}]), OutcomeClass.EMPTY),
            (rows(["count(d)"], [{"count(d)": 0}]), OutcomeClass.OK_WITH_DATA),
            (rows(["x"], [{"x": None}, {"x": 1}]), OutcomeClass.OK_WITH_DATA),
            (rows(["x"], [{"x": False}]), OutcomeClass.OK_WITH_DATA),
            (rows(["x"], [{"x": "text"}]), OutcomeClass.OK_WITH_DATA),
        ]
        assert len(table) == 10
        for outcome, expected in table:
            assert classify(outcome) is expected


def test_criterion_08_harness_arithmetic(tmp_path):
    with criterion(8, "harness arithmetic"):
        backend = EmbeddedBackend(ifc_graph())
        schema = introspect(backend)
        script = load_replay_script(data_path("replay_eval.json"))
        factory = lambda qid: replay_gateway_for(script, qid)

        outputs = []
        for attempt in ("first", "second"):
            out_dir = tmp_path / attempt
            reports, results = run_eval(
                data_path("qa_fixture.jsonl"),
                backend,
                schema,
                factory,
                factory,
                out_dir=str(out_dir),
            )
            assert [r.verdict for r in results] == ["correct", "correct", "incorrect", "correct"]
            assert reports[0].accuracy == 0.75
            blobs = tuple(
                (out_dir / name).read_bytes() for name in ("results.jsonl", "report.json")
            )
            outputs.append(blobs)
        assert outputs[0] == outputs[1]


def test_criterion_09_building_fixture_smoke():
    with criterion(9, "building-fixture smoke"):
        backend = EmbeddedBackend(ifc_graph())

        q1 = backend.execute("MATCH (d:IfcDoor) RETURN count(d)")
        assert q1.rows.rows == [{"count(d)": 3}]

        q3 = backend.execute("MATCH (n:IfcBuildingStorey) RETURN count(n)")
        assert q3.rows.rows == [{"count(n)": 2}]

        q4 = backend.execute(
            "MATCH (space:IfcSpace) WHERE toLower(space.Name) CONTAINS 'entrance hall' "
            "RETURN space.Name, space.BaseQuantities.GrossFloorArea"
        )
        assert q4.rows.rows == [
            {"space.Name": "3 - Entrance hall", "space.BaseQuantities.GrossFloorArea": 8.69}
        ]


def test_criterion_10_offline_completeness(monkeypatch):
    with criterion(10, "offline completeness"):
        # the offline pipeline path must never open a socket
        def refuse(*args, **kwargs):
            raise AssertionError("offline acceptance path attempted a network connection")

        monkeypatch.setattr(socket.socket, "connect", refuse)

        backend = EmbeddedBackend(fictional_graph())
        schema = introspect(backend)
        trace = run(
            TRACED_QUESTION, schema, backend, ReplayGateway(traced_replay_script()), PipelineConfig()
        )
        assert trace.final_status == "Accepted"

        items = load_dataset(data_path("qa_fixture.jsonl"))
        assert len(items) == 4

        elapsed = time.perf_counter() - _module_start
        assert elapsed < 120.0, f"acceptance suite took {elapsed:.1f} s"
