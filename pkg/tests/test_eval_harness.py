import json
import os

import pytest

from graphqa.backend import EmbeddedBackend
from graphqa.evalharness import (
    DatasetFormatError,
    DomainReport,
    format_report_table,
    judge,
    load_dataset,
    run_eval,
)
from graphqa.llm import LlmFormatError, ReplayGateway, load_replay_script, replay_gateway_for
from graphqa.schema import introspect
from tests.conftest import data_path
from tests.fixtures import ifc_graph


@pytest.fixture()
def harness_setup():
    backend = EmbeddedBackend(ifc_graph())
    schema = introspect(backend)
    script = load_replay_script(data_path("replay_eval.json"))
    factory = lambda qid: replay_gateway_for(script, qid)
    return backend, schema, factory


class TestDataset:
    def test_fixture_dataset_loads(self):
        items = load_dataset(data_path("qa_fixture.jsonl"))
        assert [item.qid for item in items] == ["q1", "q2", "q3", "q4"]
        assert items[0].ground_truth == [{"count(d)": 3}]

    def test_missing_file(self):
        with pytest.raises(DatasetFormatError):
            load_dataset("/nonexistent/file.jsonl")

    def test_empty_dataset_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("\n\n")
        with pytest.raises(DatasetFormatError):
            load_dataset(str(path))

    def test_bad_json_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"qid": "a", "question": "x", "ground_truth": 1, "domain": "d"}\n{oops\n')
        with pytest.raises(DatasetFormatError) as err:
            load_dataset(str(path))
        assert "line 2" in str(err.value)

    def test_duplicate_qid_rejected(self, tmp_path):
        line = '{"qid": "a", "question": "x", "ground_truth": 1, "domain": "d"}\n'
        path = tmp_path / "dup.jsonl"
        path.write_text(line + line)
        with pytest.raises(DatasetFormatError) as err:
            load_dataset(str(path))
        assert "duplicate" in str(err.value)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "missing.jsonl"
        path.write_text('{"qid": "a", "question": "x", "domain": "d"}\n')
        with pytest.raises(DatasetFormatError) as err:
            load_dataset(str(path))
        assert "ground_truth" in str(err.value)


class TestJudge:
    def test_correct_verdict(self):
        gateway = ReplayGateway(
            {"judge": [json.dumps({"verdict": "correct", "rationale": "matches"})]}
        )
        verdict, rationale = judge(
            "How many doors exist in the building?",
            "There are 3 doors",
            [{"count": 3}],
            gateway,
        )
        assert verdict == "correct" and rationale == "matches"

    def test_incorrect_verdict(self):
        gateway = ReplayGateway(
            {"judge": [json.dumps({"verdict": "Incorrect", "rationale": "4 is not 3"})]}
        )
        verdict, _ = judge("q", "4 doors", 3, gateway)
        assert verdict == "incorrect"

    def test_non_binary_verdict_is_format_error(self):
        gateway = ReplayGateway(
            {
                "judge": [
                    json.dumps({"verdict": "maybe", "rationale": "?"}),
                    json.dumps({"verdict": "maybe", "rationale": "?"}),
                ]
            }
        )
        with pytest.raises(LlmFormatError):
            judge("q", "a", 1, gateway)

    def test_ground_truth_embedded_as_json(self):
        gateway = ReplayGateway(
            {"judge": [json.dumps({"verdict": "correct", "rationale": "ok"})]}
        )
        judge("q", "answer", [{"count(d)": 3}], gateway)
        prompt = gateway.transcript[0].turns[1].content
        assert '[{"count(d)": 3}]' in prompt

    def test_few_shot_examples_in_system_prompt(self):
        gateway = ReplayGateway(
            {"judge": [json.dumps({"verdict": "correct", "rationale": "ok"})]}
        )
        judge("q", "answer", 1, gateway)
        system = gateway.transcript[0].turns[0].content
        assert "Verdict: correct" in system and "Verdict: incorrect" in system


class TestRunEval:
    def test_counting_oracle_three_of_four(self, harness_setup):
        backend, schema, factory = harness_setup
        reports, results = run_eval(
            data_path("qa_fixture.jsonl"), backend, schema, factory, factory
        )
        assert [r.verdict for r in results] == ["correct", "correct", "incorrect", "correct"]
        assert len(reports) == 1
        report = reports[0]
        assert (report.domain, report.mode, report.total, report.correct) == (
            "building",
            "agentic",
            4,
            3,
        )
        assert report.accuracy == 0.75

    def test_rerun_reproduces_report_byte_for_byte(self, harness_setup, tmp_path):
        backend, schema, factory = harness_setup
        outputs = []
        for attempt in ("one", "two"):
            out_dir = tmp_path / attempt
            reports, _ = run_eval(
                data_path("qa_fixture.jsonl"),
                backend,
                schema,
                factory,
                factory,
                out_dir=str(out_dir),
            )
            blobs = {}
            for name in ("results.jsonl", "report.json"):
                with open(out_dir / name, "rb") as handle:
                    blobs[name] = handle.read()
            outputs.append((format_report_table(reports), blobs))
        assert outputs[0] == outputs[1]

    def test_parallel_runs_do_not_double_count(self, harness_setup):
        backend, schema, factory = harness_setup
        reports, results = run_eval(
            data_path("qa_fixture.jsonl"), backend, schema, factory, factory, parallelism=4
        )
        assert reports[0].total == 4
        assert len({r.qid for r in results}) == 4

    def test_failures_recorded_as_incorrect_never_dropped(self, harness_setup):
        backend, schema, factory = harness_setup

        def flaky_factory(qid):
            if qid == "q2":
                return ReplayGateway({})  # exhausts immediately
            return factory(qid)

        reports, results = run_eval(
            data_path("qa_fixture.jsonl"), backend, schema, flaky_factory, factory
        )
        assert reports[0].total == 4
        by_qid = {r.qid: r for r in results}
        assert by_qid["q2"].verdict == "incorrect"
        assert "failed" in by_qid["q2"].rationale
        # q3's scripted verdict is already incorrect, so only q1 and q4 count
        assert reports[0].correct == 2

    def test_out_dir_holds_results_and_traces(self, harness_setup, tmp_path):
        backend, schema, factory = harness_setup
        out_dir = tmp_path / "out"
        _, results = run_eval(
            data_path("qa_fixture.jsonl"), backend, schema, factory, factory, out_dir=str(out_dir)
        )
        assert (out_dir / "results.jsonl").exists()
        for result in results:
            assert result.trace_ref is not None
            assert os.path.exists(out_dir / result.trace_ref)
        with open(out_dir / "results.jsonl") as handle:
            lines = [json.loads(line) for line in handle]
        assert [line["qid"] for line in lines] == ["q1", "q2", "q3", "q4"]

    def test_single_mode_report_differs_only_in_mode(self, harness_setup):
        backend, schema, _ = harness_setup
        script = load_replay_script(data_path("replay_eval.json"))

        def single_factory(qid):
            entries = dict(script["per_question"][qid])
            entries.pop("evaluator", None)
            return ReplayGateway(entries)

        factory = lambda qid: replay_gateway_for(script, qid)
        agentic_reports, _ = run_eval(
            data_path("qa_fixture.jsonl"), backend, schema, factory, factory, mode="agentic"
        )
        single_reports, _ = run_eval(
            data_path("qa_fixture.jsonl"), backend, schema, single_factory, factory, mode="single"
        )
        agentic, single = agentic_reports[0], single_reports[0]
        assert single.mode == "single" and agentic.mode == "agentic"
        assert (single.domain, single.total, single.correct) == (
            agentic.domain,
            agentic.total,
            agentic.correct,
        )


class TestReportTable:
    def test_fixed_width_format(self):
        reports = [
            DomainReport("building", "agentic", total=4, correct=3),
            DomainReport("fiction", "agentic", total=2, correct=1),
        ]
        table = format_report_table(reports)
        lines = table.splitlines()
        assert lines[0].split() == ["domain", "mode", "total", "correct", "accuracy"]
        assert "0.7500" in lines[2]
        assert lines[-1].startswith("(all)")
        assert "0.6667" in lines[-1]
