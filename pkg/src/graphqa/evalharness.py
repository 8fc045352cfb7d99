"""Batch question-answering evaluation with an LLM judge.

Datasets are JSON lines, one item per line:
    {"qid": "...", "question": "...", "ground_truth": <json>, "domain": "..."}

Every item is attempted exactly once; infrastructure failures score as
incorrect with the reason recorded, never dropped. Accuracy is the exact
fraction of correct verdicts, reported per domain and per mode.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from .backend import TransportError
from .llm import ChatGateway, LlmFormatError, ReplayExhausted
from .pipeline import PipelineAborted, PipelineConfig, PipelineTrace, run_pipeline
from .prompts import judge_turns
from .schema import GraphSchema

DEFAULT_PARALLELISM = 4


class DatasetFormatError(Exception):
    """The QA dataset file is missing, empty, or malformed."""


@dataclass
class QaItem:
    qid: str
    question: str
    ground_truth: object
    domain: str


@dataclass
class EvalResult:
    qid: str
    verdict: str  # "correct" | "incorrect"
    rationale: str
    answer: str = ""
    trace_ref: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "qid": self.qid,
            "verdict": self.verdict,
            "rationale": self.rationale,
            "answer": self.answer,
            "trace_ref": self.trace_ref,
        }


@dataclass
class DomainReport:
    domain: str
    mode: str
    total: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def to_json_dict(self) -> dict:
        return {
            "domain": self.domain,
            "mode": self.mode,
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
        }


def load_dataset(path: str) -> list[QaItem]:
    if not os.path.exists(path):
        raise DatasetFormatError(f"dataset file not found: {path}")
    items: list[QaItem] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(raw, dict):
                raise DatasetFormatError(f"line {lineno}: expected an object")
            for key in ("qid", "question", "domain"):
                if not isinstance(raw.get(key), str) or not raw[key]:
                    raise DatasetFormatError(f"line {lineno}: missing or invalid {key!r}")
            if "ground_truth" not in raw:
                raise DatasetFormatError(f"line {lineno}: missing 'ground_truth'")
            if raw["qid"] in seen:
                raise DatasetFormatError(f"line {lineno}: duplicate qid {raw['qid']!r}")
            seen.add(raw["qid"])
            items.append(QaItem(raw["qid"], raw["question"], raw["ground_truth"], raw["domain"]))
    if not items:
        raise DatasetFormatError(f"dataset {path} holds no items")
    return items


def judge(
    question: str, answer_text: str, ground_truth_json: object, gateway: ChatGateway
) -> tuple[str, str]:
    """Binary semantic-equivalence verdict from the judge model."""

    def validate(payload: dict) -> tuple[str, str]:
        verdict = str(payload["verdict"]).strip().lower()
        if verdict not in ("correct", "incorrect"):
            raise ValueError(f"verdict must be correct/incorrect, got {verdict!r}")
        return verdict, str(payload["rationale"])

    return gateway.complete_structured(
        judge_turns(question, answer_text, ground_truth_json),
        "judge",
        ["verdict", "rationale"],
        validate=validate,
    )


def run_eval(
    dataset_path: str,
    backend,
    schema: GraphSchema,
    gateway_factory: Callable[[str], ChatGateway],
    judge_gateway_factory: Callable[[str], ChatGateway],
    mode: str = "agentic",
    max_iters: int = 4,
    parallelism: int = DEFAULT_PARALLELISM,
    out_dir: Optional[str] = None,
) -> tuple[list[DomainReport], list[EvalResult]]:
    """Evaluate every dataset item once and assemble per-domain reports."""
    items = load_dataset(dataset_path)
    config = PipelineConfig(max_iters=max_iters, mode=mode)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    def attempt(item: QaItem) -> EvalResult:
        trace: Optional[PipelineTrace] = None
        try:
            gateway = gateway_factory(item.qid)
            trace = run_pipeline(item.question, schema, backend, gateway, config)
            verdict, rationale = judge(
                item.question, trace.final_answer, item.ground_truth, judge_gateway_factory(item.qid)
            )
            result = EvalResult(item.qid, verdict, rationale, answer=trace.final_answer)
        except PipelineAborted as exc:
            trace = exc.partial_trace
            result = EvalResult(item.qid, "incorrect", f"pipeline failed: {exc.cause}")
        except (TransportError, LlmFormatError, ReplayExhausted) as exc:
            result = EvalResult(item.qid, "incorrect", f"evaluation failed: {exc}")
        if out_dir and trace is not None:
            trace_name = f"trace_{item.qid}.json"
            with open(os.path.join(out_dir, trace_name), "w", encoding="utf-8") as handle:
                handle.write(trace.to_json())
            # relative to out_dir, so reruns into different directories
            # produce identical result files
            result.trace_ref = trace_name
        return result

    results_by_qid: dict[str, EvalResult] = {}
    workers = max(1, min(parallelism, len(items)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(attempt, items):
            results_by_qid[result.qid] = result
    results = [results_by_qid[item.qid] for item in items]

    reports: dict[str, DomainReport] = {}
    for item, result in zip(items, results):
        report = reports.setdefault(item.domain, DomainReport(item.domain, mode))
        report.total += 1
        if result.verdict == "correct":
            report.correct += 1
    report_list = list(reports.values())

    if out_dir:
        with open(os.path.join(out_dir, "results.jsonl"), "w", encoding="utf-8") as handle:
            for result in results:
                handle.write(json.dumps(result.to_json_dict(), ensure_ascii=False) + "\n")
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as handle:
            json.dump([r.to_json_dict() for r in report_list], handle, indent=2)
            handle.write("\n")
    return report_list, results


def format_report_table(reports: list[DomainReport]) -> str:
    """Fixed-width report table; stable across reruns for identical inputs."""
    lines = [f"{'domain':<20} {'mode':<8} {'total':>5} {'correct':>7} {'accuracy':>9}"]
    lines.append("-" * len(lines[0]))
    total = correct = 0
    for report in reports:
        total += report.total
        correct += report.correct
        lines.append(
            f"{report.domain:<20} {report.mode:<8} {report.total:>5} "
            f"{report.correct:>7} {report.accuracy:>9.4f}"
        )
    if len(reports) > 1:
        overall = correct / total if total else 0.0
        lines.append(
            f"{'(all)':<20} {reports[0].mode if reports else '':<8} {total:>5} {correct:>7} {overall:>9.4f}"
        )
    return "\n".join(lines)
