"""The query refinement loop.

One run drives: generate a Cypher query, execute it, grade the attempt, and,
while the grade is not Accept and the attempt budget remains, regenerate with
targeted feedback. A grade of Incorrect feeds back only the reviewer's
feedback; Error-or-Empty triggers the full verification path (entity
extraction, database checks, fix instructions, feedback aggregation). The
final outcome, accepted or not, is always interpreted into a natural-language
answer; an exhausted run flags its answer as not fully grounded.

Every attempt is recorded in a trace that serializes deterministically: the
same question, graph, replay script, and config always produce the same
bytes.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

from .backend import OutcomeClass, QueryOutcome, TransportError, classify
from .cypher import ParseError, parse_for_extraction
from .extraction import ExtractionReport, extract
from .llm import ChatGateway, LlmFormatError, ReplayExhausted
from .prompts import aggregator_turns, evaluator_turns, generator_turns, interpreter_turns
from .schema import GraphSchema, render_nodes, render_relationships
from .verification import VerificationReport, generate_fix_instructions, verify_with_semantics

DEFAULT_MAX_ITERS = 4


class GradeStatus(enum.Enum):
    ACCEPT = "Accept"
    INCORRECT = "Incorrect"
    ERROR_OR_EMPTY = "ErrorOrEmpty"


@dataclass
class Grade:
    status: GradeStatus
    feedback: str = ""

    def __post_init__(self) -> None:
        if self.status is not GradeStatus.ACCEPT and not self.feedback:
            raise ValueError("non-Accept grades require feedback")


_STATUS_ALIASES = {
    "accept": GradeStatus.ACCEPT,
    "incorrect": GradeStatus.INCORRECT,
    "error or empty": GradeStatus.ERROR_OR_EMPTY,
}


def parse_status(text: str) -> Optional[GradeStatus]:
    normalized = " ".join(text.strip().lower().replace("_", " ").replace("-", " ").split())
    return _STATUS_ALIASES.get(normalized)


@dataclass
class IterationRecord:
    index: int  # 1-based attempt number
    query: str
    outcome: QueryOutcome
    grade: Grade
    extraction: Optional[ExtractionReport] = None
    verification: Optional[VerificationReport] = None
    fix_instructions: Optional[str] = None
    aggregated_feedback: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "query": self.query,
            "outcome": self.outcome.to_json_dict(),
            "grade": self.grade.status.value,
            "feedback": self.grade.feedback,
            "extraction": self.extraction.to_json_dict() if self.extraction else None,
            "verification": self.verification.to_json_dict() if self.verification else None,
            "fix_instructions": self.fix_instructions,
            "aggregated_feedback": self.aggregated_feedback,
        }


@dataclass
class PipelineTrace:
    question: str
    mode: str  # "agentic" | "single"
    iterations: list[IterationRecord] = field(default_factory=list)
    final_status: str = "Exhausted"  # "Accepted" | "Exhausted"
    final_answer: str = ""
    final_query: str = ""

    def to_json_dict(self) -> dict:
        return {
            "question": self.question,
            "mode": self.mode,
            "iterations": [record.to_json_dict() for record in self.iterations],
            "final_status": self.final_status,
            "final_answer": self.final_answer,
            "final_query": self.final_query,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False)


@dataclass
class PipelineConfig:
    max_iters: int = DEFAULT_MAX_ITERS
    mode: str = "agentic"
    # single mode feeds the raw error text into retries; set False to retry blind
    single_error_feedback: bool = True

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.mode not in ("agentic", "single"):
            raise ValueError("mode must be 'agentic' or 'single'")


class PipelineAborted(Exception):
    """Infrastructure failure mid-run; carries the partial trace."""

    def __init__(self, cause: Exception, partial_trace: PipelineTrace) -> None:
        self.cause = cause
        self.partial_trace = partial_trace
        super().__init__(f"pipeline aborted: {cause}")


def evaluate_query(
    question: str, query: str, outcome: QueryOutcome, gateway: ChatGateway
) -> Grade:
    """LLM critique of an attempt, guarded by the mechanical outcome class.

    The critic cannot Accept a query that errored or returned nothing; such
    a response is downgraded to Error-or-Empty, otherwise the refinement loop
    would terminate on an ungrounded result.
    """
    payload = gateway.complete_structured(
        evaluator_turns(question, query, outcome), "evaluator", ["status", "feedback"]
    )
    status = parse_status(str(payload["status"]))
    if status is None:
        raise LlmFormatError(f"evaluator returned unknown status {payload['status']!r}")
    feedback = str(payload["feedback"])
    outcome_class = classify(outcome)
    if status is GradeStatus.ACCEPT and outcome_class is not OutcomeClass.OK_WITH_DATA:
        reason = outcome.error if outcome.error else "the query returned no data"
        feedback = feedback or f"The result cannot be accepted: {reason}"
        return Grade(GradeStatus.ERROR_OR_EMPTY, feedback)
    if status is not GradeStatus.ACCEPT and not feedback:
        feedback = f"The query was graded {status.value} without further detail."
    return Grade(status, feedback)


def aggregate_feedback(
    question: str, evaluator_feedback: str, fix_instructions: str, gateway: ChatGateway
) -> str:
    if not evaluator_feedback and not fix_instructions:
        raise ValueError("feedback aggregation requires at least one non-empty input")
    response = gateway.complete(
        aggregator_turns(question, evaluator_feedback, fix_instructions), "aggregator"
    )
    if not response.strip():
        raise LlmFormatError("feedback aggregator returned empty text")
    return response


def interpret(
    question: str, outcome: QueryOutcome, gateway: ChatGateway, exhausted: bool = False
) -> str:
    response = gateway.complete(interpreter_turns(question, outcome, exhausted), "interpreter")
    if not response.strip():
        raise LlmFormatError("interpreter returned empty text")
    return response


def _generate(
    question: str,
    schema_nodes: str,
    schema_rels: str,
    gateway: ChatGateway,
    feedback: Optional[str],
) -> str:
    query = gateway.complete(
        generator_turns(question, schema_nodes, schema_rels, feedback), "generator"
    )
    return _strip_fences(query)


def _strip_fences(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        lines = stripped.splitlines()
        if lines[-1].strip() == "```":
            lines = lines[1:-1]
        else:
            lines = lines[1:]
        stripped = "\n".join(lines).strip()
    return stripped


def run(
    question: str,
    schema: GraphSchema,
    backend,
    gateway: ChatGateway,
    config: Optional[PipelineConfig] = None,
) -> PipelineTrace:
    """Full refinement run; at most `max_iters` generation attempts."""
    config = config or PipelineConfig()
    trace = PipelineTrace(question=question, mode="agentic")
    schema_nodes = render_nodes(schema)
    schema_rels = render_relationships(schema)
    try:
        query = _generate(question, schema_nodes, schema_rels, gateway, None)
        outcome = backend.execute(query)
        grade = evaluate_query(question, query, outcome, gateway)
        record = IterationRecord(1, query, outcome, grade)
        trace.iterations.append(record)
        attempt = 1
        while grade.status is not GradeStatus.ACCEPT and attempt < config.max_iters:
            if grade.status is GradeStatus.INCORRECT:
                feedback = grade.feedback
            else:
                feedback = _verification_feedback(question, query, grade, record, backend, gateway)
            query = _generate(question, schema_nodes, schema_rels, gateway, feedback)
            outcome = backend.execute(query)
            grade = evaluate_query(question, query, outcome, gateway)
            attempt += 1
            record = IterationRecord(attempt, query, outcome, grade)
            trace.iterations.append(record)
        trace.final_status = "Accepted" if grade.status is GradeStatus.ACCEPT else "Exhausted"
        trace.final_query = query
        trace.final_answer = interpret(
            question, outcome, gateway, exhausted=trace.final_status == "Exhausted"
        )
        return trace
    except (TransportError, LlmFormatError, ReplayExhausted) as exc:
        raise PipelineAborted(exc, trace) from exc


def _verification_feedback(
    question: str,
    query: str,
    grade: Grade,
    record: IterationRecord,
    backend,
    gateway: ChatGateway,
) -> str:
    """The Error-or-Empty branch: extract, verify, instruct, aggregate."""
    try:
        extraction = extract(parse_for_extraction(query))
    except ParseError:
        extraction = ExtractionReport()
    verification = verify_with_semantics(extraction, backend, gateway)
    fix_instructions = generate_fix_instructions(verification, gateway)
    aggregated = aggregate_feedback(question, grade.feedback, fix_instructions, gateway)
    record.extraction = extraction
    record.verification = verification
    record.fix_instructions = fix_instructions
    record.aggregated_feedback = aggregated
    return aggregated


def run_single(
    question: str,
    schema: GraphSchema,
    backend,
    gateway: ChatGateway,
    config: Optional[PipelineConfig] = None,
) -> PipelineTrace:
    """Linear-pass baseline: generate, execute, interpret.

    No reviewer, extractor, verifier, or aggregator is ever consulted. An
    execution error earns another attempt (up to the same budget), fed back
    as nothing but the raw error text; grades here are mechanical.
    """
    config = config or PipelineConfig()
    trace = PipelineTrace(question=question, mode="single")
    schema_nodes = render_nodes(schema)
    schema_rels = render_relationships(schema)
    try:
        feedback: Optional[str] = None
        attempt = 0
        while True:
            query = _generate(question, schema_nodes, schema_rels, gateway, feedback)
            outcome = backend.execute(query)
            attempt += 1
            if outcome.error is not None:
                grade = Grade(GradeStatus.ERROR_OR_EMPTY, outcome.error)
            else:
                grade = Grade(GradeStatus.ACCEPT)
            trace.iterations.append(IterationRecord(attempt, query, outcome, grade))
            if outcome.error is None or attempt >= config.max_iters:
                break
            if config.single_error_feedback:
                feedback = f"The previous query failed with this error:\n{outcome.error}"
            else:
                feedback = None
        trace.final_status = "Accepted" if outcome.error is None else "Exhausted"
        trace.final_query = query
        trace.final_answer = interpret(
            question, outcome, gateway, exhausted=trace.final_status == "Exhausted"
        )
        return trace
    except (TransportError, LlmFormatError, ReplayExhausted) as exc:
        raise PipelineAborted(exc, trace) from exc


def run_pipeline(
    question: str,
    schema: GraphSchema,
    backend,
    gateway: ChatGateway,
    config: Optional[PipelineConfig] = None,
) -> PipelineTrace:
    config = config or PipelineConfig()
    if config.mode == "single":
        return run_single(question, schema, backend, gateway, config)
    return run(question, schema, backend, gateway, config)
