"""Prompt construction for each LLM role.

System prompts live as versioned text assets under ``prompts/``; this module
loads them and assembles the per-call chat turns. The query generator's
system prompt embeds the rendered graph schema verbatim.
"""

from __future__ import annotations

import json
from importlib import resources
from string import Template
from typing import Optional

from ..backend import QueryOutcome
from ..llm import ChatTurn

EVALUATOR_ROW_PREVIEW = 50


def _load(name: str) -> str:
    return resources.files("graphqa.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def outcome_text(outcome: QueryOutcome, row_preview: Optional[int] = None) -> str:
    """Render an execution outcome for inclusion in a prompt."""
    if outcome.error is not None:
        return f"The query failed with the following error:\n{outcome.error}"
    rows = outcome.rows.to_json_rows()
    shown = rows if row_preview is None else rows[:row_preview]
    text = json.dumps(shown, ensure_ascii=False, indent=2)
    notes = []
    if outcome.truncated:
        notes.append("the database truncated the result")
    if row_preview is not None and len(rows) > row_preview:
        notes.append(f"showing the first {row_preview} of {len(rows)} rows")
    if notes:
        return f"Query result ({'; '.join(notes)}):\n{text}"
    return f"Query result:\n{text}"


def generator_turns(
    question: str, schema_nodes: str, schema_relationships: str, feedback: Optional[str] = None
) -> list[ChatTurn]:
    system = Template(_load("generator")).substitute(
        schema_nodes=schema_nodes,
        schema_relationships=schema_relationships or "(no relationships observed)",
    )
    if feedback:
        user = (
            f"Question: {question}\n\n"
            "Your previous query was rejected. Apply this feedback and write a corrected query:\n"
            f"{feedback}"
        )
    else:
        user = f"Question: {question}"
    return [ChatTurn("system", system), ChatTurn("user", user)]


def evaluator_turns(question: str, query: str, outcome: QueryOutcome) -> list[ChatTurn]:
    user = (
        f"Question: {question}\n\n"
        f"Cypher query:\n{query}\n\n"
        f"{outcome_text(outcome, row_preview=EVALUATOR_ROW_PREVIEW)}"
    )
    return [ChatTurn("system", _load("evaluator")), ChatTurn("user", user)]


def extractor_turns(query: str) -> list[ChatTurn]:
    return [ChatTurn("system", _load("extractor")), ChatTurn("user", f"Cypher query:\n{query}")]


def semantic_ranker_turns(missing_value: str, candidates: list[str], k: int) -> list[ChatTurn]:
    system = Template(_load("semantic_ranker")).substitute(k=k)
    user = (
        f"Missing value: {json.dumps(missing_value, ensure_ascii=False)}\n"
        f"Existing values: {json.dumps(candidates, ensure_ascii=False)}"
    )
    return [ChatTurn("system", system), ChatTurn("user", user)]


def instructions_turns(verification_summary: str) -> list[ChatTurn]:
    return [
        ChatTurn("system", _load("instructions")),
        ChatTurn("user", f"Verification results:\n{verification_summary}"),
    ]


def aggregator_turns(question: str, evaluator_feedback: str, fix_instructions: str) -> list[ChatTurn]:
    parts = [f"Question: {question}"]
    if evaluator_feedback:
        parts.append(f"Reviewer feedback:\n{evaluator_feedback}")
    if fix_instructions:
        parts.append(f"Entity corrections:\n{fix_instructions}")
    return [ChatTurn("system", _load("aggregator")), ChatTurn("user", "\n\n".join(parts))]


def interpreter_turns(question: str, outcome: QueryOutcome, exhausted: bool = False) -> list[ChatTurn]:
    user = f"Question: {question}\n\n{outcome_text(outcome)}"
    if exhausted:
        user += (
            "\n\nNote: the query could not be refined into an accepted form; "
            "make clear that the answer is not fully grounded."
        )
    return [ChatTurn("system", _load("interpreter")), ChatTurn("user", user)]


def judge_turns(question: str, answer_text: str, ground_truth_json: object) -> list[ChatTurn]:
    user = (
        f"Question: {question}\n"
        f"Ground truth (JSON): {json.dumps(ground_truth_json, ensure_ascii=False)}\n"
        f"Answer: {answer_text}"
    )
    return [ChatTurn("system", _load("judge")), ChatTurn("user", user)]
