"""Checks extracted query entities against actual graph content.

Existence is checked programmatically through the backend's auxiliary scans.
For anything not found, two suggestion channels are built: edit-based
candidates ranked by normalized indel similarity, and (optionally) an
LLM-ranked semantic shortlist. Both draw only from values that exist in the
graph, so every suggested replacement is guaranteed to resolve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .extraction import ExtractionReport, format_pattern, parse_pattern_string
from .llm import ChatGateway, LlmFormatError
from .prompts import instructions_turns, semantic_ranker_turns
from .store import canonical_text

SUGGESTION_COUNT = 3
CANDIDATE_POOL_CAP = 1000


@dataclass(frozen=True)
class SimilarityScore:
    """Similarity in [0, 100]; `display` is `raw` truncated to 2 decimals."""

    raw: float
    display: float


def indel_distance(a: str, b: str) -> int:
    """Edit distance with insertions and deletions only (substitution = 2)."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        current = [i]
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                current.append(previous[j - 1])
            else:
                current.append(min(previous[j], current[j - 1]) + 1)
        previous = current
    return previous[-1]


def normalized_indel_similarity(a: str, b: str) -> SimilarityScore:
    """100 * (1 - indel_distance / (len(a) + len(b))); two empties score 100.

    Truncation (not rounding) keeps the display faithful to the raw score:
    computed on integers so no float artifact can flip the second decimal.
    """
    total = len(a) + len(b)
    if total == 0:
        return SimilarityScore(100.0, 100.0)
    matched = total - indel_distance(a, b)
    raw = 100.0 * matched / total
    display = (100 * matched * 100 // total) / 100.0
    return SimilarityScore(raw, display)


@dataclass
class SuggestionSet:
    edit_based: list[tuple[str, SimilarityScore]] = field(default_factory=list)
    semantic: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "edit_based": [
                {"candidate": candidate, "score": score.display}
                for candidate, score in self.edit_based
            ],
            "semantic": list(self.semantic),
        }


@dataclass
class LabelResult:
    label: str
    found: bool
    suggestions: SuggestionSet = field(default_factory=SuggestionSet)


@dataclass
class PropertyResult:
    label: str
    key: str
    value: str
    found: bool
    suggestions: SuggestionSet = field(default_factory=SuggestionSet)


@dataclass
class RelationshipResult:
    pattern: str
    found: bool
    undirected: bool = False
    observed_alternatives: list[str] = field(default_factory=list)


@dataclass
class VerificationReport:
    label_results: list[LabelResult] = field(default_factory=list)
    property_results: list[PropertyResult] = field(default_factory=list)
    relationship_results: list[RelationshipResult] = field(default_factory=list)

    def misses(self) -> list:
        return [
            result
            for result in self.label_results + self.property_results + self.relationship_results
            if not result.found
        ]

    def all_found(self) -> bool:
        return not self.misses()

    def to_json_dict(self) -> dict:
        return {
            "node_labels": [
                {"value": r.label, "found": r.found, **r.suggestions.to_json_dict()}
                for r in self.label_results
            ],
            "node_property_values": [
                {
                    "label": r.label,
                    "key": r.key,
                    "value": r.value,
                    "found": r.found,
                    **r.suggestions.to_json_dict(),
                }
                for r in self.property_results
            ],
            "pairwise_relationships": [
                {
                    "pattern": r.pattern,
                    "found": r.found,
                    "undirected": r.undirected,
                    "observed_alternatives": list(r.observed_alternatives),
                }
                for r in self.relationship_results
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False)


def rank_candidates(value: str, candidates: list[str], k: int = SUGGESTION_COUNT) -> list[tuple[str, SimilarityScore]]:
    """Top-k candidates by raw similarity, case-insensitive matches first.

    Raw scores drive the order (display truncation never reorders); ties break
    on candidate text for determinism. A candidate equal to `value` up to
    casing is what the query author almost certainly meant, so it is promoted
    to the front regardless of score ties.
    """
    scored = []
    folded = value.casefold()
    for candidate in dict.fromkeys(candidates):
        score = normalized_indel_similarity(value, candidate)
        case_match = candidate.casefold() == folded
        scored.append((not case_match, -score.raw, candidate, score))
    scored.sort(key=lambda item: item[:3])
    return [(candidate, score) for _, _, candidate, score in scored[:k]]


def verify(report: ExtractionReport, backend, k: int = SUGGESTION_COUNT) -> VerificationReport:
    """Programmatic existence check of every extracted entity.

    Property values match on exact text; a value that matches only up to
    casing still counts as not found, but the correctly-cased candidate is
    guaranteed to lead the edit-based suggestions. Patterns extracted from an
    undirected relationship count as found in either direction.
    """
    result = VerificationReport()
    known_labels = backend.distinct_labels()
    for label in report.node_labels:
        entry = LabelResult(label, found=label in known_labels)
        if not entry.found and known_labels:
            entry.suggestions.edit_based = rank_candidates(label, known_labels, k)
        result.label_results.append(entry)

    for label, key, value in report.node_property_values:
        stored = backend.distinct_property_values(label, key, CANDIDATE_POOL_CAP)
        texts = [canonical_text(v) for v in stored]
        entry = PropertyResult(label, key, value, found=value in texts)
        if not entry.found:
            string_candidates = [t for t in texts if t]
            if string_candidates:
                entry.suggestions.edit_based = rank_candidates(value, string_candidates, k)
        result.property_results.append(entry)

    observed = backend.distinct_relationship_patterns()
    observed_set = set(observed)
    for pattern in report.pairwise_relationships:
        parsed = parse_pattern_string(pattern)
        if parsed is None:
            result.relationship_results.append(RelationshipResult(pattern, found=False))
            continue
        src, rel, dst = parsed
        undirected = pattern in report.undirected_patterns
        found = (src, rel, dst) in observed_set
        if not found and undirected:
            found = (dst, rel, src) in observed_set
        entry = RelationshipResult(pattern, found=found, undirected=undirected)
        if not found:
            same_type = [p for p in observed if p[1] == rel]
            same_endpoint = [
                p for p in observed if p[1] != rel and (p[0] in (src, dst) or p[2] in (src, dst))
            ]
            entry.observed_alternatives = [format_pattern(*p) for p in same_type + same_endpoint]
        result.relationship_results.append(entry)
    return result


def suggest_semantic(
    missing_value: str,
    candidates: list[str],
    gateway: ChatGateway,
    k: int = SUGGESTION_COUNT,
) -> list[str]:
    """LLM ranking of existing candidates; non-members are filtered out."""
    if not candidates:
        raise ValueError("semantic ranking requires a non-empty candidate list")
    if len(candidates) == 1:
        return [candidates[0]]

    def validate(payload: dict) -> list[str]:
        suggestions = payload.get("suggestions")
        if not isinstance(suggestions, list) or not all(isinstance(s, str) for s in suggestions):
            raise ValueError("suggestions must be a list of strings")
        return suggestions

    ranked = gateway.complete_structured(
        semantic_ranker_turns(missing_value, candidates, k),
        "semantic_ranker",
        ["suggestions"],
        validate=validate,
    )
    member_set = set(candidates)
    filtered = [s for s in ranked if s in member_set]
    return list(dict.fromkeys(filtered))[:k]


def verify_with_semantics(
    report: ExtractionReport,
    backend,
    gateway: Optional[ChatGateway] = None,
    k: int = SUGGESTION_COUNT,
) -> VerificationReport:
    """Full verification: programmatic pass, then semantic ranking of misses.

    The gateway is consulted only for entities that failed the programmatic
    check, so an all-found report costs zero LLM calls.
    """
    result = verify(report, backend, k)
    if gateway is None:
        return result
    for entry in result.label_results:
        if not entry.found:
            candidates = backend.distinct_labels()
            if candidates:
                entry.suggestions.semantic = suggest_semantic(entry.label, candidates, gateway, k)
    for entry in result.property_results:
        if not entry.found:
            stored = backend.distinct_property_values(entry.label, entry.key, CANDIDATE_POOL_CAP)
            candidates = [canonical_text(v) for v in stored if canonical_text(v)]
            if candidates:
                entry.suggestions.semantic = suggest_semantic(entry.value, candidates, gateway, k)
    return result


def describe_misses(report: VerificationReport) -> str:
    """Human-readable summary of verification misses, fed to the LLM roles."""
    lines: list[str] = []
    for entry in report.label_results:
        if entry.found:
            continue
        lines.append(f'Node label "{entry.label}" was not found in the database.')
        _append_suggestions(lines, entry.suggestions)
    for entry in report.property_results:
        if entry.found:
            continue
        lines.append(
            f'Node label: "{entry.label}"\n'
            f'Property key: "{entry.key}"\n'
            f'Node property value used in the query: "{entry.value}" was not found.'
        )
        _append_suggestions(lines, entry.suggestions)
    for entry in report.relationship_results:
        if entry.found:
            continue
        lines.append(f"Relationship pattern {entry.pattern} was not observed in the database.")
        if entry.observed_alternatives:
            lines.append("Observed patterns:")
            lines.extend(f"  {pattern}" for pattern in entry.observed_alternatives)
    return "\n".join(lines)


def _append_suggestions(lines: list[str], suggestions: SuggestionSet) -> None:
    for candidate, score in suggestions.edit_based:
        lines.append(f'  Suggested correction: "{candidate}" (similarity score: {score.display})')
    if suggestions.semantic:
        quoted = ", ".join(f'"{s}"' for s in suggestions.semantic)
        lines.append(f"  Other semantically relevant suggestions: {quoted}")


def generate_fix_instructions(vr: VerificationReport, gateway: ChatGateway) -> str:
    """Turn verification misses into numbered revision instructions.

    Callers skip this when everything verified; called anyway, it returns
    empty text without spending an LLM call.
    """
    if vr.all_found():
        return ""
    response = gateway.complete(instructions_turns(describe_misses(vr)), "instructions")
    if not response.strip():
        raise LlmFormatError("instructions generator returned empty text")
    return response
