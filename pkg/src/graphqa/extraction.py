"""Decompose a Cypher query into its hallucination-prone graph references.

The deterministic extractor walks the AST; an LLM-backed variant produces the
same JSON shape for deployments that prefer it. Equality is the extraction
trigger: `v.key = literal`, `toLower(v.key) = literal`, inline `{key: literal}`
maps, and `v.key IN [...]` (one triple per element). Searches (CONTAINS,
STARTS WITH, ENDS WITH, inequalities) assert nothing about stored values and
are deliberately skipped.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .cypher import (
    Binary,
    FunctionCall,
    ListLiteral,
    Literal,
    MatchClause,
    PatternChain,
    PatternPredicate,
    PropertyAccess,
    QueryAst,
    Unary,
    Variable,
    WhereClause,
    free_variables,
    parse_for_extraction,
)
from .llm import ChatGateway
from .prompts import extractor_turns
from .store import canonical_text

PATTERN_STRING = re.compile(r"^\(:(?P<src>[^)]+)\)-\[:(?P<rel>[^\]]+)\]->\(:(?P<dst>[^)]+)\)$")


def format_pattern(src: str, rel_type: str, dst: str) -> str:
    return f"(:{src})-[:{rel_type}]->(:{dst})"


def parse_pattern_string(pattern: str) -> Optional[tuple[str, str, str]]:
    match = PATTERN_STRING.match(pattern)
    if match is None:
        return None
    return match.group("src"), match.group("rel"), match.group("dst")


@dataclass
class ExtractionReport:
    """Graph references found in a query, in the shape the checker consumes."""

    node_labels: list[str] = field(default_factory=list)
    node_property_values: list[tuple[str, str, str]] = field(default_factory=list)
    pairwise_relationships: list[str] = field(default_factory=list)
    # side channels, not part of the serialized report
    undirected_patterns: set[str] = field(default_factory=set)
    unresolved_relationships: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "node_labels": list(self.node_labels),
            "node_property_values": [list(triple) for triple in self.node_property_values],
            "pairwise_relationships": list(self.pairwise_relationships),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False)

    def is_empty(self) -> bool:
        return not (self.node_labels or self.node_property_values or self.pairwise_relationships)


def extract(ast: QueryAst) -> ExtractionReport:
    """Deterministic extraction from a parsed query."""
    report = ExtractionReport()
    labels = free_variables(ast).labels
    seen_labels: set[str] = set()
    seen_triples: set[tuple[str, str, str]] = set()
    seen_patterns: set[str] = set()

    def add_label(label: str) -> None:
        if label not in seen_labels:
            seen_labels.add(label)
            report.node_labels.append(label)

    def add_triple(label: Optional[str], key: str, value: object) -> None:
        if label is None:
            return
        triple = (label, key, canonical_text(value))
        if triple not in seen_triples:
            seen_triples.add(triple)
            report.node_property_values.append(triple)

    def add_pattern(chain: PatternChain) -> None:
        for i, rel in enumerate(chain.rels):
            if rel.rel_type is None:
                continue
            left, right = chain.nodes[i], chain.nodes[i + 1]
            left_label = left.label or (labels.get(left.variable) if left.variable else None)
            right_label = right.label or (labels.get(right.variable) if right.variable else None)
            if left_label is None or right_label is None:
                report.unresolved_relationships.append(rel.rel_type)
                continue
            if rel.direction == "left":
                src_label, dst_label = right_label, left_label
            else:
                # undirected patterns read left-to-right as written
                src_label, dst_label = left_label, right_label
            pattern = format_pattern(src_label, rel.rel_type, dst_label)
            if pattern not in seen_patterns:
                seen_patterns.add(pattern)
                report.pairwise_relationships.append(pattern)
            if rel.direction == "undirected":
                report.undirected_patterns.add(pattern)

    def label_of(expr) -> Optional[str]:
        if isinstance(expr, Variable):
            return labels.get(expr.name)
        return None

    def property_target(expr) -> Optional[tuple[Optional[str], str]]:
        """Resolve `v.key` or `toLower(v.key)` to (label, key)."""
        if isinstance(expr, FunctionCall) and expr.name in ("tolower", "toupper") and expr.arg is not None:
            return property_target(expr.arg)
        if isinstance(expr, PropertyAccess):
            return label_of(expr.subject), expr.dotted_key
        return None

    def literal_value(expr) -> tuple[bool, object]:
        if isinstance(expr, Literal):
            return True, expr.value
        if isinstance(expr, Unary) and expr.op == "neg":
            ok, value = literal_value(expr.operand)
            if ok and isinstance(value, (int, float)):
                return True, -value
        return False, None

    def walk_expr(expr) -> None:
        if isinstance(expr, Binary):
            if expr.op == "=":
                for target_side, value_side in ((expr.left, expr.right), (expr.right, expr.left)):
                    target = property_target(target_side)
                    ok, value = literal_value(value_side)
                    if target is not None and ok:
                        add_triple(target[0], target[1], value)
                        break
            elif expr.op == "in":
                target = property_target(expr.left)
                if target is not None and isinstance(expr.right, ListLiteral):
                    for item in expr.right.items:
                        ok, value = literal_value(item)
                        if ok:
                            add_triple(target[0], target[1], value)
            walk_expr(expr.left)
            walk_expr(expr.right)
        elif isinstance(expr, Unary):
            walk_expr(expr.operand)
        elif isinstance(expr, ListLiteral):
            for item in expr.items:
                walk_expr(item)
        elif isinstance(expr, FunctionCall) and expr.arg is not None:
            walk_expr(expr.arg)
        elif isinstance(expr, PropertyAccess):
            walk_expr(expr.subject)
        elif isinstance(expr, PatternPredicate):
            visit_chain(expr.chain)

    def visit_chain(chain: PatternChain) -> None:
        for node in chain.nodes:
            if node.label is not None:
                add_label(node.label)
            node_label = node.label or (labels.get(node.variable) if node.variable else None)
            for key, value in node.properties:
                add_triple(node_label, key, value)
        add_pattern(chain)

    for clause in ast.clauses:
        if isinstance(clause, MatchClause):
            for chain in clause.patterns:
                visit_chain(chain)
        elif isinstance(clause, WhereClause):
            walk_expr(clause.expr)
    return report


def extract_from_text(query_text: str) -> ExtractionReport:
    """Extraction over raw query text, tolerating pattern predicates in WHERE."""
    return extract(parse_for_extraction(query_text))


def _report_from_payload(payload: dict) -> ExtractionReport:
    report = ExtractionReport()
    labels = payload.get("node_labels")
    triples = payload.get("node_property_values")
    patterns = payload.get("pairwise_relationships")
    if not isinstance(labels, list) or not isinstance(triples, list) or not isinstance(patterns, list):
        raise ValueError("extraction payload keys must be lists")
    for label in labels:
        if not isinstance(label, str):
            raise ValueError("node_labels must be strings")
        if label not in report.node_labels:
            report.node_labels.append(label)
    for triple in triples:
        if not isinstance(triple, list) or len(triple) != 3:
            raise ValueError("node_property_values entries must be [label, key, value]")
        entry = (str(triple[0]), str(triple[1]), canonical_text(triple[2]) if not isinstance(triple[2], str) else triple[2])
        if entry not in report.node_property_values:
            report.node_property_values.append(entry)
    for pattern in patterns:
        if not isinstance(pattern, str) or parse_pattern_string(pattern) is None:
            raise ValueError(f"pattern {pattern!r} does not match (:Src)-[:type]->(:Dst)")
        if pattern not in report.pairwise_relationships:
            report.pairwise_relationships.append(pattern)
    return report


def extract_llm(query_text: str, gateway: ChatGateway) -> ExtractionReport:
    """LLM-backed extraction producing the same report shape.

    Schema-invalid output (bad JSON, missing keys, malformed entries) gets one
    reformat retry; a second failure raises LlmFormatError.
    """
    report = gateway.complete_structured(
        extractor_turns(query_text),
        "extractor",
        ["node_labels", "node_property_values", "pairwise_relationships"],
        validate=_report_from_payload,
    )
    return report
