"""Graph schema discovery and prompt-ready text rendering.

The two renderings mirror the shape an LLM sees in its system prompt: node
types with one sampled value per property key, and relationship types as
`(:Src)-[:type]->(:Dst)` pattern lines resembling Cypher syntax.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .store import Value, canonical_text

NODES_HEADER = (
    "Each node type includes properties\n"
    "hierarchy divided by '.' and sampled\n"
    "examples of each property values.\n"
)

_PATTERN_LINE = re.compile(r"^- \(:(?P<src>[^)]+)\)-\[:(?P<rel>[^\]]+)\]->\(:(?P<dst>[^)]+)\)$")


@dataclass
class NodeType:
    label: str
    properties: list[tuple[str, Value]] = field(default_factory=list)  # (key, sampled value)


@dataclass
class RelationshipType:
    rel_type: str
    patterns: list[tuple[str, str]] = field(default_factory=list)  # (src label, dst label)


@dataclass
class GraphSchema:
    node_types: list[NodeType] = field(default_factory=list)
    relationship_types: list[RelationshipType] = field(default_factory=list)


def introspect(backend) -> GraphSchema:
    """Derive the schema visible through a backend's auxiliary scans."""
    schema = GraphSchema()
    for label in backend.distinct_labels():
        samples = []
        for key in backend.property_keys(label):
            samples.append((key, backend.sample_property_value(label, key)))
        schema.node_types.append(NodeType(label, samples))
    by_type: dict[str, list[tuple[str, str]]] = {}
    for src, rel, dst in backend.distinct_relationship_patterns():
        by_type.setdefault(rel, []).append((src, dst))
    for rel in sorted(by_type):
        schema.relationship_types.append(RelationshipType(rel, sorted(set(by_type[rel]))))
    return schema


def render_sample(value: Value) -> str:
    """Text form of a sampled value, quoted when it contains a comma."""
    text = canonical_text(value)
    if isinstance(value, (str, list)) and "," in text:
        return f'"{text}"'
    return text


def render_nodes(schema: GraphSchema) -> str:
    blocks = [NODES_HEADER]
    for node_type in schema.node_types:
        lines = [f"Node Type: {node_type.label}", "Properties:"]
        for key, sample in node_type.properties:
            lines.append(f"\t.{key}: {render_sample(sample)}")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def render_relationships(schema: GraphSchema) -> str:
    if not schema.relationship_types:
        return ""
    blocks = []
    for rel in schema.relationship_types:
        lines = [f"Type: {rel.rel_type}"]
        for src, dst in rel.patterns:
            lines.append(f"- (:{src})-[:{rel.rel_type}]->(:{dst})")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def parse_pattern_line(line: str) -> Optional[tuple[str, str, str]]:
    """Recover the (src, rel, dst) triple from a rendered pattern line."""
    match = _PATTERN_LINE.match(line.strip())
    if match is None:
        return None
    return match.group("src"), match.group("rel"), match.group("dst")
