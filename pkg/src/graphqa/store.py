"""Embedded in-memory labeled property graph.

The graph is a directed multi-graph: nodes carry a non-empty set of labels,
edges carry exactly one relationship type, and both carry flat key/value
property maps. Property keys may contain dots (``BaseQuantities.GrossVolume``
is a single flat key). Values are scalars (str, int, float, bool, None) or
non-nested lists of scalars; None is a stored value, distinct from a missing
key.

Concurrency contract: many concurrent readers OR one writer. A graph handed
to the query pipeline is treated as immutable for the duration of the run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, IO, Iterable, Optional, Union

Value = Union[None, bool, int, float, str, list]

_SCALAR_TYPES = (bool, int, float, str)


class GraphError(Exception):
    """Base class for graph store errors."""


class EmptyLabelSet(GraphError):
    """A node was created without any label."""


class UnknownEndpoint(GraphError):
    """An edge references a node id that does not exist."""


class UnknownElement(GraphError):
    """An id does not name any node or edge in the graph."""


class GraphFormatError(GraphError):
    """A graph file failed validation; message carries the element context."""


def check_value(value: Any, context: str = "value") -> Value:
    """Validate a property value: scalar or a non-nested list of scalars."""
    if value is None or isinstance(value, _SCALAR_TYPES):
        return value
    if isinstance(value, list):
        for i, item in enumerate(value):
            if item is None or isinstance(item, _SCALAR_TYPES):
                continue
            raise GraphFormatError(
                f"{context}: list element {i} is {type(item).__name__}; "
                "lists may only hold scalars and never nest"
            )
        return value
    raise GraphFormatError(f"{context}: unsupported value type {type(value).__name__}")


def _check_properties(properties: Optional[dict], context: str) -> dict:
    props = dict(properties or {})
    for key, value in props.items():
        if not isinstance(key, str) or not key:
            raise GraphFormatError(f"{context}: property keys must be non-empty strings")
        check_value(value, f"{context}, key {key!r}")
    return props


def canonical_text(value: Value) -> str:
    """Deterministic text form of a value, used for ordering and display.

    Lists render as their elements joined by ", " so a sampled list property
    reads naturally in schema listings.
    """
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return ", ".join(canonical_text(item) for item in value)
    return repr(value)


def value_sort_key(value: Value) -> tuple:
    return (canonical_text(value), repr(value))


@dataclass
class NodeRecord:
    id: str
    labels: frozenset[str]
    properties: dict[str, Value]


@dataclass
class EdgeRecord:
    id: str
    rel_type: str
    src: str
    dst: str
    properties: dict[str, Value]


@dataclass(frozen=True)
class Path:
    """Alternating node/edge id sequence n1, e1, n2, ..., ek, n(k+1)."""

    elements: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.elements) % 2 == 0 or not self.elements:
            raise ValueError("a path holds an odd-length, non-empty id sequence")

    @property
    def length(self) -> int:
        return len(self.elements) // 2


class PropertyGraph:
    """Mutable in-memory property graph with label and adjacency indexes."""

    def __init__(self) -> None:
        self.nodes: dict[str, NodeRecord] = {}
        self.edges: dict[str, EdgeRecord] = {}
        self._outgoing: dict[str, list[str]] = {}
        self._incoming: dict[str, list[str]] = {}
        self._label_index: dict[str, set[str]] = {}
        self._next_id = 0

    # -- mutation ---------------------------------------------------------

    def add_node(
        self,
        labels: Iterable[str],
        properties: Optional[dict[str, Value]] = None,
        node_id: Optional[str] = None,
    ) -> str:
        label_set = frozenset(labels)
        if not label_set or any(not l for l in label_set):
            raise EmptyLabelSet("a node requires at least one non-empty label")
        nid = node_id if node_id is not None else self._fresh_id("n")
        if nid in self.nodes or nid in self.edges:
            raise GraphFormatError(f"id {nid!r} already in use")
        props = _check_properties(properties, f"node {nid!r}")
        self.nodes[nid] = NodeRecord(nid, label_set, props)
        self._outgoing[nid] = []
        self._incoming[nid] = []
        for label in label_set:
            self._label_index.setdefault(label, set()).add(nid)
        return nid

    def add_edge(
        self,
        rel_type: str,
        src: str,
        dst: str,
        properties: Optional[dict[str, Value]] = None,
        edge_id: Optional[str] = None,
    ) -> str:
        if not rel_type:
            raise GraphFormatError("relationship type must be non-empty")
        if src not in self.nodes:
            raise UnknownEndpoint(f"source node {src!r} does not exist")
        if dst not in self.nodes:
            raise UnknownEndpoint(f"target node {dst!r} does not exist")
        eid = edge_id if edge_id is not None else self._fresh_id("e")
        if eid in self.edges or eid in self.nodes:
            raise GraphFormatError(f"id {eid!r} already in use")
        props = _check_properties(properties, f"edge {eid!r}")
        self.edges[eid] = EdgeRecord(eid, rel_type, src, dst, props)
        self._outgoing[src].append(eid)
        self._incoming[dst].append(eid)
        return eid

    def remove_edge(self, edge_id: str) -> None:
        edge = self.edges.pop(edge_id, None)
        if edge is None:
            raise UnknownElement(f"edge {edge_id!r} does not exist")
        self._outgoing[edge.src].remove(edge_id)
        self._incoming[edge.dst].remove(edge_id)

    def remove_node(self, node_id: str) -> None:
        node = self.nodes.get(node_id)
        if node is None:
            raise UnknownElement(f"node {node_id!r} does not exist")
        for eid in list(self._outgoing[node_id]) + list(self._incoming[node_id]):
            if eid in self.edges:
                self.remove_edge(eid)
        del self.nodes[node_id]
        del self._outgoing[node_id]
        del self._incoming[node_id]
        for label in node.labels:
            self._label_index[label].discard(node_id)
            if not self._label_index[label]:
                del self._label_index[label]

    def _fresh_id(self, prefix: str) -> str:
        while True:
            candidate = f"{prefix}{self._next_id}"
            self._next_id += 1
            if candidate not in self.nodes and candidate not in self.edges:
                return candidate

    # -- lookup -----------------------------------------------------------

    def node(self, node_id: str) -> NodeRecord:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownElement(f"node {node_id!r} does not exist") from None

    def edge(self, edge_id: str) -> EdgeRecord:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownElement(f"edge {edge_id!r} does not exist") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self.nodes

    def nodes_by_label(self, label: str) -> list[NodeRecord]:
        ids = self._label_index.get(label, set())
        return [self.nodes[nid] for nid in sorted(ids)]

    def all_nodes(self) -> list[NodeRecord]:
        return [self.nodes[nid] for nid in sorted(self.nodes)]

    def all_edges(self) -> list[EdgeRecord]:
        return [self.edges[eid] for eid in sorted(self.edges)]

    def outgoing(self, node_id: str, rel_type: Optional[str] = None) -> list[EdgeRecord]:
        self.node(node_id)
        edges = [self.edges[eid] for eid in sorted(self._outgoing[node_id])]
        if rel_type is not None:
            edges = [e for e in edges if e.rel_type == rel_type]
        return edges

    def incoming(self, node_id: str, rel_type: Optional[str] = None) -> list[EdgeRecord]:
        self.node(node_id)
        edges = [self.edges[eid] for eid in sorted(self._incoming[node_id])]
        if rel_type is not None:
            edges = [e for e in edges if e.rel_type == rel_type]
        return edges

    # -- schema-facing scans ------------------------------------------------

    def distinct_labels(self) -> list[str]:
        return sorted(self._label_index)

    def distinct_relationship_patterns(self) -> list[tuple[str, str, str]]:
        """Observed (source label, relationship type, target label) triples.

        A node with several labels contributes one triple per label, so a
        single edge can surface multiple patterns.
        """
        seen: set[tuple[str, str, str]] = set()
        for edge in self.edges.values():
            for src_label in self.nodes[edge.src].labels:
                for dst_label in self.nodes[edge.dst].labels:
                    seen.add((src_label, edge.rel_type, dst_label))
        return sorted(seen)

    def distinct_property_values(self, label: str, key: str, cap: int = 1000) -> list[Value]:
        """Distinct values of `key` across nodes labeled `label`.

        Sorted by canonical text form and truncated at `cap`; unknown labels
        or keys simply yield an empty list.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        values: list[Value] = []
        seen: set[str] = set()
        for node in self.nodes_by_label(label):
            if key not in node.properties:
                continue
            value = node.properties[key]
            marker = repr(value)
            if marker in seen:
                continue
            seen.add(marker)
            values.append(value)
        values.sort(key=value_sort_key)
        return values[:cap]

    def property_keys(self, label: str) -> list[str]:
        keys: set[str] = set()
        for node in self.nodes_by_label(label):
            keys.update(node.properties)
        return sorted(keys)

    def sample_property_value(self, label: str, key: str) -> Optional[Value]:
        """Value of `key` on the node with the smallest id carrying it."""
        for node in self.nodes_by_label(label):
            if key in node.properties:
                return node.properties[key]
        return None

    # -- paths --------------------------------------------------------------

    def validate_path(self, path: Path) -> bool:
        """Check the alternation constraint: each edge links its neighbors.

        Every id must name an existing element; a sequence whose edges do not
        run source-to-target in order is invalid rather than erroneous.
        """
        for element in path.elements:
            if element not in self.nodes and element not in self.edges:
                raise UnknownElement(f"id {element!r} does not exist")
        for i, element in enumerate(path.elements):
            expected_node = i % 2 == 0
            if expected_node != (element in self.nodes):
                return False
        for i in range(1, len(path.elements), 2):
            edge = self.edges[path.elements[i]]
            if edge.src != path.elements[i - 1] or edge.dst != path.elements[i + 1]:
                return False
        return True

    # -- serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "labels": sorted(n.labels), "properties": n.properties}
                for n in self.all_nodes()
            ],
            "edges": [
                {
                    "id": e.id,
                    "type": e.rel_type,
                    "start": e.src,
                    "end": e.dst,
                    "properties": e.properties,
                }
                for e in self.all_edges()
            ],
        }


def graph_from_dict(data: Any) -> PropertyGraph:
    """Build a graph from the ingest dict shape; diagnostics name the element."""
    if not isinstance(data, dict):
        raise GraphFormatError("graph document must be a JSON object")
    graph = PropertyGraph()
    nodes = data.get("nodes")
    if not isinstance(nodes, list):
        raise GraphFormatError('graph document requires a "nodes" array')
    for i, entry in enumerate(nodes):
        context = f"nodes[{i}]"
        if not isinstance(entry, dict):
            raise GraphFormatError(f"{context}: expected an object")
        node_id = entry.get("id")
        if not isinstance(node_id, str) or not node_id:
            raise GraphFormatError(f"{context}: missing or invalid id")
        labels = entry.get("labels")
        if not isinstance(labels, list) or not labels:
            raise GraphFormatError(f'{context} (id {node_id!r}): "labels" must be a non-empty array')
        try:
            graph.add_node(labels, entry.get("properties") or {}, node_id=node_id)
        except GraphError as exc:
            raise GraphFormatError(f"{context} (id {node_id!r}): {exc}") from None
    edges = data.get("edges")
    if not isinstance(edges, list):
        raise GraphFormatError('graph document requires an "edges" array')
    for i, entry in enumerate(edges):
        context = f"edges[{i}]"
        if not isinstance(entry, dict):
            raise GraphFormatError(f"{context}: expected an object")
        edge_id = entry.get("id")
        if not isinstance(edge_id, str) or not edge_id:
            raise GraphFormatError(f"{context}: missing or invalid id")
        rel_type = entry.get("type")
        if not isinstance(rel_type, str) or not rel_type:
            raise GraphFormatError(f'{context} (id {edge_id!r}): "type" must be a non-empty string')
        src, dst = entry.get("start"), entry.get("end")
        try:
            graph.add_edge(rel_type, src, dst, entry.get("properties") or {}, edge_id=edge_id)
        except UnknownEndpoint as exc:
            raise GraphFormatError(f"{context} (id {edge_id!r}): {exc}") from None
        except GraphError as exc:
            raise GraphFormatError(f"{context} (id {edge_id!r}): {exc}") from None
    return graph


def load_graph_json(source: Union[str, IO[str]]) -> PropertyGraph:
    """Load a graph from a JSON file path or open text stream."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            return load_graph_json(handle)
    try:
        data = json.load(source)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return graph_from_dict(data)
