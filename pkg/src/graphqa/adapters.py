"""Converters from published benchmark dumps into the native ingest formats.

Graph dumps and QA files in the wild vary in field naming; these adapters
normalize the common variants into the loader's `{"nodes": [...], "edges":
[...]}` shape and the harness's JSON-lines QA shape. Properties repeated for
the same key fold into a list value.
"""

from __future__ import annotations

import json
from typing import IO, Union

from .store import GraphFormatError

_NODE_LIST_KEYS = ("nodes", "vertices", "entities")
_EDGE_LIST_KEYS = ("edges", "relationships", "relations", "links")
_EDGE_TYPE_KEYS = ("type", "rel_type", "label", "relationship")
_EDGE_SRC_KEYS = ("start", "source", "src", "from", "start_node", "subj")
_EDGE_DST_KEYS = ("end", "target", "dst", "to", "end_node", "obj")


def _first(entry: dict, keys: tuple[str, ...]):
    for key in keys:
        if key in entry and entry[key] is not None:
            return entry[key]
    return None


def _fold_properties(raw: dict) -> dict:
    properties = {}
    for key, value in raw.items():
        if key in properties:
            existing = properties[key]
            properties[key] = (existing if isinstance(existing, list) else [existing]) + [value]
        else:
            properties[key] = value
    return properties


def convert_graph_dump(data: dict) -> dict:
    """Map a benchmark graph dump into the native node/edge document."""
    if not isinstance(data, dict):
        raise GraphFormatError("graph dump must be a JSON object")
    raw_nodes = _first(data, _NODE_LIST_KEYS)
    raw_edges = _first(data, _EDGE_LIST_KEYS) or []
    if not isinstance(raw_nodes, list):
        raise GraphFormatError(f"graph dump lacks a node list (tried {', '.join(_NODE_LIST_KEYS)})")
    nodes = []
    for i, entry in enumerate(raw_nodes):
        if not isinstance(entry, dict):
            raise GraphFormatError(f"nodes[{i}]: expected an object")
        node_id = entry.get("id") or entry.get("name") or entry.get("_id")
        if node_id is None:
            raise GraphFormatError(f"nodes[{i}]: no id-like field")
        labels = entry.get("labels")
        if labels is None:
            label = entry.get("label") or entry.get("type")
            labels = [label] if label else None
        if not labels:
            raise GraphFormatError(f"nodes[{i}] (id {node_id!r}): no labels")
        properties = entry.get("properties")
        if properties is None:
            skip = {"id", "_id", "labels", "label", "type"}
            properties = {k: v for k, v in entry.items() if k not in skip}
        nodes.append(
            {
                "id": str(node_id),
                "labels": [str(l) for l in labels],
                "properties": _fold_properties(properties),
            }
        )
    edges = []
    for i, entry in enumerate(raw_edges):
        if not isinstance(entry, dict):
            raise GraphFormatError(f"edges[{i}]: expected an object")
        rel_type = _first(entry, _EDGE_TYPE_KEYS)
        src = _first(entry, _EDGE_SRC_KEYS)
        dst = _first(entry, _EDGE_DST_KEYS)
        if rel_type is None or src is None or dst is None:
            raise GraphFormatError(f"edges[{i}]: missing type/start/end fields")
        edge_id = entry.get("id") or f"auto-edge-{i}"
        properties = entry.get("properties") or {}
        edges.append(
            {
                "id": str(edge_id),
                "type": str(rel_type),
                "start": str(src),
                "end": str(dst),
                "properties": _fold_properties(properties),
            }
        )
    return {"nodes": nodes, "edges": edges}


def convert_qa_items(data: Union[list, dict], domain: str = "default") -> list[dict]:
    """Map a published QA file into harness JSON-lines items."""
    if isinstance(data, dict):
        for key in ("questions", "items", "data", "qa_pairs"):
            if isinstance(data.get(key), list):
                data = data[key]
                break
        else:
            raise GraphFormatError("QA document holds no recognizable item list")
    items = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise GraphFormatError(f"items[{i}]: expected an object")
        question = _first(entry, ("question", "nl_question", "text"))
        if question is None:
            raise GraphFormatError(f"items[{i}]: no question field")
        answer = _first(entry, ("ground_truth", "answer", "answers", "gold_answer", "result"))
        qid = entry.get("qid") or entry.get("id") or f"{domain}-{i}"
        items.append(
            {
                "qid": str(qid),
                "question": str(question),
                "ground_truth": answer,
                "domain": str(entry.get("domain") or domain),
            }
        )
    if not items:
        raise GraphFormatError("QA document holds no items")
    return items


def convert_graph_file(src_path: str, dst: IO[str]) -> int:
    with open(src_path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    converted = convert_graph_dump(data)
    json.dump(converted, dst, ensure_ascii=False, indent=2)
    dst.write("\n")
    return len(converted["nodes"])


def convert_qa_file(src_path: str, dst: IO[str], domain: str = "default") -> int:
    with open(src_path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    items = convert_qa_items(data, domain)
    for item in items:
        dst.write(json.dumps(item, ensure_ascii=False) + "\n")
    return len(items)
