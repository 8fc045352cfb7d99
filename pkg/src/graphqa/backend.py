"""Uniform query execution over the embedded engine or a remote graph server.

Query-level failures (syntax, type misuse) never raise: they come back as an
`QueryOutcome` carrying the engine's message verbatim so the evaluating LLM
can read it. Transport problems are different: they signal infrastructure
failure and raise `TransportError`.
"""

from __future__ import annotations

import enum
import os
import threading
from dataclasses import dataclass
from typing import Optional

import requests

from .cypher import EvalError, ParseError, ResultTable, evaluate, parse
from .store import PropertyGraph, Value, value_sort_key

DEFAULT_ROW_CAP = 1000


class TransportError(Exception):
    """Connectivity or timeout failure talking to a remote service."""


@dataclass
class QueryOutcome:
    """Execution result: either a row table or an error message."""

    rows: Optional[ResultTable] = None
    error: Optional[str] = None
    truncated: bool = False

    def __post_init__(self) -> None:
        if (self.rows is None) == (self.error is None):
            raise ValueError("outcome holds exactly one of rows or error")
        if self.error is not None and not self.error:
            raise ValueError("error message must be non-empty")

    @classmethod
    def from_rows(cls, rows: ResultTable, truncated: bool = False) -> "QueryOutcome":
        return cls(rows=rows, truncated=truncated)

    @classmethod
    def from_error(cls, message: str) -> "QueryOutcome":
        return cls(error=message or "unknown execution error")

    def to_json_dict(self) -> dict:
        if self.error is not None:
            return {"error": self.error, "columns": None, "rows": None, "truncated": False}
        return {
            "error": None,
            "columns": list(self.rows.columns),
            "rows": self.rows.to_json_rows(),
            "truncated": self.truncated,
        }


class OutcomeClass(enum.Enum):
    OK_WITH_DATA = "ok_with_data"
    EMPTY = "empty"
    ERROR = "error"


def classify(outcome: QueryOutcome) -> OutcomeClass:
    """Three-way outcome split driving the refinement loop.

    A row set is EMPTY when it has no rows or when every value in every row
    is null (an all-null row carries no information). A count of zero is
    data, not emptiness; deciding what a zero means is the evaluator's job.
    """
    if outcome.error is not None:
        return OutcomeClass.ERROR
    if not outcome.rows.rows or outcome.rows.all_null():
        return OutcomeClass.EMPTY
    return OutcomeClass.OK_WITH_DATA


@dataclass
class BackendConfig:
    kind: str = "embedded"  # "embedded" | "remote"
    graph_path: Optional[str] = None
    endpoint: Optional[str] = None
    credentials_env: str = "GRAPH_DB_TOKEN"
    timeout: float = 30.0
    row_cap: int = DEFAULT_ROW_CAP
    pool_size: int = 4

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.row_cap < 1:
            raise ValueError("row cap must be >= 1")


class EmbeddedBackend:
    """Runs queries in-process against a loaded property graph."""

    def __init__(self, graph: PropertyGraph, row_cap: int = DEFAULT_ROW_CAP) -> None:
        self.graph = graph
        self.row_cap = row_cap

    def execute(self, query_text: str) -> QueryOutcome:
        try:
            table = evaluate(parse(query_text), self.graph)
        except (ParseError, EvalError) as exc:
            return QueryOutcome.from_error(str(exc))
        truncated = len(table.rows) > self.row_cap
        if truncated:
            table = ResultTable(table.columns, table.rows[: self.row_cap])
        return QueryOutcome.from_rows(table, truncated=truncated)

    # auxiliary scans used by schema introspection and entity verification

    def distinct_labels(self) -> list[str]:
        return self.graph.distinct_labels()

    def distinct_relationship_patterns(self) -> list[tuple[str, str, str]]:
        return self.graph.distinct_relationship_patterns()

    def distinct_property_values(self, label: str, key: str, cap: int = DEFAULT_ROW_CAP) -> list[Value]:
        return self.graph.distinct_property_values(label, key, cap)

    def property_keys(self, label: str) -> list[str]:
        return self.graph.property_keys(label)

    def sample_property_value(self, label: str, key: str) -> Optional[Value]:
        return self.graph.sample_property_value(label, key)


# Introspection and verification run the same auxiliary queries against any
# remote server. They use stock openCypher (labels(), keys(), type(), id())
# rather than vendor schema procedures, so any LPG engine can answer them;
# the client normalizes ordering and caps locally.


def aux_label_scan() -> str:
    return "MATCH (n) UNWIND labels(n) AS label RETURN DISTINCT label"


def aux_pattern_scan() -> str:
    return (
        "MATCH (a)-[r]->(b) UNWIND labels(a) AS src UNWIND labels(b) AS dst "
        "RETURN DISTINCT src, type(r) AS rel, dst"
    )


def aux_key_scan(label: str) -> str:
    return f"MATCH (n:`{label}`) UNWIND keys(n) AS key RETURN DISTINCT key"


def aux_value_scan(label: str, key: str) -> str:
    return f"MATCH (n:`{label}`) WHERE n.`{key}` IS NOT NULL RETURN DISTINCT n.`{key}` AS value"


def aux_sample_scan(label: str, key: str) -> str:
    return (
        f"MATCH (n:`{label}`) WHERE n.`{key}` IS NOT NULL "
        f"RETURN n.`{key}` AS value, id(n) AS node_id"
    )


class RemoteBackend:
    """HTTP client for an openCypher-speaking graph server.

    Wire contract: POST {endpoint}/query with {"query": text}; the server
    answers {"columns": [...], "rows": [[...], ...]} or {"error": message}.
    Credentials travel as a bearer token read from the configured environment
    variable; the value itself is never logged or echoed.
    """

    def __init__(self, config: BackendConfig) -> None:
        if not config.endpoint:
            raise ValueError("remote backend requires an endpoint URL")
        self.config = config
        self._session = requests.Session()
        self._slots = threading.Semaphore(config.pool_size)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.credentials_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def execute(self, query_text: str) -> QueryOutcome:
        url = self.config.endpoint.rstrip("/") + "/query"
        try:
            with self._slots:
                response = self._session.post(
                    url,
                    json={"query": query_text},
                    headers=self._headers(),
                    timeout=self.config.timeout,
                )
        except requests.RequestException as exc:
            raise TransportError(f"graph server request failed: {exc}") from exc
        if response.status_code >= 500:
            raise TransportError(f"graph server error: HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise TransportError("graph server returned a non-JSON response") from exc
        if "error" in payload and payload["error"] is not None:
            return QueryOutcome.from_error(str(payload["error"]))
        columns = payload.get("columns")
        raw_rows = payload.get("rows")
        if not isinstance(columns, list) or not isinstance(raw_rows, list):
            raise TransportError("graph server response is missing columns/rows")
        truncated = len(raw_rows) > self.config.row_cap
        raw_rows = raw_rows[: self.config.row_cap]
        rows = [dict(zip(columns, row)) for row in raw_rows]
        return QueryOutcome.from_rows(ResultTable(list(columns), rows), truncated=truncated)

    def _aux_rows(self, query: str) -> list[dict]:
        outcome = self.execute(query)
        if outcome.error is not None:
            raise TransportError(f"auxiliary query failed: {outcome.error}")
        return outcome.rows.rows

    def distinct_labels(self) -> list[str]:
        return sorted({row["label"] for row in self._aux_rows(aux_label_scan())})

    def distinct_relationship_patterns(self) -> list[tuple[str, str, str]]:
        rows = self._aux_rows(aux_pattern_scan())
        return sorted({(row["src"], row["rel"], row["dst"]) for row in rows})

    def distinct_property_values(self, label: str, key: str, cap: int = DEFAULT_ROW_CAP) -> list[Value]:
        rows = self._aux_rows(aux_value_scan(label, key))
        values = []
        seen = set()
        for row in rows:
            value = row["value"]
            marker = repr(value)
            if marker in seen:
                continue
            seen.add(marker)
            values.append(value)
        values.sort(key=value_sort_key)
        return values[:cap]

    def property_keys(self, label: str) -> list[str]:
        return sorted({row["key"] for row in self._aux_rows(aux_key_scan(label))})

    def sample_property_value(self, label: str, key: str) -> Optional[Value]:
        rows = self._aux_rows(aux_sample_scan(label, key))
        if not rows:
            return None
        best = min(rows, key=lambda row: str(row["node_id"]))
        return best["value"]


def open_backend(config: BackendConfig, graph: Optional[PropertyGraph] = None):
    """Construct a backend from config; embedded mode loads the graph file."""
    if config.kind == "embedded":
        if graph is None:
            from .store import load_graph_json

            if not config.graph_path:
                raise ValueError("embedded backend requires a graph file path")
            graph = load_graph_json(config.graph_path)
        return EmbeddedBackend(graph, row_cap=config.row_cap)
    if config.kind == "remote":
        return RemoteBackend(config)
    raise ValueError(f"unknown backend kind {config.kind!r}")
