"""Query evaluation over the in-memory property graph.

Evaluation is read-only and deterministic: pattern matches are explored in
ascending (node id, edge id) order, so two runs over the same graph produce
identical row orders even without ORDER BY.

Null discipline follows Cypher: missing properties read as null, most
operators propagate null, and WHERE keeps a row only when its predicate is
strictly true.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from ..store import EdgeRecord, NodeRecord, PropertyGraph, Value, canonical_text
from .ast import (
    AGGREGATE_FUNCTIONS,
    Binary,
    FunctionCall,
    LimitClause,
    ListLiteral,
    Literal,
    MatchClause,
    NodeElement,
    OrderByClause,
    PatternChain,
    PatternPredicate,
    ProjectionItem,
    PropertyAccess,
    QueryAst,
    RelElement,
    ReturnClause,
    Unary,
    UnwindClause,
    Variable,
    WhereClause,
    WithClause,
    contains_aggregate,
)
from .errors import EvalError

_UNSET = object()


@dataclass
class ResultTable:
    """Tabular query result: ordered column names and name->value rows."""

    columns: list[str]
    rows: list[dict[str, Value]]

    def to_json_rows(self) -> list[dict[str, Value]]:
        return [dict(row) for row in self.rows]

    def all_null(self) -> bool:
        return all(value is None for row in self.rows for value in row.values())


@dataclass
class _Table:
    columns: list[str]
    rows: list[dict]


def evaluate(ast: QueryAst, graph: PropertyGraph) -> ResultTable:
    table = _Table([], [{}])
    clauses = list(ast.clauses)
    final: Optional[_Table] = None
    i = 0
    while i < len(clauses):
        clause = clauses[i]
        if isinstance(clause, MatchClause):
            where = None
            if i + 1 < len(clauses) and isinstance(clauses[i + 1], WhereClause):
                where = clauses[i + 1].expr
                i += 1
            table = _apply_match(table, clause, where, graph)
        elif isinstance(clause, WhereClause):
            table = _Table(
                table.columns,
                [row for row in table.rows if _eval_scalar(clause.expr, row, graph) is True],
            )
        elif isinstance(clause, UnwindClause):
            table = _apply_unwind(table, clause, graph)
        elif isinstance(clause, (WithClause, ReturnClause)):
            order = None
            limit = None
            j = i + 1
            if j < len(clauses) and isinstance(clauses[j], OrderByClause):
                order = clauses[j]
                j += 1
            if j < len(clauses) and isinstance(clauses[j], LimitClause):
                limit = clauses[j]
                j += 1
            table = _project(table, clause.items, clause.distinct, order, limit, graph)
            if isinstance(clause, ReturnClause):
                final = table
            i = j - 1
        else:  # pragma: no cover - parser only emits the clauses above
            raise EvalError(f"unsupported clause {type(clause).__name__}")
        i += 1
    assert final is not None, "parser guarantees a RETURN clause"
    rows = [
        {column: _materialize(row[column]) for column in final.columns} for row in final.rows
    ]
    return ResultTable(list(final.columns), rows)


# -- pattern matching ---------------------------------------------------------


def _node_matches(elem: NodeElement, node: NodeRecord) -> bool:
    if elem.label is not None and elem.label not in node.labels:
        return False
    for key, literal in elem.properties:
        if _eq(node.properties.get(key), literal) is not True:
            return False
    return True


def _apply_match(table: _Table, clause: MatchClause, where, graph: PropertyGraph) -> _Table:
    new_vars: list[str] = []
    for chain in clause.patterns:
        for elem in chain.nodes:
            if elem.variable and elem.variable not in table.columns and elem.variable not in new_vars:
                new_vars.append(elem.variable)
        for rel in chain.rels:
            if rel.variable and rel.variable not in table.columns and rel.variable not in new_vars:
                new_vars.append(rel.variable)
    out_rows: list[dict] = []
    for row in table.rows:
        matched = []
        for binding in _match_clause_patterns(graph, clause.patterns, row):
            if where is None or _eval_scalar(where, binding, graph) is True:
                matched.append(binding)
        if matched:
            out_rows.extend(matched)
        elif clause.optional:
            null_row = dict(row)
            for var in new_vars:
                null_row[var] = None
            out_rows.append(null_row)
    return _Table(table.columns + new_vars, out_rows)


def _match_clause_patterns(
    graph: PropertyGraph, chains: tuple[PatternChain, ...], initial: dict
) -> list[dict]:
    """All bindings extending `initial` that satisfy every pattern chain.

    Edge uniqueness holds across the whole clause: no edge may be bound by two
    relationship elements, named or anonymous.
    """
    results: list[dict] = []

    def next_chain(index: int, binding: dict, used: frozenset) -> None:
        if index == len(chains):
            results.append(binding)
            return
        _match_chain(
            graph,
            chains[index],
            binding,
            used,
            lambda b, u: next_chain(index + 1, b, u),
        )

    next_chain(0, dict(initial), frozenset())
    return results


def _match_chain(
    graph: PropertyGraph,
    chain: PatternChain,
    binding: dict,
    used: frozenset,
    emit: Callable[[dict, frozenset], None],
) -> None:
    def start_candidates(elem: NodeElement) -> Iterable[NodeRecord]:
        bound = binding.get(elem.variable, _UNSET) if elem.variable else _UNSET
        if bound is not _UNSET:
            if bound is None:
                return []
            if not isinstance(bound, NodeRecord):
                raise EvalError(f"variable '{elem.variable}' is not bound to a node")
            return [bound] if _node_matches(elem, bound) else []
        pool = graph.nodes_by_label(elem.label) if elem.label else graph.all_nodes()
        return [node for node in pool if _node_matches(elem, node)]

    def rel_candidates(rel: RelElement, current: NodeRecord) -> list[tuple[EdgeRecord, NodeRecord]]:
        pairs: dict[str, tuple[EdgeRecord, NodeRecord]] = {}
        if rel.direction in ("right", "undirected"):
            for edge in graph.outgoing(current.id, rel.rel_type):
                pairs.setdefault(edge.id, (edge, graph.node(edge.dst)))
        if rel.direction in ("left", "undirected"):
            for edge in graph.incoming(current.id, rel.rel_type):
                pairs.setdefault(edge.id, (edge, graph.node(edge.src)))
        return [pairs[eid] for eid in sorted(pairs)]

    def step(index: int, current: NodeRecord, b: dict, u: frozenset) -> None:
        if index == len(chain.rels):
            emit(b, u)
            return
        rel = chain.rels[index]
        nxt_elem = chain.nodes[index + 1]
        for edge, nxt_node in rel_candidates(rel, current):
            if edge.id in u:
                continue
            if rel.variable is not None and rel.variable in b:
                bound = b[rel.variable]
                if bound is None or not isinstance(bound, EdgeRecord):
                    if bound is None:
                        continue
                    raise EvalError(f"variable '{rel.variable}' is not bound to a relationship")
                if bound.id != edge.id:
                    continue
            bound_next = b.get(nxt_elem.variable, _UNSET) if nxt_elem.variable else _UNSET
            if bound_next is not _UNSET:
                if bound_next is None:
                    continue
                if not isinstance(bound_next, NodeRecord):
                    raise EvalError(f"variable '{nxt_elem.variable}' is not bound to a node")
                if bound_next.id != nxt_node.id:
                    continue
            if not _node_matches(nxt_elem, nxt_node):
                continue
            b2 = dict(b)
            if rel.variable is not None:
                b2[rel.variable] = edge
            if nxt_elem.variable is not None and nxt_elem.variable not in b:
                b2[nxt_elem.variable] = nxt_node
            step(index + 1, nxt_node, b2, u | {edge.id})

    first = chain.nodes[0]
    for node in start_candidates(first):
        b = dict(binding)
        if first.variable is not None and first.variable not in binding:
            b[first.variable] = node
        step(0, node, b, used)


# -- projections, unwind, ordering ----------------------------------------------


def _apply_unwind(table: _Table, clause: UnwindClause, graph: PropertyGraph) -> _Table:
    rows = []
    for row in table.rows:
        value = _eval_scalar(clause.expr, row, graph)
        if value is None:
            continue
        elements = value if isinstance(value, list) else [value]
        for element in elements:
            expanded = dict(row)
            expanded[clause.alias] = element
            rows.append(expanded)
    columns = list(table.columns)
    if clause.alias not in columns:
        columns.append(clause.alias)
    return _Table(columns, rows)


def _project(
    table: _Table,
    items: tuple[ProjectionItem, ...],
    distinct: bool,
    order: Optional[OrderByClause],
    limit: Optional[LimitClause],
    graph: PropertyGraph,
) -> _Table:
    """Projection with implicit grouping, then ORDER BY and LIMIT.

    For plain projections ORDER BY may still reference pre-projection
    variables, so each projected row keeps its source row for sorting.
    Aggregation and DISTINCT collapse source rows; sorting then sees only the
    projected values.
    """
    has_agg = [contains_aggregate(item.expr) for item in items]
    if not any(has_agg):
        rows = [
            {item.name: _eval_scalar(item.expr, row, graph) for item in items}
            for row in table.rows
        ]
        sources: Optional[list[dict]] = list(table.rows)
    else:
        group_items = [item for item, agg in zip(items, has_agg) if not agg]
        groups: dict[tuple, tuple[dict, list]] = {}
        group_order: list[tuple] = []
        for row in table.rows:
            key_values = {item.name: _eval_scalar(item.expr, row, graph) for item in group_items}
            key = tuple(_canonical_key(key_values[item.name]) for item in group_items)
            if key not in groups:
                groups[key] = (key_values, [])
                group_order.append(key)
            groups[key][1].append(row)
        if not table.rows and not group_items:
            groups[()] = ({}, [])
            group_order.append(())
        rows = []
        for key in group_order:
            key_values, group_rows = groups[key]
            out = {}
            for item, agg in zip(items, has_agg):
                if agg:
                    out[item.name] = _eval_aggregate_expr(item.expr, group_rows, graph)
                else:
                    out[item.name] = key_values[item.name]
            rows.append(out)
        sources = None
    columns = [item.name for item in items]
    if distinct:
        rows = _dedup_rows(rows, columns)
        sources = None
    if order is not None:
        rows = _apply_order(rows, sources, order, graph)
    if limit is not None:
        rows = rows[: limit.count]
    return _Table(columns, rows)


def _dedup_rows(rows: list[dict], columns: list[str]) -> list[dict]:
    seen: set = set()
    out = []
    for row in rows:
        key = tuple(_canonical_key(row[column]) for column in columns)
        if key in seen:
            continue
        seen.add(key)
        out.append(row)
    return out


_TYPE_RANKS = {"num": 0, "str": 1, "bool": 2, "list": 3, "node": 4, "edge": 5}


def _order_key(value) -> tuple:
    if value is None:
        return (6, 0)
    if isinstance(value, bool):
        return (2, int(value))
    if isinstance(value, (int, float)):
        return (0, float(value))
    if isinstance(value, str):
        return (1, value)
    if isinstance(value, list):
        return (3, tuple(_order_key(item) for item in value))
    if isinstance(value, NodeRecord):
        return (4, value.id)
    if isinstance(value, EdgeRecord):
        return (5, value.id)
    raise EvalError(f"cannot order values of type {type(value).__name__}")


def _apply_order(
    rows: list[dict],
    sources: Optional[list[dict]],
    clause: OrderByClause,
    graph: PropertyGraph,
) -> list[dict]:
    for item in clause.items:
        if contains_aggregate(item.expr):
            raise EvalError("aggregate functions are not allowed in ORDER BY")
    if sources is not None:
        scoped = [dict(source, **row) for source, row in zip(sources, rows)]
    else:
        scoped = [dict(row) for row in rows]
    paired = list(zip(scoped, rows))
    for item in reversed(clause.items):
        paired.sort(
            key=lambda pair: _order_key(_eval_scalar(item.expr, pair[0], graph)),
            reverse=not item.ascending,
        )
    return [row for _, row in paired]


# -- expression evaluation ----------------------------------------------------------


def _canonical_key(value) -> tuple:
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, (int, float)):
        return ("num", float(value))
    if isinstance(value, str):
        return ("str", value)
    if isinstance(value, list):
        return ("list", tuple(_canonical_key(item) for item in value))
    if isinstance(value, NodeRecord):
        return ("node", value.id)
    if isinstance(value, EdgeRecord):
        return ("edge", value.id)
    raise EvalError(f"cannot hash value of type {type(value).__name__}")


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _eq(a, b):
    """Cypher equality: null-propagating, type-strict, id-based for entities."""
    if a is None or b is None:
        return None
    if isinstance(a, NodeRecord) or isinstance(b, NodeRecord):
        if isinstance(a, NodeRecord) and isinstance(b, NodeRecord):
            return a.id == b.id
        return False
    if isinstance(a, EdgeRecord) or isinstance(b, EdgeRecord):
        if isinstance(a, EdgeRecord) and isinstance(b, EdgeRecord):
            return a.id == b.id
        return False
    if isinstance(a, bool) or isinstance(b, bool):
        if isinstance(a, bool) and isinstance(b, bool):
            return a == b
        return False
    if _is_number(a) and _is_number(b):
        return float(a) == float(b)
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return False
        pending_null = False
        for x, y in zip(a, b):
            item = _eq(x, y)
            if item is False:
                return False
            if item is None:
                pending_null = True
        return None if pending_null else True
    return False


def _order_cmp(op: str, a, b):
    if a is None or b is None:
        return None
    if _is_number(a) and _is_number(b):
        pass
    elif isinstance(a, str) and isinstance(b, str):
        pass
    elif isinstance(a, bool) and isinstance(b, bool):
        a, b = int(a), int(b)
    else:
        raise EvalError(
            f"cannot compare {type(a).__name__} and {type(b).__name__} with '{op}'"
        )
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _require_bool(value, op: str):
    if value is None or isinstance(value, bool):
        return value
    raise EvalError(f"'{op}' expects booleans, got {type(value).__name__}")


def _eval_scalar(expr, row: dict, graph: PropertyGraph):
    """Evaluate an expression against a single binding row (no aggregates)."""
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, ListLiteral):
        return [_eval_scalar(item, row, graph) for item in expr.items]
    if isinstance(expr, Variable):
        if expr.name not in row:
            raise EvalError(f"unknown variable '{expr.name}'")
        return row[expr.name]
    if isinstance(expr, PropertyAccess):
        subject = _eval_scalar(expr.subject, row, graph)
        if subject is None:
            return None
        if isinstance(subject, (NodeRecord, EdgeRecord)):
            return subject.properties.get(expr.dotted_key)
        raise EvalError(f"cannot read property '{expr.dotted_key}' of {type(subject).__name__}")
    if isinstance(expr, Unary):
        operand = _eval_scalar(expr.operand, row, graph)
        if expr.op == "not":
            value = _require_bool(operand, "NOT")
            return None if value is None else not value
        if operand is None:
            return None
        if _is_number(operand):
            return -operand
        raise EvalError(f"cannot negate {type(operand).__name__}")
    if isinstance(expr, Binary):
        return _eval_binary(expr, row, graph)
    if isinstance(expr, FunctionCall):
        if expr.name in AGGREGATE_FUNCTIONS:
            raise EvalError(f"aggregate function {expr.name}() is not allowed here")
        return _eval_scalar_function(expr, row, graph)
    if isinstance(expr, PatternPredicate):
        raise EvalError("pattern predicates are not executable")
    raise EvalError(f"unsupported expression {type(expr).__name__}")


def _eval_binary(expr: Binary, row: dict, graph: PropertyGraph):
    op = expr.op
    if op == "and":
        left = _require_bool(_eval_scalar(expr.left, row, graph), "AND")
        if left is False:
            return False
        right = _require_bool(_eval_scalar(expr.right, row, graph), "AND")
        if right is False:
            return False
        if left is None or right is None:
            return None
        return True
    if op == "or":
        left = _require_bool(_eval_scalar(expr.left, row, graph), "OR")
        if left is True:
            return True
        right = _require_bool(_eval_scalar(expr.right, row, graph), "OR")
        if right is True:
            return True
        if left is None or right is None:
            return None
        return False
    left = _eval_scalar(expr.left, row, graph)
    right = _eval_scalar(expr.right, row, graph)
    if op == "=":
        return _eq(left, right)
    if op == "<>":
        result = _eq(left, right)
        return None if result is None else not result
    if op in ("<", "<=", ">", ">="):
        return _order_cmp(op, left, right)
    if op == "+":
        if left is None or right is None:
            return None
        if _is_number(left) and _is_number(right):
            return left + right
        if isinstance(left, str) and isinstance(right, str):
            return left + right
        if isinstance(left, list) and isinstance(right, list):
            return left + right
        raise EvalError(
            f"cannot add {type(left).__name__} and {type(right).__name__}"
        )
    if op == "in":
        if right is None:
            return None
        if not isinstance(right, list):
            raise EvalError(f"IN expects a list, got {type(right).__name__}")
        if not right:
            return False
        pending_null = False
        for element in right:
            item = _eq(left, element)
            if item is True:
                return True
            if item is None:
                pending_null = True
        return None if pending_null else False
    if op in ("contains", "starts_with", "ends_with"):
        if left is None or right is None:
            return None
        if not isinstance(left, str) or not isinstance(right, str):
            raise EvalError(
                f"string predicate expects strings, got {type(left).__name__} and {type(right).__name__}"
            )
        if op == "contains":
            return right in left
        if op == "starts_with":
            return left.startswith(right)
        return left.endswith(right)
    raise EvalError(f"unsupported operator '{op}'")


def _eval_scalar_function(expr: FunctionCall, row: dict, graph: PropertyGraph):
    if expr.name in ("tolower", "toupper"):
        value = _eval_scalar(expr.arg, row, graph)
        if value is None:
            return None
        if not isinstance(value, str):
            raise EvalError(f"{expr.name}() expects a string, got {type(value).__name__}")
        return value.lower() if expr.name == "tolower" else value.upper()
    raise EvalError(f"unknown function '{expr.name}'")


def _eval_aggregate_expr(expr, rows: list[dict], graph: PropertyGraph):
    """Evaluate an aggregate-bearing projection expression over one group.

    Aggregate calls fold over the group's rows; every other leaf reads the
    group's representative (first) row, which is well-defined because
    non-aggregated projection items are the grouping keys.
    """
    if isinstance(expr, FunctionCall) and expr.name in AGGREGATE_FUNCTIONS:
        if expr.arg is not None and contains_aggregate(expr.arg):
            raise EvalError("nested aggregate functions are not allowed")
        return _fold_aggregate(expr, rows, graph)
    if isinstance(expr, FunctionCall):
        return _eval_scalar_function(
            FunctionCall(expr.name, Literal(_eval_aggregate_expr(expr.arg, rows, graph))),
            {},
            graph,
        )
    if isinstance(expr, Unary):
        inner = _eval_aggregate_expr(expr.operand, rows, graph)
        return _eval_scalar(Unary(expr.op, Literal(inner)), {}, graph)
    if isinstance(expr, Binary):
        left = _eval_aggregate_expr(expr.left, rows, graph)
        right = _eval_aggregate_expr(expr.right, rows, graph)
        return _eval_scalar(Binary(expr.op, Literal(left), Literal(right)), {}, graph)
    if isinstance(expr, ListLiteral):
        return [_eval_aggregate_expr(item, rows, graph) for item in expr.items]
    representative = rows[0] if rows else {}
    return _eval_scalar(expr, representative, graph)


def _fold_aggregate(expr: FunctionCall, rows: list[dict], graph: PropertyGraph):
    if expr.is_count_star:
        return len(rows)
    values = [_eval_scalar(expr.arg, row, graph) for row in rows]
    values = [value for value in values if value is not None]
    if expr.distinct:
        seen: set = set()
        distinct_values = []
        for value in values:
            key = _canonical_key(value)
            if key in seen:
                continue
            seen.add(key)
            distinct_values.append(value)
        values = distinct_values
    name = expr.name
    if name == "count":
        return len(values)
    if name == "collect":
        return values
    if name == "sum":
        for value in values:
            if not _is_number(value):
                raise EvalError(f"sum() expects numbers, got {type(value).__name__}")
        return sum(values) if values else 0
    if name == "avg":
        for value in values:
            if not _is_number(value):
                raise EvalError(f"avg() expects numbers, got {type(value).__name__}")
        return sum(values) / len(values) if values else None
    # min / max share ordering semantics with comparisons
    best = None
    for value in values:
        if best is None:
            best = value
            continue
        smaller = _order_cmp("<", value, best)
        if smaller is True and name == "min":
            best = value
        elif smaller is False and name == "max":
            best = value
    return best


# -- result materialization -------------------------------------------------------


def _prop_text(value: Value) -> str:
    return json.dumps(value, ensure_ascii=False)


def render_node_text(node: NodeRecord) -> str:
    labels = ":".join(sorted(node.labels))
    if not node.properties:
        return f"(:{labels})"
    props = ", ".join(f"{k}: {_prop_text(v)}" for k, v in sorted(node.properties.items()))
    return f"(:{labels} {{{props}}})"


def render_edge_text(edge: EdgeRecord) -> str:
    if not edge.properties:
        return f"[:{edge.rel_type}]"
    props = ", ".join(f"{k}: {_prop_text(v)}" for k, v in sorted(edge.properties.items()))
    return f"[:{edge.rel_type} {{{props}}}]"


def _materialize(value, depth: int = 0) -> Value:
    if isinstance(value, NodeRecord):
        return render_node_text(value)
    if isinstance(value, EdgeRecord):
        return render_edge_text(value)
    if isinstance(value, list):
        items = [_materialize(item, depth + 1) for item in value]
        if depth > 0:
            # Result lists never nest; render inner lists as text.
            return "[" + ", ".join(canonical_text(item) for item in items) + "]"
        return items
    return value
