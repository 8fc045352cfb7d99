"""AST node types for the supported Cypher subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


# -- expressions ------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class ListLiteral:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class PropertyAccess:
    """`v.a.b` resolves the flat dotted key "a.b" on whatever `v` is bound to."""

    subject: "Expr"
    keys: tuple[str, ...]

    @property
    def dotted_key(self) -> str:
        return ".".join(self.keys)


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "neg"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # and or + = <> < <= > >= in contains starts_with ends_with
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class FunctionCall:
    name: str  # lowercased
    arg: Optional["Expr"]  # None only for count(*)
    distinct: bool = False

    @property
    def is_count_star(self) -> bool:
        return self.name == "count" and self.arg is None


@dataclass(frozen=True)
class PatternPredicate:
    """A relationship pattern in expression position.

    Only produced by the lenient parse used for entity extraction; the
    executable grammar rejects it.
    """

    chain: "PatternChain"


Expr = Union[
    Literal, ListLiteral, Variable, PropertyAccess, Unary, Binary, FunctionCall, PatternPredicate
]

AGGREGATE_FUNCTIONS = frozenset({"count", "collect", "sum", "min", "max", "avg"})


def contains_aggregate(expr: Expr) -> bool:
    if isinstance(expr, FunctionCall):
        if expr.name in AGGREGATE_FUNCTIONS:
            return True
        return expr.arg is not None and contains_aggregate(expr.arg)
    if isinstance(expr, Unary):
        return contains_aggregate(expr.operand)
    if isinstance(expr, Binary):
        return contains_aggregate(expr.left) or contains_aggregate(expr.right)
    if isinstance(expr, ListLiteral):
        return any(contains_aggregate(item) for item in expr.items)
    if isinstance(expr, PropertyAccess):
        return contains_aggregate(expr.subject)
    return False


# -- patterns -----------------------------------------------------------------


@dataclass(frozen=True)
class NodeElement:
    variable: Optional[str]
    label: Optional[str]
    properties: tuple[tuple[str, object], ...] = ()  # key -> literal value


@dataclass(frozen=True)
class RelElement:
    variable: Optional[str]
    rel_type: Optional[str]
    direction: str  # "right" | "left" | "undirected"


@dataclass(frozen=True)
class PatternChain:
    nodes: tuple[NodeElement, ...]
    rels: tuple[RelElement, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.rels) + 1:
            raise ValueError("a pattern chain has one more node than relationships")


# -- clauses ------------------------------------------------------------------


@dataclass(frozen=True)
class MatchClause:
    patterns: tuple[PatternChain, ...]
    optional: bool = False


@dataclass(frozen=True)
class WhereClause:
    expr: Expr


@dataclass(frozen=True)
class ProjectionItem:
    expr: Expr
    alias: Optional[str]
    text: str  # verbatim source text, used as the output column name

    @property
    def name(self) -> str:
        return self.alias if self.alias is not None else self.text


@dataclass(frozen=True)
class WithClause:
    items: tuple[ProjectionItem, ...]
    distinct: bool = False


@dataclass(frozen=True)
class ReturnClause:
    items: tuple[ProjectionItem, ...]
    distinct: bool = False


@dataclass(frozen=True)
class UnwindClause:
    expr: Expr
    alias: str


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    ascending: bool


@dataclass(frozen=True)
class OrderByClause:
    items: tuple[OrderItem, ...]


@dataclass(frozen=True)
class LimitClause:
    count: int


Clause = Union[
    MatchClause, WhereClause, WithClause, ReturnClause, UnwindClause, OrderByClause, LimitClause
]


@dataclass(frozen=True)
class QueryAst:
    clauses: tuple[Clause, ...]


@dataclass
class VariableLabels:
    """Variable-to-label inference over all pattern bindings in a query."""

    labels: dict[str, str] = field(default_factory=dict)
    conflicts: set[str] = field(default_factory=set)


def free_variables(ast: QueryAst) -> VariableLabels:
    """Infer a label for each pattern-bound variable.

    The first labeled binding wins; later bindings with a different label
    flag the variable as conflicting.
    """
    result = VariableLabels()

    def visit_chain(chain: PatternChain) -> None:
        for node in chain.nodes:
            if node.variable is None or node.label is None:
                continue
            prior = result.labels.get(node.variable)
            if prior is None:
                result.labels[node.variable] = node.label
            elif prior != node.label:
                result.conflicts.add(node.variable)

    def visit_expr(expr: Expr) -> None:
        if isinstance(expr, PatternPredicate):
            visit_chain(expr.chain)
        elif isinstance(expr, Unary):
            visit_expr(expr.operand)
        elif isinstance(expr, Binary):
            visit_expr(expr.left)
            visit_expr(expr.right)
        elif isinstance(expr, ListLiteral):
            for item in expr.items:
                visit_expr(item)
        elif isinstance(expr, PropertyAccess):
            visit_expr(expr.subject)
        elif isinstance(expr, FunctionCall) and expr.arg is not None:
            visit_expr(expr.arg)

    for clause in ast.clauses:
        if isinstance(clause, MatchClause):
            for chain in clause.patterns:
                visit_chain(chain)
        elif isinstance(clause, WhereClause):
            visit_expr(clause.expr)
    return result
