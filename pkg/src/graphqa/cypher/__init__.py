"""Cypher-subset compiler and evaluator."""

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
    OrderItem,
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
    VariableLabels,
    WhereClause,
    WithClause,
    contains_aggregate,
    free_variables,
)
from .errors import EvalError, ParseError
from .evaluator import ResultTable, evaluate, render_edge_text, render_node_text
from .parser import parse, parse_for_extraction

__all__ = [
    "AGGREGATE_FUNCTIONS",
    "Binary",
    "EvalError",
    "FunctionCall",
    "LimitClause",
    "ListLiteral",
    "Literal",
    "MatchClause",
    "NodeElement",
    "OrderByClause",
    "OrderItem",
    "ParseError",
    "PatternChain",
    "PatternPredicate",
    "ProjectionItem",
    "PropertyAccess",
    "QueryAst",
    "RelElement",
    "ResultTable",
    "ReturnClause",
    "Unary",
    "UnwindClause",
    "Variable",
    "VariableLabels",
    "WhereClause",
    "WithClause",
    "contains_aggregate",
    "evaluate",
    "free_variables",
    "parse",
    "parse_for_extraction",
    "render_edge_text",
    "render_node_text",
]
