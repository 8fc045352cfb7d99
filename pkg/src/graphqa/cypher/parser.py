"""Recursive-descent parser for the Cypher subset.

The executable grammar covers: MATCH / OPTIONAL MATCH (fixed-length patterns,
inline property maps), WHERE, WITH, UNWIND, RETURN, ORDER BY, LIMIT;
expressions over dotted property access, comparisons, boolean connectives,
IN / CONTAINS / STARTS WITH / ENDS WITH, toLower / toUpper, list literals,
`+`, and the aggregates count / collect / sum / min / max / avg (each with
optional DISTINCT).

Relationship patterns in expression position (`WHERE (a)-[:T]->(b)`) are not
executable and fail with an "atom expression" diagnostic. `parse_for_extraction`
accepts them, producing `PatternPredicate` nodes so entity extraction can still
decompose queries that the engine refuses to run.
"""

from __future__ import annotations

from typing import Optional

from .ast import (
    Binary,
    Clause,
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
    QueryAst,
    RelElement,
    ReturnClause,
    Unary,
    UnwindClause,
    Variable,
    WhereClause,
    WithClause,
    PropertyAccess,
)
from .errors import ParseError
from .lexer import Token, byte_offset, describe, keyword_at, tokenize

_CLAUSE_KEYWORDS = "MATCH, OPTIONAL MATCH, WHERE, WITH, UNWIND, RETURN, ORDER BY, LIMIT"


def parse(text: str) -> QueryAst:
    """Parse executable query text; total: raises ParseError, never crashes."""
    return _Parser(text, allow_pattern_predicates=False).parse_query()


def parse_for_extraction(text: str) -> QueryAst:
    """Lenient parse that additionally tolerates pattern predicates in WHERE."""
    return _Parser(text, allow_pattern_predicates=True).parse_query()


class _Parser:
    def __init__(self, text: str, allow_pattern_predicates: bool) -> None:
        self.text = text
        self.allow_pattern_predicates = allow_pattern_predicates
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "eof":
            self.pos += 1
        return token

    def expect(self, kind: str, what: str) -> Token:
        token = self.peek()
        if token.kind != kind:
            raise self.error(token, f"expected {what}, found {describe(token)}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        token = self.peek()
        if not keyword_at(token, word):
            raise self.error(token, f"expected {word.upper()}, found {describe(token)}")
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        return keyword_at(self.peek(), word)

    def error(self, token: Token, message: str) -> ParseError:
        return ParseError(byte_offset(self.text, token.offset), message)

    def _name_token(self, what: str) -> Token:
        # Labels, relationship types, and property keys may collide with
        # keywords; variables may not.
        token = self.peek()
        if token.kind not in ("ident", "keyword"):
            raise self.error(token, f"expected {what}, found {describe(token)}")
        return self.advance()

    # -- clause level --------------------------------------------------------

    def parse_query(self) -> QueryAst:
        if self.peek().kind == "eof":
            raise ParseError(0, "empty query")
        clauses: list[Clause] = []
        while self.peek().kind != "eof":
            clauses.append(self.parse_clause())
        ast = QueryAst(tuple(clauses))
        self._validate(ast)
        return ast

    def parse_clause(self) -> Clause:
        token = self.peek()
        if keyword_at(token, "match"):
            self.advance()
            return self.parse_match(optional=False)
        if keyword_at(token, "optional"):
            self.advance()
            self.expect_keyword("match")
            return self.parse_match(optional=True)
        if keyword_at(token, "where"):
            self.advance()
            return WhereClause(self.parse_expression())
        if keyword_at(token, "with"):
            self.advance()
            return self.parse_projection(WithClause)
        if keyword_at(token, "unwind"):
            self.advance()
            expr = self.parse_expression()
            self.expect_keyword("as")
            alias = self.expect("ident", "an alias identifier")
            return UnwindClause(expr, alias.value)
        if keyword_at(token, "return"):
            self.advance()
            return self.parse_projection(ReturnClause)
        if keyword_at(token, "order"):
            self.advance()
            self.expect_keyword("by")
            return self.parse_order_by()
        if keyword_at(token, "limit"):
            self.advance()
            count = self.expect("int", "a non-negative integer")
            return LimitClause(count.value)
        raise self.error(token, f"expected a clause ({_CLAUSE_KEYWORDS}), found {describe(token)}")

    def parse_match(self, optional: bool) -> MatchClause:
        patterns = [self.parse_pattern_chain()]
        while self.peek().kind == ",":
            self.advance()
            patterns.append(self.parse_pattern_chain())
        return MatchClause(tuple(patterns), optional=optional)

    def parse_projection(self, clause_cls) -> Clause:
        distinct = False
        if self.at_keyword("distinct"):
            self.advance()
            distinct = True
        items = [self.parse_projection_item(clause_cls is WithClause)]
        while self.peek().kind == ",":
            self.advance()
            items.append(self.parse_projection_item(clause_cls is WithClause))
        seen: set[str] = set()
        for item in items:
            if item.name in seen:
                raise ParseError(
                    byte_offset(self.text, self.tokens[self.pos].offset),
                    f"duplicate projection name {item.name!r}",
                )
            seen.add(item.name)
        return clause_cls(tuple(items), distinct=distinct)

    def parse_projection_item(self, in_with: bool) -> ProjectionItem:
        start_token = self.peek()
        expr = self.parse_expression()
        end = self.tokens[self.pos].offset
        text = self.text[start_token.offset : end].strip()
        alias: Optional[str] = None
        if self.at_keyword("as"):
            self.advance()
            alias = self.expect("ident", "an alias identifier").value
        elif in_with and not isinstance(expr, Variable):
            raise self.error(start_token, "WITH items other than plain variables require AS aliases")
        return ProjectionItem(expr, alias, text)

    def parse_order_by(self) -> OrderByClause:
        items = []
        while True:
            expr = self.parse_expression()
            ascending = True
            if self.at_keyword("asc") or self.at_keyword("ascending"):
                self.advance()
            elif self.at_keyword("desc") or self.at_keyword("descending"):
                self.advance()
                ascending = False
            items.append(OrderItem(expr, ascending))
            if self.peek().kind != ",":
                break
            self.advance()
        return OrderByClause(tuple(items))

    # -- patterns --------------------------------------------------------------

    def parse_pattern_chain(self) -> PatternChain:
        nodes = [self.parse_node_element()]
        rels = []
        while self.peek().kind == "-" or (self.peek().kind == "<" and self.peek(1).kind == "-"):
            rels.append(self.parse_rel_element())
            nodes.append(self.parse_node_element())
        return PatternChain(tuple(nodes), tuple(rels))

    def parse_node_element(self) -> NodeElement:
        self.expect("(", "'(' opening a node pattern")
        variable = None
        label = None
        if self.peek().kind == "ident":
            variable = self.advance().value
        if self.peek().kind == ":":
            self.advance()
            label = self._name_token("a node label").value
        properties: tuple[tuple[str, object], ...] = ()
        if self.peek().kind == "{":
            properties = self.parse_property_map()
        self.expect(")", "')' closing a node pattern")
        return NodeElement(variable, label, properties)

    def parse_property_map(self) -> tuple[tuple[str, object], ...]:
        self.expect("{", "'{'")
        entries: list[tuple[str, object]] = []
        if self.peek().kind != "}":
            while True:
                key = self.parse_map_key()
                self.expect(":", "':' after a map key")
                entries.append((key, self.parse_literal_value()))
                if self.peek().kind != ",":
                    break
                self.advance()
        self.expect("}", "'}' closing a property map")
        return tuple(entries)

    def parse_map_key(self) -> str:
        parts = [self._name_token("a property key").value]
        while self.peek().kind == ".":
            self.advance()
            parts.append(self._name_token("a property key segment").value)
        return ".".join(parts)

    def parse_literal_value(self) -> object:
        token = self.peek()
        if token.kind in ("string", "int", "float"):
            return self.advance().value
        if token.kind == "-" and self.peek(1).kind in ("int", "float"):
            self.advance()
            return -self.advance().value
        if keyword_at(token, "true"):
            self.advance()
            return True
        if keyword_at(token, "false"):
            self.advance()
            return False
        if keyword_at(token, "null"):
            self.advance()
            return None
        if token.kind == "[":
            self.advance()
            items = []
            if self.peek().kind != "]":
                while True:
                    items.append(self.parse_literal_value())
                    if self.peek().kind != ",":
                        break
                    self.advance()
            self.expect("]", "']' closing a list literal")
            return items
        raise self.error(token, f"expected a literal value, found {describe(token)}")

    def parse_rel_element(self) -> RelElement:
        token = self.peek()
        pointing_left = False
        if token.kind == "<":
            self.advance()
            pointing_left = True
        self.expect("-", "'-' in a relationship pattern")
        variable = None
        rel_type = None
        if self.peek().kind == "[":
            self.advance()
            if self.peek().kind == "ident":
                variable = self.advance().value
            if self.peek().kind == ":":
                self.advance()
                rel_type = self._name_token("a relationship type").value
            if self.peek().kind == "*":
                raise self.error(self.peek(), "variable-length relationships are not supported")
            if self.peek().kind == "{":
                raise self.error(self.peek(), "relationship property maps are not supported")
            self.expect("]", "']' closing a relationship pattern")
        self.expect("-", "'-' in a relationship pattern")
        pointing_right = False
        if self.peek().kind == ">":
            self.advance()
            pointing_right = True
        if pointing_left and pointing_right:
            raise self.error(token, "a relationship cannot point both ways")
        direction = "left" if pointing_left else ("right" if pointing_right else "undirected")
        return RelElement(variable, rel_type, direction)

    # -- expressions --------------------------------------------------------------

    def parse_expression(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.at_keyword("or"):
            self.advance()
            left = Binary("or", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at_keyword("and"):
            self.advance()
            left = Binary("and", left, self.parse_not())
        return left

    def parse_not(self):
        if self.at_keyword("not"):
            self.advance()
            return Unary("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_additive()
        token = self.peek()
        op = None
        if token.kind in ("=", "<>", "<", "<=", ">", ">="):
            op = self.advance().kind
        elif keyword_at(token, "in"):
            self.advance()
            op = "in"
        elif keyword_at(token, "contains"):
            self.advance()
            op = "contains"
        elif keyword_at(token, "starts"):
            self.advance()
            self.expect_keyword("with")
            op = "starts_with"
        elif keyword_at(token, "ends"):
            self.advance()
            self.expect_keyword("with")
            op = "ends_with"
        if op is None:
            return left
        return Binary(op, left, self.parse_additive())

    def parse_additive(self):
        left = self.parse_unary()
        while self.peek().kind == "+":
            self.advance()
            left = Binary("+", left, self.parse_unary())
        return left

    def parse_unary(self):
        if self.peek().kind == "-":
            self.advance()
            return Unary("neg", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_atom()
        keys = []
        while self.peek().kind == ".":
            self.advance()
            keys.append(self._name_token("a property key").value)
        if keys:
            return PropertyAccess(expr, tuple(keys))
        return expr

    def parse_atom(self):
        token = self.peek()
        if token.kind in ("string", "int", "float"):
            return Literal(self.advance().value)
        if keyword_at(token, "true"):
            self.advance()
            return Literal(True)
        if keyword_at(token, "false"):
            self.advance()
            return Literal(False)
        if keyword_at(token, "null"):
            self.advance()
            return Literal(None)
        if token.kind == "[":
            self.advance()
            items = []
            if self.peek().kind != "]":
                while True:
                    items.append(self.parse_expression())
                    if self.peek().kind != ",":
                        break
                    self.advance()
            self.expect("]", "']' closing a list literal")
            return ListLiteral(tuple(items))
        if token.kind == "ident":
            if self.peek(1).kind == "(":
                return self.parse_function_call()
            self.advance()
            return Variable(token.value)
        if token.kind == "(":
            return self.parse_paren_or_pattern()
        raise self.error(token, f"expected an expression, found {describe(token)}")

    def parse_function_call(self) -> FunctionCall:
        name_token = self.advance()
        self.expect("(", "'('")
        name = name_token.value.lower()
        if self.peek().kind == "*":
            if name != "count":
                raise self.error(self.peek(), f"'*' is only valid inside count(*), not {name_token.value}()")
            self.advance()
            self.expect(")", "')'")
            return FunctionCall("count", None)
        distinct = False
        if self.at_keyword("distinct"):
            self.advance()
            distinct = True
        arg = self.parse_expression()
        self.expect(")", "')' closing the function call")
        return FunctionCall(name, arg, distinct=distinct)

    def parse_paren_or_pattern(self):
        """Disambiguate `(expr)` from a relationship pattern in expression position."""
        start = self.pos
        start_offset = self.peek().offset
        inner_error: Optional[ParseError] = None
        try:
            self.advance()  # consume "("
            expr = self.parse_expression()
            self.expect(")", "')' closing a parenthesized expression")
            if not self._at_pattern_continuation():
                return expr
        except ParseError as exc:
            inner_error = exc
        self.pos = start
        try:
            chain = self.parse_pattern_chain()
        except ParseError:
            raise inner_error if inner_error is not None else self.error(
                self.tokens[start], "expected an expression"
            )
        if len(chain.rels) == 0:
            raise inner_error if inner_error is not None else self.error(
                self.tokens[start], "expected an expression"
            )
        snippet = self.text[start_offset : self.tokens[self.pos].offset].strip()
        if not self.allow_pattern_predicates:
            raise ParseError(
                byte_offset(self.text, start_offset),
                f"not yet implemented: atom expression {snippet}; "
                "rewrite the query using OPTIONAL MATCH, WITH and WHERE clauses",
            )
        return PatternPredicate(chain)

    def _at_pattern_continuation(self) -> bool:
        token = self.peek()
        return token.kind == "-" or (token.kind == "<" and self.peek(1).kind == "-")

    # -- validation ---------------------------------------------------------------

    def _validate(self, ast: QueryAst) -> None:
        clauses = ast.clauses
        end = byte_offset(self.text, len(self.text))
        returns = [i for i, c in enumerate(clauses) if isinstance(c, ReturnClause)]
        if len(returns) != 1:
            raise ParseError(end, "query must contain exactly one RETURN clause")
        ret_index = returns[0]
        for i, clause in enumerate(clauses):
            prev = clauses[i - 1] if i > 0 else None
            if isinstance(clause, WhereClause) and not isinstance(prev, (MatchClause, WithClause)):
                raise ParseError(end, "WHERE must immediately follow MATCH, OPTIONAL MATCH, or WITH")
            if isinstance(clause, OrderByClause) and not isinstance(prev, (ReturnClause, WithClause)):
                raise ParseError(end, "ORDER BY must immediately follow RETURN or WITH")
            if isinstance(clause, LimitClause) and not isinstance(
                prev, (ReturnClause, WithClause, OrderByClause)
            ):
                raise ParseError(end, "LIMIT must follow RETURN, WITH, or ORDER BY")
            if i > ret_index and not isinstance(clause, (OrderByClause, LimitClause)):
                raise ParseError(end, "only ORDER BY and LIMIT may follow RETURN")
