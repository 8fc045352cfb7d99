import pytest

from graphqa.cypher import (
    Binary,
    FunctionCall,
    LimitClause,
    MatchClause,
    OrderByClause,
    ParseError,
    PatternPredicate,
    PropertyAccess,
    QueryAst,
    ReturnClause,
    UnwindClause,
    Variable,
    WhereClause,
    WithClause,
    free_variables,
    parse,
    parse_for_extraction,
)
from tests.fixtures import TRACED_QUERY_1, TRACED_QUERY_2


class TestBasicParsing:
    def test_count_query(self):
        ast = parse("MATCH (d:IfcDoor) RETURN count(d)")
        match, ret = ast.clauses
        assert isinstance(match, MatchClause)
        assert len(match.patterns) == 1
        node = match.patterns[0].nodes[0]
        assert node.variable == "d" and node.label == "IfcDoor"
        assert isinstance(ret, ReturnClause)
        call = ret.items[0].expr
        assert isinstance(call, FunctionCall) and call.name == "count"
        assert ret.items[0].name == "count(d)"

    def test_empty_query(self):
        with pytest.raises(ParseError) as err:
            parse("")
        assert err.value.offset == 0

    def test_traced_rewrite_parses(self):
        ast = parse(TRACED_QUERY_2)
        kinds = [type(c).__name__ for c in ast.clauses]
        assert kinds == [
            "MatchClause",
            "WithClause",
            "MatchClause",
            "WithClause",
            "UnwindClause",
            "ReturnClause",
        ]
        assert ast.clauses[0].optional and ast.clauses[2].optional

    def test_keywords_case_insensitive(self):
        ast = parse("match (n:A) where n.x = 1 return n")
        assert isinstance(ast.clauses[1], WhereClause)

    def test_comments_skipped(self):
        ast = parse("MATCH (n:A) // find them\nRETURN n /* all */")
        assert isinstance(ast.clauses[0], MatchClause)

    def test_dotted_property_access(self):
        ast = parse("MATCH (s:IfcSpace) RETURN s.BaseQuantities.GrossVolume")
        access = ast.clauses[1].items[0].expr
        assert isinstance(access, PropertyAccess)
        assert access.dotted_key == "BaseQuantities.GrossVolume"

    def test_relationship_directions(self):
        right = parse("MATCH (a)-[:R]->(b) RETURN a").clauses[0].patterns[0].rels[0]
        left = parse("MATCH (a)<-[:R]-(b) RETURN a").clauses[0].patterns[0].rels[0]
        undirected = parse("MATCH (a)-[:R]-(b) RETURN a").clauses[0].patterns[0].rels[0]
        assert (right.direction, left.direction, undirected.direction) == (
            "right",
            "left",
            "undirected",
        )

    def test_anonymous_relationships(self):
        chain = parse("MATCH (a)-->(b)<--(c) RETURN a").clauses[0].patterns[0]
        assert [r.direction for r in chain.rels] == ["right", "left"]
        assert all(r.rel_type is None for r in chain.rels)

    def test_inline_property_map(self):
        node = parse("MATCH (c:Character {name: 'X', age: 3}) RETURN c").clauses[0].patterns[0].nodes[0]
        assert node.properties == (("name", "X"), ("age", 3))

    def test_order_by_and_limit(self):
        ast = parse("MATCH (n:A) RETURN n.x ORDER BY n.x DESC LIMIT 2")
        order, limit = ast.clauses[2], ast.clauses[3]
        assert isinstance(order, OrderByClause) and not order.items[0].ascending
        assert isinstance(limit, LimitClause) and limit.count == 2

    def test_unwind(self):
        ast = parse("UNWIND [1, 2] AS x RETURN x")
        assert isinstance(ast.clauses[0], UnwindClause)
        assert ast.clauses[0].alias == "x"

    def test_string_escapes(self):
        ast = parse("MATCH (n) WHERE n.x = 'it\\'s' RETURN n")
        literal = ast.clauses[1].expr.right
        assert literal.value == "it's"

    def test_backtick_identifiers(self):
        ast = parse("MATCH (n:`Weird Label`) RETURN n.`odd key`")
        assert ast.clauses[0].patterns[0].nodes[0].label == "Weird Label"

    def test_in_list(self):
        ast = parse('MATCH (c:Character) WHERE c.name IN ["A", "B"] RETURN c')
        predicate = ast.clauses[1].expr
        assert isinstance(predicate, Binary) and predicate.op == "in"

    def test_negative_literal(self):
        ast = parse("MATCH (n) WHERE n.x = -1 RETURN n")
        assert ast.clauses[1].expr.right is not None


class TestDiagnostics:
    def test_error_format_is_stable(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (n RETURN n")
        assert str(err.value).startswith("error at byte ")

    def test_byte_offsets_count_utf8_bytes(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (n) WHERE n.x = 'é' RETURN n ;")
        # the stray ';' sits after a 2-byte character
        assert err.value.offset == len("MATCH (n) WHERE n.x = 'é' RETURN n ".encode("utf-8"))

    def test_unterminated_string(self):
        with pytest.raises(ParseError):
            parse("MATCH (n) WHERE n.x = 'oops RETURN n")

    def test_write_clauses_rejected(self):
        with pytest.raises(ParseError) as err:
            parse("CREATE (n:A) RETURN n")
        assert "expected a clause" in str(err.value)

    def test_variable_length_rejected(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (a)-[:R*1..3]->(b) RETURN a")
        assert "variable-length" in str(err.value)

    def test_missing_return(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (n:A)")
        assert "RETURN" in str(err.value)

    def test_two_returns_rejected(self):
        with pytest.raises(ParseError):
            parse("MATCH (n) RETURN n RETURN n")

    def test_where_out_of_position(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (n) RETURN n WHERE n.x = 1")
        assert "WHERE" in str(err.value)

    def test_duplicate_aliases_rejected(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (n) RETURN n.x AS a, n.y AS a")
        assert "duplicate" in str(err.value)

    def test_with_expression_requires_alias(self):
        with pytest.raises(ParseError) as err:
            parse("MATCH (n) WITH n.x RETURN n")
        assert "alias" in str(err.value).lower()

    def test_limit_requires_integer(self):
        with pytest.raises(ParseError):
            parse("MATCH (n) RETURN n LIMIT -1")

    def test_parsing_is_total_on_junk(self):
        for junk in ["%%%", "RETURN", "MATCH", "MATCH ()-", "))((", "WITH 1 AS"]:
            with pytest.raises(ParseError):
                parse(junk)


class TestPatternPredicates:
    def test_strict_parse_rejects_pattern_in_where(self):
        with pytest.raises(ParseError) as err:
            parse(TRACED_QUERY_1)
        message = str(err.value)
        assert "atom expression" in message
        assert "(c)-[:hasFather]->(father)" in message

    def test_lenient_parse_builds_pattern_predicates(self):
        ast = parse_for_extraction(TRACED_QUERY_1)
        where = ast.clauses[3]
        assert isinstance(where, WhereClause)
        disjunction = where.expr
        assert isinstance(disjunction, Binary) and disjunction.op == "or"
        assert isinstance(disjunction.left, PatternPredicate)
        assert isinstance(disjunction.right, PatternPredicate)
        assert disjunction.right.chain.rels[0].direction == "undirected"

    def test_plain_parenthesized_expression_still_works(self):
        ast = parse("MATCH (n) WHERE (n.x = 1 OR n.y = 2) AND n.z = 3 RETURN n")
        assert isinstance(ast.clauses[1].expr, Binary)


class TestFreeVariables:
    def test_label_inferred_from_first_binding(self):
        ast = parse_for_extraction(
            "MATCH (father:Character) MATCH (c:Character) "
            "WHERE (c)-[:hasFather]->(father) RETURN count(c)"
        )
        result = free_variables(ast)
        assert result.labels["father"] == "Character"
        assert result.labels["c"] == "Character"
        assert not result.conflicts

    def test_unlabeled_variable_absent(self):
        result = free_variables(parse("MATCH (n) RETURN n"))
        assert "n" not in result.labels

    def test_conflicting_labels_flagged_first_wins(self):
        ast = parse("MATCH (x:A) MATCH (x:B) RETURN x")
        result = free_variables(ast)
        assert result.labels["x"] == "A"
        assert result.conflicts == {"x"}


class TestAstShape:
    def test_query_ast_is_a_clause_sequence(self):
        ast = parse("MATCH (n:A) WHERE n.x = 1 WITH n AS m RETURN m")
        assert isinstance(ast, QueryAst)
        assert isinstance(ast.clauses[2], WithClause)
        assert isinstance(ast.clauses[2].items[0].expr, Variable)

    def test_projection_text_is_verbatim(self):
        ast = parse("MATCH (c) RETURN count(DISTINCT c)")
        assert ast.clauses[1].items[0].name == "count(DISTINCT c)"
