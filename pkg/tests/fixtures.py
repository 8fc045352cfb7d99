"""Shared graph fixtures and replay scripts used across the test suite."""

from __future__ import annotations

import json

from graphqa.store import PropertyGraph

# The traced two-iteration refinement example: the first query uses pattern
# expressions in WHERE (not executable here) and lowercased names; the second
# is the corrected rewrite.

TRACED_QUESTION = (
    "How many characters have Corlys Velaryon as their father "
    "or are married to Daemon Targaryen?"
)

TRACED_QUERY_1 = """MATCH (father:Character),
       (spouse:Character)
WHERE toLower(father.name) =
        'corlys velaryon'
AND toLower(spouse.name) =
        'daemon targaryen'
MATCH (c:Character)
WHERE (c)-[:hasFather]->(father)
    OR (c)-[:hasSpouse]-(spouse)
RETURN count(DISTINCT c)"""

TRACED_QUERY_2 = """OPTIONAL MATCH
(child:Character)-[:hasFather]->
(:Character{name: 'Corlys Velaryon'})
WITH collect(DISTINCT child) AS children
OPTIONAL MATCH
(spouse_char:Character)-[:hasSpouse]-
(:Character{name: 'Daemon Targaryen'})
WITH children + collect(DISTINCT spouse_char) AS all_chars
UNWIND all_chars AS c
RETURN count(DISTINCT c)"""

TRACED_ANSWER = (
    "There are 3 characters who have Corlys Velaryon as their father "
    "or are married to Daemon Targaryen."
)


def fictional_graph() -> PropertyGraph:
    """Fictional-character fixture.

    Hand-enumerated ground truth for the traced question: Corlys Velaryon's
    children are Laenor and Laena; Daemon Targaryen's spouses are Laena and
    Rhaenyra; the union holds 3 distinct characters.
    """
    g = PropertyGraph()
    characters = [
        ("c01", "Corlys Velaryon", {
            "gender": "male",
            "description": "lord of Driftmark and master of its fleets",
            "aliases": ["The Sea Snake"],
            "occupation": ["admiral", "lord"],
            "creator": "George R. R. Martin",
        }),
        ("c02", "Daemon Targaryen", {
            "gender": "male",
            "description": "rogue prince of House Targaryen",
            "creator": "George R. R. Martin",
        }),
        ("c03", "Laenor Velaryon", {"gender": "male"}),
        ("c04", "Laena Velaryon", {"gender": "female"}),
        ("c05", "Rhaenyra Targaryen", {"gender": "female", "aliases": ["The Realm's Delight"]}),
        ("c06", "Jacaerys Velaryon", {}),
        ("c07", "Lucerys Velaryon", {}),
        ("c08", "Aemon Targaryen", {}),
        ("c09", "Aemond Targaryen", {"aliases": ["Aemond One-Eye"]}),
        ("c10", "Daeron Targaryen", {"gender": "male"}),
    ]
    for node_id, name, extra in characters:
        g.add_node({"Character"}, {"name": name, **extra}, node_id=node_id)
    g.add_node(
        {"FictionalUniverse"},
        {
            "name": "A Song of Ice and Fire universe",
            "inception_year": 1996,
            "creator": "George R. R. Martin",
            "aliases": ["ASOIAF universe", "Known World"],
        },
        node_id="u01",
    )
    g.add_node(
        {"Location"},
        {"name": "King's Landing", "description": "capital of the Seven Kingdoms"},
        node_id="l01",
    )
    g.add_node(
        {"Location"},
        {"name": "Driftmark", "description": "island seat of House Velaryon"},
        node_id="l02",
    )
    g.add_node(
        {"Organization"},
        {
            "name": "House Velaryon",
            "description": "noble house of Westeros",
            "aliases": ["Velaryons of Driftmark"],
        },
        node_id="o01",
    )
    edges = [
        ("e01", "hasFather", "c03", "c01"),
        ("e02", "hasFather", "c04", "c01"),
        ("e03", "hasSpouse", "c02", "c04"),
        ("e04", "hasSpouse", "c05", "c02"),
        ("e05", "hasMother", "c06", "c05"),
        ("e06", "hasMother", "c07", "c05"),
        ("e07", "killedBy", "c07", "c09"),
        ("e08", "hasStudent", "c02", "c05"),
        ("e09", "bornIn", "c02", "l01"),
        ("e10", "diedIn", "c04", "l02"),
        ("e11", "fromUniverse", "c01", "u01"),
        ("e12", "fromUniverse", "o01", "u01"),
        ("e13", "memberOf", "c01", "o01"),
        ("e14", "basedIn", "o01", "l02"),
    ]
    for edge_id, rel_type, src, dst in edges:
        g.add_edge(rel_type, src, dst, edge_id=edge_id)
    return g


def ifc_graph() -> PropertyGraph:
    """Building-model fixture: 3 doors, 2 storeys, spaces with dotted keys."""
    g = PropertyGraph()
    g.add_node({"IfcProject"}, {"Name": "0001", "LongName": "Project Name"}, node_id="pr01")
    g.add_node({"IfcBuilding"}, {"Name": "Sample House"}, node_id="b01")
    g.add_node(
        {"IfcPostalAddress"},
        {"AddressLines": "Westminster", "Town": "London", "Country": "UK"},
        node_id="pa01",
    )
    g.add_node({"IfcBuildingStorey"}, {"Name": "Level 1", "Elevation": 0.0}, node_id="s01")
    g.add_node({"IfcBuildingStorey"}, {"Name": "Level 2", "Elevation": 2.7}, node_id="s02")
    for i in (1, 2, 3):
        g.add_node({"IfcDoor"}, {"Name": f"Door-{i}"}, node_id=f"d0{i}")
    g.add_node(
        {"IfcSpace"},
        {
            "Name": "3 - Entrance hall",
            "LongName": "Entrance hall",
            "BaseQuantities.GrossFloorArea": 8.69,
            "BaseQuantities.GrossPerimeter": 12.81,
            "Constraints.Level": "Level 1",
        },
        node_id="sp01",
    )
    g.add_node(
        {"IfcSpace"},
        {
            "Name": "5 - Roof",
            "LongName": "Roof space",
            "BaseQuantities.GrossVolume": 76465.52,
            "Constraints.Level": "Roof",
            "Dimensions.Unbounded_Height": 1000.0,
        },
        node_id="sp02",
    )
    g.add_node({"IfcSIUnit"}, {"UnitType": "ILLUMINANCEUNIT", "Name": "LUX"}, node_id="un01")
    edges = [
        ("be01", "BUILDINGADDRESS", "b01", "pa01"),
        ("ag01", "AGGREGATES", "b01", "s01"),
        ("ag02", "AGGREGATES", "b01", "s02"),
        ("ce01", "CONTAINSELEMENT", "s01", "d01"),
        ("ce02", "CONTAINSELEMENT", "s01", "d02"),
        ("ce03", "CONTAINSELEMENT", "s02", "d03"),
        ("cs01", "CONTAINSSPACE", "s01", "sp01"),
        ("cs02", "CONTAINSSPACE", "s02", "sp02"),
    ]
    for edge_id, rel_type, src, dst in edges:
        g.add_edge(rel_type, src, dst, edge_id=edge_id)
    return g


EVALUATOR_REJECTION = json.dumps(
    {
        "status": "Error or empty",
        "feedback": (
            "Execution failed: the WHERE clause holds relationship patterns like "
            "(c)-[:hasFather]->(father), which this engine refuses to evaluate as "
            "expressions. Restructure the query so each condition is its own "
            "OPTIONAL MATCH, carry the partial results through WITH, and combine "
            "them before counting."
        ),
    }
)

EVALUATOR_ACCEPTANCE = json.dumps(
    {
        "status": "Accept",
        "feedback": (
            "The rewrite matches the question: each condition gets its own "
            "OPTIONAL MATCH, the two collections are concatenated, and the distinct "
            "count over the unwound list is exactly the asked-for number."
        ),
    }
)

FIX_INSTRUCTIONS_TEXT = (
    "Corrections needed before the next attempt:\n"
    "1. The Character property value 'corlys velaryon' does not exist in the "
    "database; use 'Corlys Velaryon'.\n"
    "2. The Character property value 'daemon targaryen' does not exist in the "
    "database; use 'Daemon Targaryen'."
)

AGGREGATED_FEEDBACK_TEXT = (
    "Two problems to fix together. First, relationship patterns are not allowed "
    "inside WHERE: split the disjunction into two OPTIONAL MATCH clauses (children "
    "of the father condition, partners of the spouse condition), collect both "
    "result sets, concatenate them, UNWIND, and count distinct characters. Second, "
    "the name literals are miscased: the database stores 'Corlys Velaryon' and "
    "'Daemon Targaryen', so use those exact case-sensitive values."
)


def traced_replay_script() -> dict[str, list[str]]:
    """Replay script transcribed from the two-iteration refinement trace."""
    return {
        "generator": [TRACED_QUERY_1, TRACED_QUERY_2],
        "evaluator": [EVALUATOR_REJECTION, EVALUATOR_ACCEPTANCE],
        "semantic_ranker": [
            json.dumps({"suggestions": ["Laenor Velaryon", "Laena Velaryon", "Jacaerys Velaryon"]}),
            json.dumps({"suggestions": ["Daemon Targaryen", "Aemond Targaryen", "Daeron Targaryen"]}),
        ],
        "instructions": [FIX_INSTRUCTIONS_TEXT],
        "aggregator": [AGGREGATED_FEEDBACK_TEXT],
        "interpreter": [TRACED_ANSWER],
    }


def accept_script(query: str, answer: str, extra_generator: list[str] | None = None) -> dict:
    """Minimal agentic script: one accepted query, one interpreted answer."""
    return {
        "generator": [query] + (extra_generator or []),
        "evaluator": [json.dumps({"status": "Accept", "feedback": "Looks right."})],
        "interpreter": [answer],
    }
