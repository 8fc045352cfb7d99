"""Natural-language question answering over labeled property graphs.

The pipeline turns a question into a Cypher query, executes it, grades the
attempt, and iteratively refines the query with database-verified feedback
until the result is accepted or the attempt budget runs out.
"""

__version__ = "0.1.0"
