"""Errors raised by the query engine."""

from __future__ import annotations


class ParseError(Exception):
    """Syntax or grammar violation; carries the byte offset of the failure."""

    def __init__(self, offset: int, message: str) -> None:
        self.offset = offset
        self.message = message
        super().__init__(f"error at byte {offset}: {message}")


class EvalError(Exception):
    """Runtime evaluation failure: unknown function, type misuse, misplaced aggregate."""

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)
