"""Tokenizer for the Cypher subset."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = {
    "match", "optional", "where", "with", "unwind", "return", "order", "by",
    "limit", "as", "distinct", "and", "or", "not", "in", "contains", "starts",
    "ends", "true", "false", "null", "asc", "ascending", "desc", "descending",
}

# Longest first so <= wins over <.
_PUNCT = ["<=", ">=", "<>", "(", ")", "[", "]", "{", "}", ",", ":", ".", "=", "<", ">", "+", "-", "|", "*"]

_ESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "keyword" | "string" | "int" | "float" | punctuation | "eof"
    text: str
    value: object
    offset: int  # character offset into the source


def byte_offset(text: str, char_offset: int) -> int:
    return len(text[:char_offset].encode("utf-8"))


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            i = n if end == -1 else end + 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i)
            if end == -1:
                raise ParseError(byte_offset(text, i), "unterminated block comment")
            i = end + 2
            continue
        if ch in "'\"":
            value, i2 = _read_string(text, i)
            tokens.append(Token("string", text[i:i2], value, i))
            i = i2
            continue
        if ch == "`":
            end = text.find("`", i + 1)
            if end == -1:
                raise ParseError(byte_offset(text, i), "unterminated backtick identifier")
            name = text[i + 1 : end]
            if not name:
                raise ParseError(byte_offset(text, i), "empty backtick identifier")
            tokens.append(Token("ident", text[i : end + 1], name, i))
            i = end + 1
            continue
        if ch.isdigit():
            token, i = _read_number(text, i)
            tokens.append(token)
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word.lower() in KEYWORDS else "ident"
            tokens.append(Token(kind, word, word, i))
            i = j
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(Token(punct, punct, punct, i))
                i += len(punct)
                break
        else:
            raise ParseError(byte_offset(text, i), f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", None, n))
    return tokens


def _read_string(text: str, start: int) -> tuple[str, int]:
    quote = text[start]
    chars: list[str] = []
    i = start + 1
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                break
            nxt = text[i + 1]
            if nxt == "u":
                hex_part = text[i + 2 : i + 6]
                if len(hex_part) == 4:
                    try:
                        chars.append(chr(int(hex_part, 16)))
                        i += 6
                        continue
                    except ValueError:
                        pass
                raise ParseError(byte_offset(text, i), "invalid unicode escape")
            chars.append(_ESCAPES.get(nxt, nxt))
            i += 2
            continue
        if ch == quote:
            return "".join(chars), i + 1
        chars.append(ch)
        i += 1
    raise ParseError(byte_offset(text, start), "unterminated string literal")


def _read_number(text: str, start: int) -> tuple[Token, int]:
    i = start
    n = len(text)
    while i < n and text[i].isdigit():
        i += 1
    is_float = False
    if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
        is_float = True
        i += 1
        while i < n and text[i].isdigit():
            i += 1
    if i < n and text[i] in "eE":
        j = i + 1
        if j < n and text[j] in "+-":
            j += 1
        if j < n and text[j].isdigit():
            is_float = True
            i = j
            while i < n and text[i].isdigit():
                i += 1
    raw = text[start:i]
    if is_float:
        return Token("float", raw, float(raw), start), i
    return Token("int", raw, int(raw), start), i


def keyword_at(token: Token, word: str) -> bool:
    return token.kind == "keyword" and token.text.lower() == word


def describe(token: Token) -> str:
    if token.kind == "eof":
        return "end of input"
    return repr(token.text)
