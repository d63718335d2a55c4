"""Lossless lexical tokenization for token-level diffing.

The tokenizer is language-agnostic: identifiers are Unicode word runs,
numbers are digit runs (with attached literal suffixes), string literals
are kept whole when the quotes balance on a single line, whitespace runs
and line terminators are single tokens.  The only hard guarantees are
determinism and byte-exact reconstruction via :func:`detokenize`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List


class TokenKind(Enum):
    IDENTIFIER = "Identifier"
    NUMBER = "Number"
    PUNCT = "Punct"
    STRING = "StringLit"
    WHITESPACE = "Whitespace"
    NEWLINE = "Newline"
    OTHER = "Other"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")


# Multi-character operators common across C-family languages, longest first
# so the alternation is maximal-munch.
_MULTI_OPS = sorted(
    [
        ">>>=", "===", "!==", ">>>", "<<=", ">>=", "**=", "//=", "...",
        "::", "->", "=>", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
        "%=", "&=", "|=", "^=", "//", "**", "&&", "||", "??", "?.", "++",
        "--", "<<", ">>", "/*", "*/",
    ],
    key=len,
    reverse=True,
)

_TOKEN_RE = re.compile(
    r"""
      (?P<newline>\r\n|\r|\n)
    | (?P<whitespace>[^\S\r\n]+)
    | (?P<string>'(?:[^'\\\r\n]|\\[^\r\n])*'
               |"(?:[^"\\\r\n]|\\[^\r\n])*"
               |`(?:[^`\\\r\n]|\\[^\r\n])*`)
    | (?P<number>\d(?:[eEpP][+-]|[\w.])*)
    | (?P<ident>[^\W\d]\w*)
    | (?P<punct>%s|.)
    """
    % "|".join(re.escape(op) for op in _MULTI_OPS),
    re.VERBOSE,
)

_ASCII_PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")


class TokenStream(List[Token]):
    """Ordered token list whose concatenated texts equal the source text."""

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self]

    def text(self) -> str:
        return "".join(t.text for t in self)


def _kind_of(group: str, text: str) -> TokenKind:
    if group == "newline":
        return TokenKind.NEWLINE
    if group == "whitespace":
        return TokenKind.WHITESPACE
    if group == "string":
        return TokenKind.STRING
    if group == "number":
        return TokenKind.NUMBER
    if group == "ident":
        return TokenKind.IDENTIFIER
    if all(c in _ASCII_PUNCT for c in text):
        return TokenKind.PUNCT
    return TokenKind.OTHER


def tokenize(text: str) -> TokenStream:
    """Split ``text`` into a lossless token stream.

    Pure and deterministic; ``detokenize(tokenize(text)) == text`` holds
    byte-for-byte for any input string.
    """
    if isinstance(text, bytes):
        raise TypeError("tokenize expects str, not bytes")
    stream = TokenStream()
    for match in _TOKEN_RE.finditer(text):
        group = match.lastgroup
        assert group is not None
        piece = match.group()
        stream.append(Token(piece, _kind_of(group, piece)))
    return stream


def detokenize(stream: Iterable[Token]) -> str:
    """Exact concatenation of token texts."""
    return "".join(t.text for t in stream)
