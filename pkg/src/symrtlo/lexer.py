"""Tokenizer for the Verilog subset.

Produces a flat token stream with source spans. Comments (``//`` and
``/* */``) are skipped. Sized literals in binary, decimal, hex and octal
bases are normalized to (value, width) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError
from .nodes import SourceSpan

KEYWORDS = {
    "module", "endmodule", "parameter", "input", "output", "inout",
    "wire", "reg", "assign", "always", "begin", "end", "if", "else",
    "case", "casex", "casez", "endcase", "default", "posedge", "negedge",
    "or", "signed", "generate", "endgenerate", "genvar", "integer",
    "function", "endfunction", "task", "endtask", "initial", "for",
    "while", "localparam",
}

# Multi-character operators first so maximal munch works.
OPERATORS = [
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!",
    "<", ">", "=", "?", ":", "@", "#", "(", ")", "[", "]",
    "{", "}", ",", ";", ".",
]

_BASE_DIGITS = {
    "b": "01",
    "d": "0123456789",
    "h": "0123456789abcdefABCDEF",
    "o": "01234567",
}
_BASE_RADIX = {"b": 2, "d": 10, "h": 16, "o": 8}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | sized_number | op | eof
    text: str
    value: object
    span: SourceSpan


class Lexer:
    def __init__(self, source: str, filename: str = "<input>"):
        self.src = source
        self.filename = filename
        self.pos = 0
        self.line = 1
        self.col = 1

    def _span(self, start_line, start_col) -> SourceSpan:
        return SourceSpan(self.filename, start_line, self.line, start_col, max(self.col - 1, start_col))

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.src) and self.src[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_ws_and_comments(self):
        while self.pos < len(self.src):
            c = self.src[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif self.src.startswith("//", self.pos):
                while self.pos < len(self.src) and self.src[self.pos] != "\n":
                    self._advance()
            elif self.src.startswith("/*", self.pos):
                start = SourceSpan(self.filename, self.line, self.line, self.col, self.col)
                self._advance(2)
                while self.pos < len(self.src) and not self.src.startswith("*/", self.pos):
                    self._advance()
                if self.pos >= len(self.src):
                    raise ParseError("unterminated block comment", start)
                self._advance(2)
            else:
                return

    def tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _next(self) -> Token:
        self._skip_ws_and_comments()
        if self.pos >= len(self.src):
            span = SourceSpan(self.filename, self.line, self.line, self.col, self.col)
            return Token("eof", "", None, span)

        start_line, start_col = self.line, self.col
        c = self.src[self.pos]

        if c.isalpha() or c == "_":
            start = self.pos
            while self.pos < len(self.src) and (
                self.src[self.pos].isalnum() or self.src[self.pos] in "_$"
            ):
                self._advance()
            text = self.src[start : self.pos]
            kind = "keyword" if text in KEYWORDS else "ident"
            return Token(kind, text, text, self._span(start_line, start_col))

        if c.isdigit() or c == "'":
            return self._number(start_line, start_col)

        # LaTeX-mangled sources escape % as \%; accept it as plain %.
        if c == "\\" and self.src.startswith("\\%", self.pos):
            self._advance(2)
            return Token("op", "%", "%", self._span(start_line, start_col))

        for op in OPERATORS:
            if self.src.startswith(op, self.pos):
                self._advance(len(op))
                return Token("op", op, op, self._span(start_line, start_col))

        raise ParseError(
            f"unexpected character {c!r}",
            SourceSpan(self.filename, start_line, start_line, start_col, start_col),
        )

    def _number(self, start_line, start_col) -> Token:
        start = self.pos
        width = None
        if self.src[self.pos].isdigit():
            while self.pos < len(self.src) and (
                self.src[self.pos].isdigit() or self.src[self.pos] == "_"
            ):
                self._advance()
        if self.pos < len(self.src) and self.src[self.pos] == "'":
            size_text = self.src[start : self.pos].replace("_", "")
            width = int(size_text) if size_text else None
            self._advance()  # '
            if self.pos >= len(self.src):
                raise ParseError(
                    "unterminated sized literal",
                    self._span(start_line, start_col),
                )
            base = self.src[self.pos].lower()
            if base not in _BASE_DIGITS:
                raise ParseError(
                    f"unknown literal base {self.src[self.pos]!r}",
                    self._span(start_line, start_col),
                )
            self._advance()
            digits_start = self.pos
            allowed = _BASE_DIGITS[base] + "_"
            while self.pos < len(self.src) and self.src[self.pos] in allowed:
                self._advance()
            digits = self.src[digits_start : self.pos].replace("_", "")
            if not digits:
                raise ParseError(
                    "sized literal has no digits", self._span(start_line, start_col)
                )
            value = int(digits, _BASE_RADIX[base])
            if width is None:
                width = max(value.bit_length(), 1)
            if value >= (1 << width):
                raise ParseError(
                    f"literal value {value} does not fit in {width} bits",
                    self._span(start_line, start_col),
                )
            text = self.src[start : self.pos]
            return Token("sized_number", text, (value, width), self._span(start_line, start_col))
        text = self.src[start : self.pos].replace("_", "")
        return Token("number", text, int(text), self._span(start_line, start_col))


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    return Lexer(source, filename).tokens()
