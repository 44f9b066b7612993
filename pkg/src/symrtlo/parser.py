"""Recursive-descent parser producing :class:`~symrtlo.nodes.Design` trees.

The accepted grammar is documented in GRAMMAR.md. Anything that is legal
Verilog but outside the subset raises :class:`UnsupportedConstruct`;
malformed input raises :class:`ParseError`. Identifiers that appear only
as continuous-assign targets are auto-declared as 1-bit wires (marked
``implicit``) so that common netlist-style sources parse; the validator
reports them as warnings.
"""

from __future__ import annotations

from .errors import ParseError, UnsupportedConstruct
from .lexer import Token, tokenize
from .nodes import (
    AlwaysBlock,
    BlockingAssign,
    Case,
    CaseArm,
    Const,
    ContinuousAssign,
    Decl,
    Design,
    Expr,
    If,
    NonblockingAssign,
    Parameter,
    Port,
    Ref,
    Select,
    Sensitivity,
    SourceSpan,
    Stmt,
    Ternary,
    Unary,
)
from .nodes import Binary as BinaryNode

_UNSUPPORTED_KEYWORDS = {
    "generate", "endgenerate", "genvar", "function", "endfunction",
    "task", "endtask", "initial", "for", "while", "inout", "casex",
    "casez", "integer", "localparam", "signed",
}

# Binary precedence, loosest first. Unary binds tighter than all of these.
_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]


class _Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.toks = tokens
        self.i = 0
        self.filename = filename

    # -- token helpers ------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}", tok.span)
        return self.next()

    def check_supported(self, tok: Token):
        if tok.kind == "keyword" and tok.text in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstruct(
                f"{tok.text!r} is outside the supported subset", tok.span
            )

    # -- module -------------------------------------------------------

    def parse_module(self) -> Design:
        start = self.expect("keyword", "module")
        name = self.expect("ident").text
        parameters: list[Parameter] = []
        if self.at("op", "#"):
            self.next()
            self.expect("op", "(")
            parameters = self.parse_parameter_list()
            self.expect("op", ")")
        self.expect("op", "(")
        ports = self.parse_port_list()
        self.expect("op", ")")
        self.expect("op", ";")

        decls: list[Decl] = []
        items = []
        while not self.at("keyword", "endmodule"):
            tok = self.peek()
            if tok.kind == "eof":
                raise ParseError("missing 'endmodule'", tok.span)
            self.check_supported(tok)
            if tok.kind == "keyword" and tok.text in ("wire", "reg"):
                decls.extend(self.parse_decl())
            elif tok.kind == "keyword" and tok.text == "assign":
                items.append(self.parse_assign())
            elif tok.kind == "keyword" and tok.text == "always":
                items.append(self.parse_always())
            elif tok.kind == "keyword" and tok.text == "parameter":
                self.next()
                parameters.extend(self.parse_parameter_items())
                self.expect("op", ";")
            else:
                raise ParseError(f"unexpected token {tok.text!r}", tok.span)
        end = self.expect("keyword", "endmodule")
        if self.peek().kind != "eof":
            raise UnsupportedConstruct(
                "multiple modules per file are not supported", self.peek().span
            )

        declared = {p.name for p in ports} | {d.name for d in decls} | {
            p.name for p in parameters
        }
        for item in items:
            if isinstance(item, ContinuousAssign) and item.target not in declared:
                decls.append(
                    Decl(item.target, "wire", implicit=True, span=item.span)
                )
                declared.add(item.target)

        span = SourceSpan(
            self.filename,
            start.span.line_start,
            end.span.line_end,
            start.span.col_start,
            end.span.col_end,
        )
        return Design(
            name=name,
            parameters=tuple(parameters),
            ports=tuple(ports),
            decls=tuple(decls),
            items=tuple(items),
            span=span,
        )

    def parse_parameter_list(self) -> list[Parameter]:
        params: list[Parameter] = []
        while True:
            if self.at("keyword", "parameter"):
                self.next()
            tok = self.expect("ident")
            self.expect("op", "=")
            value = self.parse_expr()
            params.append(Parameter(tok.text, value, span=tok.span))
            if self.at("op", ","):
                self.next()
                continue
            return params

    def parse_parameter_items(self) -> list[Parameter]:
        params: list[Parameter] = []
        while True:
            tok = self.expect("ident")
            self.expect("op", "=")
            value = self.parse_expr()
            params.append(Parameter(tok.text, value, span=tok.span))
            if self.at("op", ","):
                self.next()
                continue
            return params

    def parse_port_list(self) -> list[Port]:
        ports: list[Port] = []
        if self.at("op", ")"):
            return ports
        direction = None
        kind = "wire"
        msb = lsb = None
        while True:
            tok = self.peek()
            self.check_supported(tok)
            if tok.kind == "keyword" and tok.text in ("input", "output"):
                direction = self.next().text
                kind = "wire"
                msb = lsb = None
                if self.at("keyword", "wire") or self.at("keyword", "reg"):
                    kind = self.next().text
                if self.at("op", "["):
                    msb, lsb = self.parse_range()
            if direction is None:
                raise UnsupportedConstruct(
                    "non-ANSI port lists are not supported", tok.span
                )
            name_tok = self.expect("ident")
            ports.append(
                Port(name_tok.text, direction, kind, msb, lsb, span=name_tok.span)
            )
            if self.at("op", ","):
                self.next()
                continue
            return ports

    def parse_range(self) -> tuple[Expr, Expr]:
        self.expect("op", "[")
        msb = self.parse_expr()
        self.expect("op", ":")
        lsb = self.parse_expr()
        self.expect("op", "]")
        return msb, lsb

    def parse_decl(self) -> list[Decl]:
        kind_tok = self.next()
        msb = lsb = None
        if self.at("op", "["):
            msb, lsb = self.parse_range()
        decls = []
        while True:
            tok = self.expect("ident")
            decls.append(Decl(tok.text, kind_tok.text, msb, lsb, span=tok.span))
            if self.at("op", ","):
                self.next()
                continue
            self.expect("op", ";")
            return decls

    def parse_assign(self) -> ContinuousAssign:
        start = self.expect("keyword", "assign")
        target = self.expect("ident")
        if self.at("op", "["):
            raise UnsupportedConstruct(
                "bit/part-select assignment targets are not supported",
                self.peek().span,
            )
        self.expect("op", "=")
        rhs = self.parse_expr()
        self.expect("op", ";")
        return ContinuousAssign(target.text, rhs, span=start.span)

    # -- always blocks --------------------------------------------------

    def parse_always(self) -> AlwaysBlock:
        start = self.expect("keyword", "always")
        self.expect("op", "@")
        self.expect("op", "(")
        sens = self.parse_sensitivity()
        self.expect("op", ")")
        body = self.parse_stmt_or_block()
        return AlwaysBlock(sens, tuple(body), span=start.span)

    def parse_sensitivity(self) -> Sensitivity:
        if self.at("op", "*"):
            self.next()
            return Sensitivity("star")
        if self.at("keyword", "posedge") or self.at("keyword", "negedge"):
            edges = []
            while True:
                edge = self.next().text
                sig = self.expect("ident").text
                edges.append((edge, sig))
                if self.at("keyword", "or") or self.at("op", ","):
                    self.next()
                    if not (self.at("keyword", "posedge") or self.at("keyword", "negedge")):
                        raise ParseError(
                            "mixed edge and level sensitivity", self.peek().span
                        )
                    continue
                return Sensitivity("edges", edges=tuple(edges))
        signals = []
        while True:
            signals.append(self.expect("ident").text)
            if self.at("keyword", "or") or self.at("op", ","):
                self.next()
                continue
            return Sensitivity("list", signals=tuple(signals))

    def parse_stmt_or_block(self) -> list[Stmt]:
        if self.at("keyword", "begin"):
            self.next()
            stmts = []
            while not self.at("keyword", "end"):
                if self.peek().kind == "eof":
                    raise ParseError("missing 'end'", self.peek().span)
                stmts.append(self.parse_stmt())
            self.next()
            return stmts
        return [self.parse_stmt()]

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        self.check_supported(tok)
        if tok.kind == "keyword" and tok.text == "if":
            return self.parse_if()
        if tok.kind == "keyword" and tok.text == "case":
            return self.parse_case()
        if tok.kind == "ident":
            target = self.next()
            if self.at("op", "<="):
                self.next()
                rhs = self.parse_expr()
                self.expect("op", ";")
                return NonblockingAssign(target.text, rhs, span=target.span)
            if self.at("op", "="):
                self.next()
                rhs = self.parse_expr()
                self.expect("op", ";")
                return BlockingAssign(target.text, rhs, span=target.span)
            if self.at("op", "["):
                raise UnsupportedConstruct(
                    "bit/part-select assignment targets are not supported",
                    self.peek().span,
                )
            raise ParseError(f"expected '=' or '<=' after {target.text!r}", self.peek().span)
        raise ParseError(f"unexpected token {tok.text!r} in statement position", tok.span)

    def parse_if(self) -> If:
        start = self.expect("keyword", "if")
        self.expect("op", "(")
        cond = self.parse_expr()
        self.expect("op", ")")
        then_body = self.parse_stmt_or_block()
        else_body: list[Stmt] = []
        if self.at("keyword", "else"):
            self.next()
            else_body = self.parse_stmt_or_block()
        return If(cond, tuple(then_body), tuple(else_body), span=start.span)

    def parse_case(self) -> Case:
        start = self.expect("keyword", "case")
        self.expect("op", "(")
        subject = self.parse_expr()
        self.expect("op", ")")
        arms = []
        default = None
        while not self.at("keyword", "endcase"):
            if self.peek().kind == "eof":
                raise ParseError("missing 'endcase'", self.peek().span)
            if self.at("keyword", "default"):
                self.next()
                if self.at("op", ":"):
                    self.next()
                if default is not None:
                    raise ParseError("multiple default arms", self.peek().span)
                default = tuple(self.parse_stmt_or_block())
                continue
            labels = [self.parse_expr()]
            while self.at("op", ","):
                self.next()
                labels.append(self.parse_expr())
            colon = self.expect("op", ":")
            body = self.parse_stmt_or_block()
            arms.append(CaseArm(tuple(labels), tuple(body), span=colon.span))
        self.next()
        return Case(subject, tuple(arms), default, span=start.span)

    # -- expressions ----------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_ternary()

    def parse_ternary(self) -> Expr:
        cond = self.parse_binary(0)
        if self.at("op", "?"):
            start = self.next()
            then = self.parse_ternary()
            self.expect("op", ":")
            orelse = self.parse_ternary()
            return Ternary(cond, then, orelse, span=start.span)
        return cond

    def parse_binary(self, level: int) -> Expr:
        if level >= len(_PRECEDENCE):
            return self.parse_unary()
        lhs = self.parse_binary(level + 1)
        ops = _PRECEDENCE[level]
        while self.peek().kind == "op" and self.peek().text in ops:
            op_tok = self.next()
            rhs = self.parse_binary(level + 1)
            lhs = BinaryNode(op_tok.text, lhs, rhs, span=op_tok.span)
        return lhs

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("-", "!", "~"):
            self.next()
            operand = self.parse_unary()
            return Unary(tok.text, operand, span=tok.span)
        if tok.kind == "op" and tok.text in ("&", "|", "^"):
            raise UnsupportedConstruct(
                f"reduction operator {tok.text!r} is not supported", tok.span
            )
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.peek()
        self.check_supported(tok)
        if tok.kind == "op" and tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("op", ")")
            return inner
        if tok.kind == "op" and tok.text == "{":
            raise UnsupportedConstruct("concatenation is not supported", tok.span)
        if tok.kind == "number":
            self.next()
            return Const(tok.value, width=None, span=tok.span)
        if tok.kind == "sized_number":
            self.next()
            value, width = tok.value
            return Const(value, width=width, span=tok.span)
        if tok.kind == "ident":
            self.next()
            ref = Ref(tok.text, span=tok.span)
            if self.at("op", "["):
                self.next()
                first = self.parse_expr()
                if self.at("op", ":"):
                    self.next()
                    lsb = self.parse_expr()
                    end = self.expect("op", "]")
                    return Select(ref, first, lsb, span=end.span)
                end = self.expect("op", "]")
                return Select(ref, first, first, span=end.span)
            return ref
        raise ParseError(f"unexpected token {tok.text!r} in expression", tok.span)


def parse(source: str, filename: str = "<input>") -> Design:
    """Parse subset-Verilog source text into a Design."""
    tokens = tokenize(source, filename)
    return _Parser(tokens, filename).parse_module()


def parse_file(path) -> Design:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), filename=str(path))
