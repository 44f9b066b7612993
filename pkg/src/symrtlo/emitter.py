"""Deterministic Verilog emission.

Output is stable byte-for-byte for a given Design: 2-space indentation,
one item per line, minimal parentheses derived from operator precedence,
sized constants printed in binary. ``parse(emit(d))`` is structurally
equal to ``d`` (spans aside); implicit declarations are not printed, so
they re-derive on re-parse.
"""

from __future__ import annotations

from .nodes import (
    AlwaysBlock,
    Binary,
    BlockingAssign,
    Case,
    Const,
    ContinuousAssign,
    Design,
    Expr,
    If,
    NonblockingAssign,
    Ref,
    Select,
    Stmt,
    Ternary,
    Unary,
)

# Higher binds tighter. Mirrors the parser's precedence table.
_BIN_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}
_UNARY_PREC = 11
_TERNARY_PREC = 0


def emit_expr(expr: Expr, parent_prec: int = -1, right_of_same: bool = False) -> str:
    text, prec = _expr_text(expr)
    if prec < parent_prec or (prec == parent_prec and right_of_same):
        return f"({text})"
    return text


def _expr_text(expr: Expr) -> tuple[str, int]:
    if isinstance(expr, Const):
        if expr.width is None:
            return str(expr.value), 100
        return f"{expr.width}'b{expr.value:0{expr.width}b}", 100
    if isinstance(expr, Ref):
        return expr.name, 100
    if isinstance(expr, Select):
        base = expr.base.name
        msb = emit_expr(expr.msb)
        lsb = emit_expr(expr.lsb)
        if expr.msb == expr.lsb:
            return f"{base}[{msb}]", 100
        return f"{base}[{msb}:{lsb}]", 100
    if isinstance(expr, Unary):
        inner = emit_expr(expr.operand, _UNARY_PREC)
        return f"{expr.op}{inner}", _UNARY_PREC
    if isinstance(expr, Binary):
        prec = _BIN_PREC[expr.op]
        lhs = emit_expr(expr.lhs, prec)
        rhs = emit_expr(expr.rhs, prec, right_of_same=True)
        return f"{lhs} {expr.op} {rhs}", prec
    if isinstance(expr, Ternary):
        cond = emit_expr(expr.cond, 1)
        then = emit_expr(expr.then, _TERNARY_PREC)
        orelse = emit_expr(expr.orelse, _TERNARY_PREC)
        return f"{cond} ? {then} : {orelse}", _TERNARY_PREC
    raise TypeError(f"cannot emit {type(expr).__name__}")


def _range_text(msb, lsb) -> str:
    if msb is None:
        return ""
    return f"[{emit_expr(msb)}:{emit_expr(lsb)}] "


def _emit_stmt(stmt: Stmt, indent: int, out: list[str]):
    pad = "  " * indent
    if isinstance(stmt, BlockingAssign):
        out.append(f"{pad}{stmt.target} = {emit_expr(stmt.rhs)};")
    elif isinstance(stmt, NonblockingAssign):
        out.append(f"{pad}{stmt.target} <= {emit_expr(stmt.rhs)};")
    elif isinstance(stmt, If):
        out.append(f"{pad}if ({emit_expr(stmt.cond)}) begin")
        for s in stmt.then_body:
            _emit_stmt(s, indent + 1, out)
        if stmt.else_body:
            out.append(f"{pad}end else begin")
            for s in stmt.else_body:
                _emit_stmt(s, indent + 1, out)
        out.append(f"{pad}end")
    elif isinstance(stmt, Case):
        out.append(f"{pad}case ({emit_expr(stmt.subject)})")
        for arm in stmt.arms:
            labels = ", ".join(emit_expr(l) for l in arm.labels)
            if len(arm.body) == 1 and isinstance(
                arm.body[0], (BlockingAssign, NonblockingAssign)
            ):
                line: list[str] = []
                _emit_stmt(arm.body[0], 0, line)
                out.append(f"{pad}  {labels}: {line[0]}")
            else:
                out.append(f"{pad}  {labels}: begin")
                for s in arm.body:
                    _emit_stmt(s, indent + 2, out)
                out.append(f"{pad}  end")
        if stmt.default is not None:
            if len(stmt.default) == 1 and isinstance(
                stmt.default[0], (BlockingAssign, NonblockingAssign)
            ):
                line = []
                _emit_stmt(stmt.default[0], 0, line)
                out.append(f"{pad}  default: {line[0]}")
            else:
                out.append(f"{pad}  default: begin")
                for s in stmt.default:
                    _emit_stmt(s, indent + 2, out)
                out.append(f"{pad}  end")
        out.append(f"{pad}endcase")
    else:
        raise TypeError(f"cannot emit statement {type(stmt).__name__}")


def emit(design: Design) -> str:
    """Emit a Design as subset-Verilog text."""
    out: list[str] = []
    if design.parameters:
        out.append(f"module {design.name} #(")
        for i, p in enumerate(design.parameters):
            comma = "," if i < len(design.parameters) - 1 else ""
            out.append(f"  parameter {p.name} = {emit_expr(p.value)}{comma}")
        out.append(") (")
    else:
        out.append(f"module {design.name} (")
    for i, p in enumerate(design.ports):
        comma = "," if i < len(design.ports) - 1 else ""
        kind = f"{p.kind} " if p.kind == "reg" else ""
        out.append(f"  {p.direction} {kind}{_range_text(p.msb, p.lsb)}{p.name}{comma}")
    out.append(");")
    for d in design.decls:
        if d.implicit:
            continue
        out.append(f"  {d.kind} {_range_text(d.msb, d.lsb)}{d.name};")
    for item in design.items:
        if isinstance(item, ContinuousAssign):
            out.append(f"  assign {item.target} = {emit_expr(item.rhs)};")
        elif isinstance(item, AlwaysBlock):
            sens = item.sensitivity
            if sens.kind == "star":
                head = "always @(*)"
            elif sens.kind == "list":
                head = f"always @({' or '.join(sens.signals)})"
            else:
                edges = " or ".join(f"{edge} {sig}" for edge, sig in sens.edges)
                head = f"always @({edges})"
            out.append(f"  {head} begin")
            for s in item.body:
                _emit_stmt(s, 2, out)
            out.append("  end")
        else:
            raise TypeError(f"cannot emit item {type(item).__name__}")
    out.append("endmodule")
    return "\n".join(out) + "\n"
