"""Typed AST for the supported Verilog subset.

All nodes are immutable dataclasses. Source spans are attached for
diagnostics but excluded from equality, so two designs compare equal
when they are structurally identical regardless of where they were
parsed from. Width expressions (port ranges, parameter values, case
labels) are ordinary ``Expr`` trees; they are resolved against the
parameter environment by :mod:`symrtlo.semantics`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line_start: int
    line_end: int
    col_start: int
    col_end: int

    def __post_init__(self):
        if self.line_start > self.line_end:
            raise ValueError("span line_start > line_end")
        if self.line_start == self.line_end and self.col_start > self.col_end:
            raise ValueError("span col_start > col_end on one line")

    def __str__(self):
        return f"{self.file}:{self.line_start}:{self.col_start}"


NO_SPAN = SourceSpan("<none>", 1, 1, 1, 1)


def _span_field():
    return field(default=NO_SPAN, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: int
    width: Optional[int] = None  # None = unsized decimal literal
    signed: bool = False
    span: SourceSpan = _span_field()

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("constants are unsigned magnitudes")
        if self.width is not None:
            if self.width < 1:
                raise ValueError("constant width must be >= 1")
            if self.value >= (1 << self.width):
                raise ValueError(
                    f"constant {self.value} does not fit in {self.width} bits"
                )


@dataclass(frozen=True)
class Ref(Expr):
    name: str
    span: SourceSpan = _span_field()


UNARY_OPS = ("-", "!", "~")

BINARY_OPS = (
    "+", "-", "*", "/", "%",
    "<<", ">>",
    "&", "|", "^",
    "==", "!=", "<", "<=", ">", ">=",
    "&&", "||",
)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    span: SourceSpan = _span_field()

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr
    span: SourceSpan = _span_field()

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


@dataclass(frozen=True)
class Ternary(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Select(Expr):
    """Bit select ``a[i]`` (msb == lsb) or part select ``a[m:l]``.

    Bounds must fold to constants once parameters are bound.
    """

    base: Ref
    msb: Expr
    lsb: Expr
    span: SourceSpan = _span_field()


# ---------------------------------------------------------------------------
# Statements (always-block bodies)


@dataclass(frozen=True)
class Stmt:
    pass


@dataclass(frozen=True)
class BlockingAssign(Stmt):
    target: str
    rhs: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class NonblockingAssign(Stmt):
    target: str
    rhs: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...] = ()
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class CaseArm:
    labels: tuple[Expr, ...]
    body: tuple[Stmt, ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Case(Stmt):
    subject: Expr
    arms: tuple[CaseArm, ...]
    default: Optional[tuple[Stmt, ...]] = None
    span: SourceSpan = _span_field()


# ---------------------------------------------------------------------------
# Module items


@dataclass(frozen=True)
class Sensitivity:
    """``kind`` is ``star``, ``list`` (explicit combinational), or ``edges``."""

    kind: str
    signals: tuple[str, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()  # (posedge|negedge, signal)

    def is_clocked(self) -> bool:
        return self.kind == "edges"


@dataclass(frozen=True)
class AlwaysBlock:
    sensitivity: Sensitivity
    body: tuple[Stmt, ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ContinuousAssign:
    target: str
    rhs: Expr
    span: SourceSpan = _span_field()


ModuleItem = Union[ContinuousAssign, AlwaysBlock]


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # input | output
    kind: str = "wire"  # wire | reg
    msb: Optional[Expr] = None
    lsb: Optional[Expr] = None
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Decl:
    name: str
    kind: str  # wire | reg
    msb: Optional[Expr] = None
    lsb: Optional[Expr] = None
    implicit: bool = False
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Parameter:
    name: str
    value: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Design:
    name: str
    parameters: tuple[Parameter, ...]
    ports: tuple[Port, ...]
    decls: tuple[Decl, ...]
    items: tuple[ModuleItem, ...]
    span: SourceSpan = _span_field()

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def decl(self, name: str) -> Optional[Decl]:
        for d in self.decls:
            if d.name == name:
                return d
        return None

    def parameter(self, name: str) -> Optional[Parameter]:
        for p in self.parameters:
            if p.name == name:
                return p
        return None

    def input_ports(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == "input")

    def output_ports(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == "output")


# ---------------------------------------------------------------------------
# Generic traversal helpers


def walk_exprs(node) -> Iterator[Expr]:
    """Yield every expression node reachable from ``node``, pre-order."""
    if isinstance(node, Expr):
        yield node
        for f in fields(node):
            v = getattr(node, f.name)
            if isinstance(v, Expr):
                yield from walk_exprs(v)
    elif isinstance(node, (BlockingAssign, NonblockingAssign, ContinuousAssign)):
        yield from walk_exprs(node.rhs)
    elif isinstance(node, If):
        yield from walk_exprs(node.cond)
        for s in node.then_body:
            yield from walk_exprs(s)
        for s in node.else_body:
            yield from walk_exprs(s)
    elif isinstance(node, Case):
        yield from walk_exprs(node.subject)
        for arm in node.arms:
            for lab in arm.labels:
                yield from walk_exprs(lab)
            for s in arm.body:
                yield from walk_exprs(s)
        if node.default is not None:
            for s in node.default:
                yield from walk_exprs(s)
    elif isinstance(node, AlwaysBlock):
        for s in node.body:
            yield from walk_exprs(s)
    elif isinstance(node, Design):
        for item in node.items:
            yield from walk_exprs(item)


def walk_stmts(body: tuple[Stmt, ...]) -> Iterator[Stmt]:
    for s in body:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then_body)
            yield from walk_stmts(s.else_body)
        elif isinstance(s, Case):
            for arm in s.arms:
                yield from walk_stmts(arm.body)
            if s.default is not None:
                yield from walk_stmts(s.default)


def referenced_names(expr: Expr) -> set[str]:
    return {e.name for e in walk_exprs(expr) if isinstance(e, Ref)}


def stmt_targets(body: tuple[Stmt, ...]) -> set[str]:
    return {
        s.target
        for s in walk_stmts(body)
        if isinstance(s, (BlockingAssign, NonblockingAssign))
    }


def stmt_reads(body: tuple[Stmt, ...]) -> set[str]:
    """Names read by a statement list (conditions, subjects, labels, RHSs)."""
    names: set[str] = set()
    for s in walk_stmts(body):
        if isinstance(s, (BlockingAssign, NonblockingAssign)):
            names |= referenced_names(s.rhs)
        elif isinstance(s, If):
            names |= referenced_names(s.cond)
        elif isinstance(s, Case):
            names |= referenced_names(s.subject)
            for arm in s.arms:
                for lab in arm.labels:
                    names |= referenced_names(lab)
    return names


def expr_size(expr: Expr) -> int:
    """Node count of an expression tree."""
    return sum(1 for _ in walk_exprs(expr))


def design_size(design: Design) -> int:
    """Total expression-node count of a design, used for monotonicity checks."""
    return sum(1 for _ in walk_exprs(design))


def map_exprs(node, fn):
    """Rebuild ``node`` with ``fn`` applied bottom-up to every Expr."""
    if isinstance(node, Const) or isinstance(node, Ref):
        return fn(node)
    if isinstance(node, Unary):
        return fn(replace(node, operand=map_exprs(node.operand, fn)))
    if isinstance(node, Binary):
        return fn(
            replace(node, lhs=map_exprs(node.lhs, fn), rhs=map_exprs(node.rhs, fn))
        )
    if isinstance(node, Ternary):
        return fn(
            replace(
                node,
                cond=map_exprs(node.cond, fn),
                then=map_exprs(node.then, fn),
                orelse=map_exprs(node.orelse, fn),
            )
        )
    if isinstance(node, Select):
        return fn(
            replace(
                node,
                base=map_exprs(node.base, fn),
                msb=map_exprs(node.msb, fn),
                lsb=map_exprs(node.lsb, fn),
            )
        )
    if isinstance(node, (BlockingAssign, NonblockingAssign, ContinuousAssign)):
        return replace(node, rhs=map_exprs(node.rhs, fn))
    if isinstance(node, If):
        return replace(
            node,
            cond=map_exprs(node.cond, fn),
            then_body=tuple(map_exprs(s, fn) for s in node.then_body),
            else_body=tuple(map_exprs(s, fn) for s in node.else_body),
        )
    if isinstance(node, Case):
        return replace(
            node,
            subject=map_exprs(node.subject, fn),
            arms=tuple(
                replace(
                    arm,
                    labels=tuple(map_exprs(l, fn) for l in arm.labels),
                    body=tuple(map_exprs(s, fn) for s in arm.body),
                )
                for arm in node.arms
            ),
            default=None
            if node.default is None
            else tuple(map_exprs(s, fn) for s in node.default),
        )
    if isinstance(node, CaseArm):
        return replace(
            node,
            labels=tuple(map_exprs(l, fn) for l in node.labels),
            body=tuple(map_exprs(s, fn) for s in node.body),
        )
    if isinstance(node, AlwaysBlock):
        return replace(node, body=tuple(map_exprs(s, fn) for s in node.body))
    if isinstance(node, Design):
        return replace(node, items=tuple(map_exprs(i, fn) for i in node.items))
    raise TypeError(f"map_exprs: unsupported node {type(node).__name__}")
