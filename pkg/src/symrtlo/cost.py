"""Structural cost proxy.

Lowers a design to a primitive netlist (one cell per operator, one cell
per register, mux trees for if/case) and reports wire/cell counts, a
weighted area proxy and combinational depth. The numbers measure AST
structure only; they are stable across runs and meaningful as relative
comparisons, not as synthesis results.

Area weights: gate=1, add/sub/neg=W, comparator=W, shift=W, mux=W,
multiplier=W^2, divider/modulo=2*W^2, register=2*W (W = cell width).
"""

from __future__ import annotations

from dataclasses import dataclass

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
    stmt_targets,
)
from .semantics import WidthEnv, require_valid

_KIND_OF_OP = {
    "+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod",
    "<<": "shift", ">>": "shift",
    "&": "gate", "|": "gate", "^": "gate",
    "==": "cmp", "!=": "cmp", "<": "cmp", "<=": "cmp", ">": "cmp", ">=": "cmp",
    "&&": "logic", "||": "logic",
}


def _area_weight(kind: str, width: int) -> int:
    if kind in ("gate", "logic", "not"):
        return 1
    if kind in ("add", "sub", "neg", "cmp", "shift", "mux"):
        return width
    if kind == "mul":
        return width * width
    if kind in ("div", "mod"):
        return 2 * width * width
    if kind == "register":
        return 2 * width
    raise ValueError(f"unknown cell kind {kind}")


@dataclass(frozen=True)
class Cell:
    kind: str
    op: str  # concrete operator or kind name
    width: int
    inputs: tuple[str, ...]
    output: str


@dataclass(frozen=True)
class Netlist:
    nets: tuple[str, ...]  # constant pseudo-nets ($c...) excluded
    cells: tuple[Cell, ...]


@dataclass(frozen=True)
class CostReport:
    wires: int
    cells: int
    area_proxy: int
    depth: int
    histogram: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "wires": self.wires,
            "cells": self.cells,
            "area_proxy": self.area_proxy,
            "depth": self.depth,
            "histogram": dict(sorted(self.histogram.items())),
        }


class _Lowerer:
    def __init__(self, design: Design):
        self.design = design
        self.wenv = WidthEnv(design)
        self.cells: list[Cell] = []
        self.nets: list[str] = []
        self._net_set: set[str] = set()
        self._structural: dict[tuple, str] = {}
        self._renames: dict[str, str] = {}
        self._tmp = 0

    def add_net(self, name: str):
        if name not in self._net_set:
            self._net_set.add(name)
            self.nets.append(name)

    def fresh_net(self) -> str:
        self._tmp += 1
        name = f"$n{self._tmp}"
        self.add_net(name)
        return name

    def cell(self, kind: str, op: str, width: int, inputs: tuple[str, ...]) -> str:
        """Create (or reuse, via structural hashing) a cell; returns its net."""
        key = (kind, op, width, inputs)
        if key in self._structural:
            return self._structural[key]
        out = self.fresh_net()
        self.cells.append(Cell(kind, op, width, inputs, out))
        self._structural[key] = out
        return out

    def alias(self, target: str, net: str):
        """Merge an anonymous cell-output net into the named target net."""
        if net.startswith("$n") and net not in self._renames:
            self._renames[net] = target

    def lower_expr(self, expr: Expr) -> str:
        if isinstance(expr, Const):
            return f"$c{expr.value}"
        if isinstance(expr, Ref):
            if self.wenv.is_param(expr.name):
                return f"$c{self.wenv.params[expr.name]}"
            self.add_net(expr.name)
            return expr.name
        if isinstance(expr, Select):
            return self.lower_expr(expr.base)  # wiring, not a cell
        if isinstance(expr, Unary):
            inner = self.lower_expr(expr.operand)
            w = self.wenv.expr_width(expr)
            kind = {"-": "neg", "!": "logic", "~": "not"}[expr.op]
            return self.cell(kind, expr.op, w, (inner,))
        if isinstance(expr, Binary):
            a = self.lower_expr(expr.lhs)
            b = self.lower_expr(expr.rhs)
            w = self.wenv.expr_width(expr)
            return self.cell(_KIND_OF_OP[expr.op], expr.op, w, (a, b))
        if isinstance(expr, Ternary):
            c = self.lower_expr(expr.cond)
            t = self.lower_expr(expr.then)
            e = self.lower_expr(expr.orelse)
            w = self.wenv.expr_width(expr)
            return self.cell("mux", "mux", w, (c, t, e))
        raise TypeError(f"cannot lower {type(expr).__name__}")

    def _target_width(self, name: str) -> int:
        if name in self.wenv.signal_widths:
            return self.wenv.width_of(name)
        return 1

    def lower_stmts(self, body: tuple[Stmt, ...], env: dict[str, str]):
        """Lower statements to mux trees; env maps target -> current net."""
        for stmt in body:
            if isinstance(stmt, (BlockingAssign, NonblockingAssign)):
                env[stmt.target] = self.lower_expr(stmt.rhs)
            elif isinstance(stmt, If):
                c = self.lower_expr(stmt.cond)
                then_env = dict(env)
                self.lower_stmts(stmt.then_body, then_env)
                else_env = dict(env)
                self.lower_stmts(stmt.else_body, else_env)
                for t in sorted(env):
                    a, b = then_env[t], else_env[t]
                    env[t] = (
                        a
                        if a == b
                        else self.cell("mux", "mux", self._target_width(t), (c, a, b))
                    )
            elif isinstance(stmt, Case):
                subj = self.lower_expr(stmt.subject)
                acc = dict(env)
                if stmt.default is not None:
                    self.lower_stmts(stmt.default, acc)
                for arm in reversed(stmt.arms):
                    arm_env = dict(env)
                    self.lower_stmts(arm.body, arm_env)
                    labels = tuple(self.lower_expr(l) for l in arm.labels)
                    sel = self.cell("cmp", "==", 1, (subj,) + labels)
                    merged = {}
                    for t in sorted(env):
                        a, b = arm_env[t], acc[t]
                        merged[t] = (
                            a
                            if a == b
                            else self.cell(
                                "mux", "mux", self._target_width(t), (sel, a, b)
                            )
                        )
                    acc = merged
                env.update(acc)
            else:
                raise TypeError(f"cannot lower {type(stmt).__name__}")

    def run(self) -> Netlist:
        for p in self.design.ports:
            self.add_net(p.name)
        for d in self.design.decls:
            self.add_net(d.name)
        for item in self.design.items:
            if isinstance(item, ContinuousAssign):
                root = self.lower_expr(item.rhs)
                self.alias(item.target, root)
            elif isinstance(item, AlwaysBlock):
                targets = sorted(stmt_targets(item.body))
                env: dict[str, str] = {t: t for t in targets}
                self.lower_stmts(item.body, env)
                if item.sensitivity.is_clocked():
                    for t in targets:
                        self.cells.append(
                            Cell("register", "register", self.wenv.width_of(t), (env[t],), t)
                        )
                else:
                    for t in targets:
                        self.alias(t, env[t])

        ren = self._renames.get
        nets, seen = [], set()
        for n in self.nets:
            name = ren(n, n)
            if name not in seen and not name.startswith("$c"):
                seen.add(name)
                nets.append(name)
        cells = tuple(
            Cell(
                c.kind,
                c.op,
                c.width,
                tuple(ren(i, i) for i in c.inputs),
                ren(c.output, c.output),
            )
            for c in self.cells
        )
        return Netlist(tuple(nets), cells)


def lower(design: Design) -> Netlist:
    """Lower a validated design to a primitive netlist."""
    require_valid(design)
    return _Lowerer(design).run()


def _depth(netlist: Netlist) -> int:
    producer = {c.output: c for c in netlist.cells if c.kind != "register"}
    memo: dict[str, int] = {}

    def depth_of(net: str) -> int:
        if net not in producer:
            return 0
        if net in memo:
            return memo[net]
        memo[net] = 0  # cycle guard; validated designs are acyclic
        c = producer[net]
        d = 1 + max((depth_of(i) for i in c.inputs), default=0)
        memo[net] = d
        return d

    best = 0
    for c in netlist.cells:
        if c.kind == "register":
            best = max(best, depth_of(c.inputs[0]))
        else:
            best = max(best, depth_of(c.output))
    return best


def cost(design: Design) -> CostReport:
    """Compute the CostReport of a validated design."""
    netlist = lower(design)
    histogram: dict[str, int] = {}
    area = 0
    for c in netlist.cells:
        histogram[c.kind] = histogram.get(c.kind, 0) + 1
        area += _area_weight(c.kind, c.width)
    return CostReport(
        wires=len(netlist.nets),
        cells=len(netlist.cells),
        area_proxy=area,
        depth=_depth(netlist),
        histogram=histogram,
    )


def register_bits(design: Design) -> int:
    """Total width of register cells; shrinks when FSM state is re-encoded."""
    return sum(c.width for c in lower(design).cells if c.kind == "register")
