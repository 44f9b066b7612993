"""Design validation.

``validate`` returns a list of diagnostics and never raises; a design is
usable by the simulator and rewriters iff it produces no error-severity
entries. The checks enforce both general well-formedness (declarations,
single drivers, select bounds) and the subset restrictions that keep
two-valued simulation total (blocking/nonblocking discipline, fully
assigned combinational blocks).
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import (
    AlwaysBlock,
    Case,
    ContinuousAssign,
    Design,
    NonblockingAssign,
    BlockingAssign,
    NO_SPAN,
    Ref,
    Select,
    SourceSpan,
    stmt_targets,
    walk_exprs,
    walk_stmts,
)
from .semantics import ConstEvalError, WidthEnv, const_value, parameter_env
from . import symexec


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    message: str
    span: SourceSpan = NO_SPAN

    def __str__(self):
        return (
            f"{self.span.file}:{self.span.line_start}:{self.span.col_start}: "
            f"{self.severity}: {self.message}"
        )


def validate(design: Design) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    err = lambda msg, span=NO_SPAN: diags.append(Diagnostic("error", msg, span))
    warn = lambda msg, span=NO_SPAN: diags.append(Diagnostic("warning", msg, span))

    # Parameters must resolve in declaration order.
    try:
        params = parameter_env(design)
    except (ConstEvalError, Exception) as e:  # noqa: BLE001 - report, don't raise
        err(f"parameter resolution failed: {e}", design.span)
        return diags

    # Duplicate names and port direction uniqueness.
    seen: dict[str, str] = {}
    for p in design.parameters:
        if p.name in seen:
            err(f"duplicate declaration of {p.name!r}", p.span)
        seen[p.name] = "parameter"
    port_dirs: dict[str, str] = {}
    for p in design.ports:
        if p.name in port_dirs and port_dirs[p.name] != p.direction:
            err(f"port {p.name!r} declared with two directions", p.span)
        if p.name in seen:
            err(f"duplicate declaration of {p.name!r}", p.span)
        seen[p.name] = "port"
        port_dirs[p.name] = p.direction
    for d in design.decls:
        if d.name in seen:
            err(f"duplicate declaration of {d.name!r}", d.span)
        seen[d.name] = "decl"
        if d.implicit:
            warn(f"implicitly declared net {d.name!r} (1-bit wire)", d.span)

    if any(d.severity == "error" for d in diags):
        return diags

    try:
        env = WidthEnv(design)
    except Exception as e:  # noqa: BLE001
        err(f"width resolution failed: {e}", design.span)
        return diags

    kinds: dict[str, str] = {}
    for p in design.ports:
        kinds[p.name] = p.kind
    for d in design.decls:
        kinds[d.name] = d.kind

    declared = set(seen)

    # References must resolve; selects must be in range.
    for expr in walk_exprs(design):
        if isinstance(expr, Ref) and expr.name not in declared:
            err(f"reference to undeclared identifier {expr.name!r}", expr.span)
        if isinstance(expr, Select):
            if expr.base.name not in declared:
                continue
            if env.is_param(expr.base.name):
                err(f"select of parameter {expr.base.name!r}", expr.span)
                continue
            try:
                hi = const_value(expr.msb, env.params)
                lo = const_value(expr.lsb, env.params)
            except ConstEvalError:
                err("select bounds must be constant", expr.span)
                continue
            if lo > hi:
                err(f"select range [{hi}:{lo}] is reversed", expr.span)
                continue
            base_w = env.width_of(expr.base.name)
            if hi >= base_w or lo < 0:
                err(
                    f"select [{hi}:{lo}] out of range for "
                    f"{expr.base.name!r} (width {base_w})",
                    expr.span,
                )

    # Single driver per signal; direction and kind discipline.
    drivers: dict[str, list] = {}
    for item in design.items:
        if isinstance(item, ContinuousAssign):
            drivers.setdefault(item.target, []).append(item)
            if item.target in port_dirs and port_dirs[item.target] == "input":
                err(f"continuous assign drives input port {item.target!r}", item.span)
            if kinds.get(item.target) == "reg":
                err(
                    f"continuous assign target {item.target!r} is a reg",
                    item.span,
                )
        elif isinstance(item, AlwaysBlock):
            for t in sorted(stmt_targets(item.body)):
                drivers.setdefault(t, []).append(item)
                if t in port_dirs and port_dirs[t] == "input":
                    err(f"always block drives input port {t!r}", item.span)
                if t not in declared:
                    err(f"assignment to undeclared identifier {t!r}", item.span)
                elif kinds.get(t) != "reg":
                    err(f"always-block target {t!r} must be a reg", item.span)
    for name, items in sorted(drivers.items()):
        if len(items) > 1:
            err(f"{name!r} is driven by {len(items)} items", items[1].span)

    # Blocking/nonblocking discipline and case-label constness.
    for item in design.items:
        if not isinstance(item, AlwaysBlock):
            continue
        clocked = item.sensitivity.is_clocked()
        for stmt in walk_stmts(item.body):
            if clocked and isinstance(stmt, BlockingAssign):
                err("blocking assign inside clocked block", stmt.span)
            if not clocked and isinstance(stmt, NonblockingAssign):
                err("nonblocking assign inside combinational block", stmt.span)
            if isinstance(stmt, Case):
                for arm in stmt.arms:
                    for label in arm.labels:
                        try:
                            const_value(label, env.params)
                        except ConstEvalError:
                            err("case label must be constant", arm.span)

    if any(d.severity == "error" for d in diags):
        return diags

    # Combinational blocks must fully assign their targets.
    for item in design.items:
        if not isinstance(item, AlwaysBlock) or item.sensitivity.is_clocked():
            continue
        try:
            values = symexec.exec_block(item.body, "comb")
        except symexec.SymExecError as e:
            err(str(e), e.span or item.span)
            continue
        for target, expr in sorted(values.items()):
            if symexec.has_unassigned(expr):
                err(
                    f"{target!r} is not assigned on every path of its "
                    "combinational block",
                    item.span,
                )

    return diags


def is_valid(design: Design) -> bool:
    return not any(d.severity == "error" for d in validate(design))
