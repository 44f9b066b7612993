"""Symbolic execution of always-block bodies.

Turns a statement list into one expression per assigned target (a mux
tree built from ternaries). Two modes:

* ``comb``: blocking semantics; reads of a block target substitute the
  value assigned so far. Targets that are read before any assignment or
  left unassigned on some path surface as :data:`UNASSIGNED` leaves,
  which the validator reports (the subset requires combinational blocks
  to fully define their outputs).
* ``clocked``: nonblocking semantics; every reference means the pre-edge
  value, and a target that is not assigned on some path keeps its old
  value (``env`` starts at ``Ref(target)``).
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import (
    Binary,
    BlockingAssign,
    Case,
    Const,
    Expr,
    If,
    NonblockingAssign,
    Ref,
    Select,
    Stmt,
    Ternary,
    Unary,
    stmt_targets,
    walk_exprs,
)


@dataclass(frozen=True)
class UnassignedMarker(Expr):
    """Placeholder for 'no value assigned on this path'."""


UNASSIGNED = UnassignedMarker()


class SymExecError(Exception):
    def __init__(self, message, span=None):
        self.span = span
        super().__init__(message)


def _subst(expr: Expr, env: dict[str, Expr], substitute: bool) -> Expr:
    if not substitute:
        return expr
    if isinstance(expr, Ref):
        if expr.name in env:
            value = env[expr.name]
            if value is UNASSIGNED:
                raise SymExecError(
                    f"{expr.name!r} read before assignment in combinational block",
                    expr.span,
                )
            return value
        return expr
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Unary):
        return Unary(expr.op, _subst(expr.operand, env, substitute), span=expr.span)
    if isinstance(expr, Binary):
        return Binary(
            expr.op,
            _subst(expr.lhs, env, substitute),
            _subst(expr.rhs, env, substitute),
            span=expr.span,
        )
    if isinstance(expr, Ternary):
        return Ternary(
            _subst(expr.cond, env, substitute),
            _subst(expr.then, env, substitute),
            _subst(expr.orelse, env, substitute),
            span=expr.span,
        )
    if isinstance(expr, Select):
        # Select bases are plain identifiers; substituting the base would
        # produce an unrepresentable tree, so selects of block targets are
        # rejected upstream.
        if expr.base.name in env:
            raise SymExecError(
                f"select of block target {expr.base.name!r} is not supported",
                expr.span,
            )
        return expr
    raise SymExecError(f"unsupported expression {type(expr).__name__}")


def _merge(cond: Expr, then_env, else_env, targets) -> dict[str, Expr]:
    merged = {}
    for t in targets:
        a, b = then_env[t], else_env[t]
        if a is b:
            merged[t] = a
        elif a == b and a is not UNASSIGNED:
            merged[t] = a
        else:
            merged[t] = Ternary(cond, a, b)
    return merged


def _exec_body(body: tuple[Stmt, ...], env: dict[str, Expr], mode: str):
    substitute = mode == "comb"
    for stmt in body:
        if isinstance(stmt, (BlockingAssign, NonblockingAssign)):
            env[stmt.target] = _subst(stmt.rhs, env, substitute)
        elif isinstance(stmt, If):
            cond = _subst(stmt.cond, env, substitute)
            then_env = dict(env)
            _exec_body(stmt.then_body, then_env, mode)
            else_env = dict(env)
            _exec_body(stmt.else_body, else_env, mode)
            env.update(_merge(cond, then_env, else_env, env.keys()))
        elif isinstance(stmt, Case):
            subject = _subst(stmt.subject, env, substitute)
            if stmt.default is not None:
                acc = dict(env)
                _exec_body(stmt.default, acc, mode)
            else:
                acc = dict(env)
            for arm in reversed(stmt.arms):
                arm_env = dict(env)
                _exec_body(arm.body, arm_env, mode)
                cond = None
                for label in arm.labels:
                    eq = Binary("==", subject, _subst(label, env, substitute))
                    cond = eq if cond is None else Binary("||", cond, eq)
                acc = _merge(cond, arm_env, acc, env.keys())
            env.update(acc)
        else:
            raise SymExecError(f"unsupported statement {type(stmt).__name__}")


def exec_block(body: tuple[Stmt, ...], mode: str) -> dict[str, Expr]:
    """Return the symbolic value of each target assigned by ``body``.

    ``mode`` is ``comb`` or ``clocked``; see the module docstring.
    """
    targets = sorted(stmt_targets(body))
    if mode == "comb":
        env: dict[str, Expr] = {t: UNASSIGNED for t in targets}
    else:
        env = {t: Ref(t) for t in targets}
    _exec_body(body, env, mode)
    return {t: env[t] for t in targets}


def has_unassigned(expr: Expr) -> bool:
    return any(isinstance(e, UnassignedMarker) for e in walk_exprs(expr))
