"""Width rules and parameter resolution.

The width system is deliberately simple and total (see GRAMMAR.md):

* sized constants have their stated width, unsized constants are
  self-determined (``max(bit_length, 1)``) and zero-extend,
* a reference has its declared width,
* ``+ - * / % & | ^`` yield ``max(width(lhs), width(rhs))``,
* shifts yield the width of their left operand,
* comparisons and ``&& || !`` yield width 1,
* a ternary yields ``max`` of its branch widths,
* a select yields ``msb - lsb + 1``.

Every node's value is reduced modulo ``2**width(node)``; assignments
truncate or zero-extend to the target width. Division and modulo by zero
are defined to be 0.
"""

from __future__ import annotations

from .errors import DesignInvalid, SymrtloError
from .nodes import (
    Binary,
    Const,
    Design,
    Expr,
    Ref,
    Select,
    Ternary,
    Unary,
)

COMPARISON_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGICAL_OPS = ("&&", "||")
SHIFT_OPS = ("<<", ">>")


class ConstEvalError(SymrtloError):
    pass


def const_value(expr: Expr, params: dict[str, int]) -> int:
    """Evaluate an expression that must be constant given parameter bindings."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Ref):
        if expr.name in params:
            return params[expr.name]
        raise ConstEvalError(f"{expr.name!r} is not a constant")
    if isinstance(expr, Unary):
        v = const_value(expr.operand, params)
        if expr.op == "-":
            return -v
        if expr.op == "!":
            return int(v == 0)
        if expr.op == "~":
            raise ConstEvalError("'~' needs a width context; not allowed here")
    if isinstance(expr, Binary):
        a = const_value(expr.lhs, params)
        b = const_value(expr.rhs, params)
        if expr.op in SHIFT_OPS and not 0 <= b <= 4096:
            raise ConstEvalError("shift amount out of constant-evaluation range")
        table = {
            "+": lambda: a + b,
            "-": lambda: a - b,
            "*": lambda: a * b,
            "/": lambda: a // b if b else 0,
            "%": lambda: a % b if b else 0,
            "<<": lambda: a << b,
            ">>": lambda: a >> b,
            "&": lambda: a & b,
            "|": lambda: a | b,
            "^": lambda: a ^ b,
            "==": lambda: int(a == b),
            "!=": lambda: int(a != b),
            "<": lambda: int(a < b),
            "<=": lambda: int(a <= b),
            ">": lambda: int(a > b),
            ">=": lambda: int(a >= b),
            "&&": lambda: int(bool(a) and bool(b)),
            "||": lambda: int(bool(a) or bool(b)),
        }
        return table[expr.op]()
    if isinstance(expr, Ternary):
        return (
            const_value(expr.then, params)
            if const_value(expr.cond, params)
            else const_value(expr.orelse, params)
        )
    raise ConstEvalError(f"not a constant expression: {type(expr).__name__}")


def parameter_env(design: Design, overrides: dict[str, int] | None = None) -> dict[str, int]:
    """Resolve parameters in declaration order; later ones may use earlier."""
    env: dict[str, int] = {}
    overrides = overrides or {}
    for p in design.parameters:
        if p.name in overrides:
            env[p.name] = overrides[p.name]
        else:
            env[p.name] = const_value(p.value, env)
    unknown = set(overrides) - {p.name for p in design.parameters}
    if unknown:
        raise SymrtloError(f"unknown parameter override(s): {sorted(unknown)}")
    return env


def structural_const_width(expr: Expr, params: dict[str, int]) -> int | None:
    """Width of a constant-only tree under the structural max rules."""
    if isinstance(expr, Const):
        if expr.width is not None:
            return expr.width
        return max(expr.value.bit_length(), 1)
    if isinstance(expr, Ref):
        if expr.name in params:
            return max(params[expr.name].bit_length(), 1)
        return None
    if isinstance(expr, Unary):
        if expr.op == "!":
            return 1
        return structural_const_width(expr.operand, params)
    if isinstance(expr, Binary):
        if expr.op in COMPARISON_OPS or expr.op in LOGICAL_OPS:
            return 1
        if expr.op in SHIFT_OPS:
            return structural_const_width(expr.lhs, params)
        a = structural_const_width(expr.lhs, params)
        b = structural_const_width(expr.rhs, params)
        if a is None or b is None:
            return None
        return max(a, b)
    if isinstance(expr, Ternary):
        a = structural_const_width(expr.then, params)
        b = structural_const_width(expr.orelse, params)
        if a is None or b is None:
            return None
        return max(a, b)
    return None


def const_subtree_value_width(expr: Expr, params: dict[str, int]) -> tuple[int, int] | None:
    """(masked value, width) of a constant-only non-leaf subtree.

    Constant-only subexpressions are self-determined: full-precision
    arithmetic, width = bit length of the result, so `(2 + 3) * a`
    means `5 * a`. Negative results keep the structural width and wrap.
    Returns None for non-constant or oversized trees.
    """
    if not isinstance(expr, (Unary, Binary, Ternary)):
        return None
    try:
        v = const_value(expr, params)
    except ConstEvalError:
        return None
    if abs(v) >= (1 << 64):
        return None
    if v >= 0:
        return v, max(v.bit_length(), 1)
    w = structural_const_width(expr, params)
    if w is None or w > 64:
        return None
    return v & mask(w), w


def range_width(msb, lsb, params: dict[str, int]) -> int:
    if msb is None:
        return 1
    hi = const_value(msb, params)
    lo = const_value(lsb, params)
    if lo > hi:
        raise ConstEvalError(f"descending range [{hi}:{lo}] required, got reversed")
    return hi - lo + 1


class WidthEnv:
    """Signal- and parameter-width lookup for one design instance."""

    def __init__(self, design: Design, overrides: dict[str, int] | None = None):
        self.design = design
        self.params = parameter_env(design, overrides)
        self.signal_widths: dict[str, int] = {}
        for p in design.ports:
            self.signal_widths[p.name] = range_width(p.msb, p.lsb, self.params)
        for d in design.decls:
            self.signal_widths[d.name] = range_width(d.msb, d.lsb, self.params)
        self._width_memo: dict[int, tuple] = {}

    def width_of(self, name: str) -> int:
        if name in self.signal_widths:
            return self.signal_widths[name]
        if name in self.params:
            return max(self.params[name].bit_length(), 1)
        raise SymrtloError(f"unknown identifier {name!r}")

    def is_param(self, name: str) -> bool:
        return name in self.params

    def const_only_value(self, expr: Expr) -> int | None:
        """Masked value of a constant-only non-leaf subtree, or None."""
        r = const_subtree_value_width(expr, self.params)
        return r[0] if r is not None else None

    def expr_width(self, expr: Expr) -> int:
        # memo keeps the node alive so recycled ids cannot alias
        key = id(expr)
        cached = self._width_memo.get(key)
        if cached is not None and cached[0] is expr:
            return cached[1]
        w = self._expr_width(expr)
        self._width_memo[key] = (expr, w)
        return w

    def _expr_width(self, expr: Expr) -> int:
        if isinstance(expr, Const):
            if expr.width is not None:
                return expr.width
            return max(expr.value.bit_length(), 1)
        if isinstance(expr, Ref):
            return self.width_of(expr.name)
        r = const_subtree_value_width(expr, self.params)
        if r is not None:
            return r[1]
        if isinstance(expr, Unary):
            if expr.op == "!":
                return 1
            return self.expr_width(expr.operand)
        if isinstance(expr, Binary):
            if expr.op in COMPARISON_OPS or expr.op in LOGICAL_OPS:
                return 1
            if expr.op in SHIFT_OPS:
                return self.expr_width(expr.lhs)
            return max(self.expr_width(expr.lhs), self.expr_width(expr.rhs))
        if isinstance(expr, Ternary):
            return max(self.expr_width(expr.then), self.expr_width(expr.orelse))
        if isinstance(expr, Select):
            hi = const_value(expr.msb, self.params)
            lo = const_value(expr.lsb, self.params)
            return hi - lo + 1
        raise SymrtloError(f"unknown expression node {type(expr).__name__}")


def mask(width: int) -> int:
    return (1 << width) - 1


def set_parameters(design: Design, overrides: dict[str, int]) -> Design:
    """Return a copy of the design with parameter values replaced."""
    from dataclasses import replace

    env = parameter_env(design, overrides)
    new_params = tuple(
        replace(p, value=Const(env[p.name])) if p.name in overrides else p
        for p in design.parameters
    )
    return replace(design, parameters=new_params)


def require_valid(design: Design) -> None:
    """Raise DesignInvalid if the design has error-severity diagnostics."""
    from .validation import validate

    errors = [d for d in validate(design) if d.severity == "error"]
    if errors:
        raise DesignInvalid(errors)
