"""Bit-blasting designs into CNF.

Expressions become gate networks over solver literals (LSB-first bit
vectors) via Tseitin encoding: ripple-carry add/sub, shift-and-add
multiply, restoring divide (with the divisor==0 => 0 convention of
GRAMMAR.md), ripple comparators and barrel shifters. Gates are cached
structurally, so blasting two designs with one blaster shares every
identical subcircuit; a miter over structurally equal outputs collapses
at propagation.
"""

from __future__ import annotations

from .errors import UnsupportedForBlasting
from .nodes import (
    AlwaysBlock,
    Binary,
    Const,
    ContinuousAssign,
    Design,
    Expr,
    Ref,
    Select,
    Ternary,
    Unary,
)
from .sat import Solver
from .semantics import WidthEnv, const_value
from .sim import topo_comb_order
from . import symexec


class Blaster:
    """CNF builder with structural gate caching. Literal 1 is constant
    true (asserted as a unit clause)."""

    def __init__(self):
        self.solver = Solver()
        self.TRUE = self.solver.new_var()
        self.solver.add_clause([self.TRUE])
        self.FALSE = -self.TRUE
        self._cache: dict[tuple, int] = {}

    def new_lit(self) -> int:
        return self.solver.new_var()

    # -- gates ----------------------------------------------------------

    def and2(self, a: int, b: int) -> int:
        if a == self.FALSE or b == self.FALSE or a == -b:
            return self.FALSE
        if a == self.TRUE:
            return b
        if b == self.TRUE or a == b:
            return a
        key = ("and",) + tuple(sorted((a, b)))
        if key in self._cache:
            return self._cache[key]
        o = self.new_lit()
        self.solver.add_clause([-a, -b, o])
        self.solver.add_clause([a, -o])
        self.solver.add_clause([b, -o])
        self._cache[key] = o
        return o

    def or2(self, a: int, b: int) -> int:
        return -self.and2(-a, -b)

    def xor2(self, a: int, b: int) -> int:
        if a == self.FALSE:
            return b
        if b == self.FALSE:
            return a
        if a == self.TRUE:
            return -b
        if b == self.TRUE:
            return -a
        if a == b:
            return self.FALSE
        if a == -b:
            return self.TRUE
        # normalize polarity: cache on (min-var-positive) form
        negate = False
        if a < 0:
            a = -a
            negate = not negate
        if b < 0:
            b = -b
            negate = not negate
        a, b = sorted((a, b))
        key = ("xor", a, b)
        if key in self._cache:
            o = self._cache[key]
        else:
            o = self.new_lit()
            self.solver.add_clause([-a, -b, -o])
            self.solver.add_clause([a, b, -o])
            self.solver.add_clause([a, -b, o])
            self.solver.add_clause([-a, b, o])
            self._cache[key] = o
        return -o if negate else o

    def mux(self, s: int, t: int, e: int) -> int:
        """s ? t : e"""
        if s == self.TRUE:
            return t
        if s == self.FALSE:
            return e
        if t == e:
            return t
        return self.or2(self.and2(s, t), self.and2(-s, e))

    def maj(self, a: int, b: int, c: int) -> int:
        return self.or2(self.and2(a, b), self.or2(self.and2(a, c), self.and2(b, c)))

    def any_of(self, bits: list[int]) -> int:
        acc = self.FALSE
        for b in bits:
            acc = self.or2(acc, b)
        return acc

    # -- vectors (LSB first) ---------------------------------------------

    def const_vec(self, value: int, width: int) -> list[int]:
        return [self.TRUE if (value >> i) & 1 else self.FALSE for i in range(width)]

    def input_vec(self, width: int) -> list[int]:
        return [self.new_lit() for _ in range(width)]

    def extend(self, vec: list[int], width: int) -> list[int]:
        if len(vec) >= width:
            return vec[:width]
        return vec + [self.FALSE] * (width - len(vec))

    def add_vec(self, a: list[int], b: list[int]) -> list[int]:
        assert len(a) == len(b)
        out = []
        carry = self.FALSE
        for x, y in zip(a, b):
            out.append(self.xor2(self.xor2(x, y), carry))
            carry = self.maj(x, y, carry)
        return out

    def neg_vec(self, a: list[int]) -> list[int]:
        return self.add_vec([-x for x in a], self.const_vec(1, len(a)))

    def sub_vec(self, a: list[int], b: list[int]) -> list[int]:
        out = []
        borrow = self.FALSE
        for x, y in zip(a, b):
            out.append(self.xor2(self.xor2(x, y), borrow))
            # borrow' = (~x & y) | (~(x ^ y) & borrow)
            borrow = self.or2(
                self.and2(-x, y), self.and2(-self.xor2(x, y), borrow)
            )
        return out

    def mul_vec(self, a: list[int], b: list[int]) -> list[int]:
        w = len(a)
        acc = self.const_vec(0, w)
        for i in range(w):
            partial = [
                self.and2(b[i], a[j - i]) if j >= i else self.FALSE for j in range(w)
            ]
            acc = self.add_vec(acc, partial)
        return acc

    def ult_vec(self, a: list[int], b: list[int]) -> int:
        """unsigned a < b"""
        lt = self.FALSE
        for x, y in zip(a, b):  # LSB to MSB; later bits dominate
            lt = self.mux(self.xor2(x, y), self.and2(-x, y), lt)
        return lt

    def eq_vec(self, a: list[int], b: list[int]) -> int:
        acc = self.TRUE
        for x, y in zip(a, b):
            acc = self.and2(acc, -self.xor2(x, y))
        return acc

    def divmod_vec(self, a: list[int], b: list[int]) -> tuple[list[int], list[int]]:
        """Restoring division; divisor == 0 yields quotient 0, remainder 0."""
        w = len(a)
        wide = w + 1  # shifted remainder needs one extra bit before compare
        bx = self.extend(b, wide)
        quotient = [self.FALSE] * w
        remainder = self.const_vec(0, wide)
        for i in range(w - 1, -1, -1):
            remainder = [a[i]] + remainder[: wide - 1]
            geq = -self.ult_vec(remainder, bx)
            diff = self.sub_vec(remainder, bx)
            remainder = [self.mux(geq, d, r) for d, r in zip(diff, remainder)]
            quotient[i] = geq
        zero = self.eq_vec(b, self.const_vec(0, w))
        quotient = [self.and2(-zero, q) for q in quotient]
        remainder = [self.and2(-zero, r) for r in remainder[:w]]
        return quotient, remainder

    def shift_vec(self, a: list[int], amount: list[int], left: bool) -> list[int]:
        w = len(a)
        stages = max((w - 1).bit_length(), 1)
        vec = list(a)
        for s in range(min(stages, len(amount))):
            k = 1 << s
            if left:
                shifted = [self.FALSE] * min(k, w) + vec[: max(w - k, 0)]
            else:
                shifted = vec[k:] + [self.FALSE] * min(k, w)
            vec = [self.mux(amount[s], sh, v) for sh, v in zip(shifted, vec)]
        overflow = self.any_of(amount[min(stages, len(amount)):])
        return [self.and2(-overflow, v) for v in vec]


_LINEAR_TERM_CAP = 64


class DesignBlaster:
    """Blasts one design's combinational logic into a shared Blaster.

    Width-homogeneous +,-,* regions are normalized into a canonical
    linear combination of blasted atoms before gates are emitted
    (distribution over sums, commutative sorting, coefficients mod 2^W).
    Equivalent arithmetic therefore produces literally identical
    literals across designs sharing one blaster, and the remaining
    search burden falls on genuinely non-linear differences.
    """

    def __init__(self, blaster: Blaster, design: Design, input_vars: dict[str, list[int]]):
        self.b = blaster
        self.design = design
        self.wenv = WidthEnv(design)
        self.signals: dict[str, list[int]] = dict(input_vars)
        # linear form of each driven signal (same width as the signal),
        # substituted when the signal appears inside another linear region
        self.signal_forms: dict[str, tuple[int, dict[tuple, int]]] = {}

    def run(self) -> dict[str, list[int]]:
        """Evaluate all drivers in topological order; returns output vecs."""
        driven: set[str] = set()
        for item in self.design.items:
            if isinstance(item, ContinuousAssign):
                driven.add(item.target)
            elif isinstance(item, AlwaysBlock):
                driven.update(symexec.exec_block(item.body, "comb").keys())
        for d in self.design.decls:
            if d.name not in driven and d.name not in self.signals:
                self.signals[d.name] = self.b.const_vec(0, self.wenv.width_of(d.name))
        for node in topo_comb_order(self.design, self.wenv):
            if isinstance(node, ContinuousAssign):
                w = self.wenv.width_of(node.target)
                form = None
                if self.wenv.expr_width(node.rhs) == w:
                    form = self._linear_form(node.rhs, w)
                if form is not None:
                    self.signals[node.target] = self._emit_linear(form, w)
                    self.signal_forms[node.target] = (w, form)
                else:
                    self.signals[node.target] = self.b.extend(self.blast(node.rhs), w)
            else:
                values = symexec.exec_block(node.body, "comb")
                for target in sorted(values):
                    w = self.wenv.width_of(target)
                    self.signals[target] = self.b.extend(self.blast(values[target]), w)
        outs = {}
        for p in self.design.output_ports():
            w = self.wenv.width_of(p.name)
            vec = self.signals.get(p.name)
            outs[p.name] = self.b.extend(vec if vec is not None else [], w)
        return outs

    def bool_of(self, vec: list[int]) -> int:
        return self.b.any_of(vec)

    # -- word-level linear normalization ----------------------------------

    def _is_linear_node(self, expr: Expr, width: int) -> bool:
        if isinstance(expr, Unary) and expr.op == "-":
            return self.wenv.expr_width(expr) == width
        if isinstance(expr, Binary) and expr.op in ("+", "-", "*"):
            return self.wenv.expr_width(expr) == width
        return False

    def _linear_form(self, expr: Expr, width: int) -> dict[tuple, int] | None:
        """Map from sorted atom-vector tuples to coefficients mod 2^width;
        the empty tuple keys the constant term. None when the distributed
        form would exceed the term cap."""
        m = 1 << width

        def atom(e: Expr) -> dict[tuple, int]:
            vec = tuple(self.b.extend(self.blast(e), width))
            return {(vec,): 1}

        def combine_add(x, y, negate_y: bool):
            out = dict(x)
            for k, c in y.items():
                c = (-c if negate_y else c) % m
                out[k] = (out.get(k, 0) + c) % m
                if out[k] == 0:
                    del out[k]
            return out

        def rec(e: Expr) -> dict[tuple, int] | None:
            if isinstance(e, Const):
                v = e.value % m
                return {(): v} if v else {}
            if isinstance(e, Ref) and self.wenv.is_param(e.name):
                v = self.wenv.params[e.name] % m
                return {(): v} if v else {}
            if not isinstance(e, Ref):
                cv = self.wenv.const_only_value(e)
                if cv is not None:
                    v = cv % m
                    return {(): v} if v else {}
            if isinstance(e, Ref):
                recorded = self.signal_forms.get(e.name)
                if recorded is not None and recorded[0] == width and len(recorded[1]) <= 16:
                    return dict(recorded[1])
                return atom(e)
            if isinstance(e, Unary) and e.op == "-" and self.wenv.expr_width(e) == width:
                inner = rec(e.operand)
                if inner is None:
                    return None
                return {k: (-c) % m for k, c in inner.items()}
            if isinstance(e, Binary) and e.op in ("+", "-") and self.wenv.expr_width(e) == width:
                lhs = rec(e.lhs)
                rhs = rec(e.rhs)
                if lhs is None or rhs is None:
                    return None
                return combine_add(lhs, rhs, negate_y=(e.op == "-"))
            if isinstance(e, Binary) and e.op == "*" and self.wenv.expr_width(e) == width:
                lhs = rec(e.lhs)
                rhs = rec(e.rhs)
                if lhs is None or rhs is None:
                    return None
                if len(lhs) * len(rhs) > _LINEAR_TERM_CAP:
                    return None
                out: dict[tuple, int] = {}
                for ka, ca in lhs.items():
                    for kb, cb in rhs.items():
                        k = tuple(sorted(ka + kb))
                        out[k] = (out.get(k, 0) + ca * cb) % m
                        if out[k] == 0:
                            del out[k]
                if len(out) > _LINEAR_TERM_CAP:
                    return None
                return out
            return atom(e)

        return rec(expr)

    def _emit_linear(self, form: dict[tuple, int], width: int) -> list[int]:
        b = self.b
        m = 1 << width
        acc = b.const_vec(0, width)
        for key in sorted(form):
            coeff = form[key] % m
            if coeff == 0:
                continue
            if key == ():
                term = b.const_vec(coeff, width)
            else:
                prod = list(key[0])
                for vec in key[1:]:
                    prod = b.mul_vec(prod, list(vec))
                if coeff == 1:
                    term = prod
                elif coeff == m - 1:
                    term = b.neg_vec(prod)
                else:
                    term = b.mul_vec(prod, b.const_vec(coeff, width))
            acc = b.add_vec(acc, term)
        return acc

    def blast(self, expr: Expr) -> list[int]:
        b = self.b
        wenv = self.wenv
        w = wenv.expr_width(expr)
        cv = wenv.const_only_value(expr)
        if cv is not None:
            return b.const_vec(cv, w)
        if self._is_linear_node(expr, w):
            form = self._linear_form(expr, w)
            if form is not None:
                return self._emit_linear(form, w)
        if isinstance(expr, Const):
            return b.const_vec(expr.value, w)
        if isinstance(expr, Ref):
            if wenv.is_param(expr.name):
                return b.const_vec(wenv.params[expr.name], w)
            if expr.name not in self.signals:
                raise UnsupportedForBlasting(f"unresolved signal {expr.name!r}")
            return b.extend(self.signals[expr.name], w)
        if isinstance(expr, Select):
            base = self.blast(expr.base)
            hi = const_value(expr.msb, wenv.params)
            lo = const_value(expr.lsb, wenv.params)
            return base[lo : hi + 1]
        if isinstance(expr, Unary):
            if expr.op == "!":
                return [-self.bool_of(self.blast(expr.operand))]
            vec = b.extend(self.blast(expr.operand), w)
            if expr.op == "~":
                return [-x for x in vec]
            if expr.op == "-":
                return b.neg_vec(vec)
        if isinstance(expr, Binary):
            op = expr.op
            if op in ("&&", "||"):
                x = self.bool_of(self.blast(expr.lhs))
                y = self.bool_of(self.blast(expr.rhs))
                return [b.and2(x, y) if op == "&&" else b.or2(x, y)]
            if op in ("<<", ">>"):
                a = b.extend(self.blast(expr.lhs), w)
                amount = self.blast(expr.rhs)
                return b.shift_vec(a, amount, left=(op == "<<"))
            cw = max(wenv.expr_width(expr.lhs), wenv.expr_width(expr.rhs))
            a = b.extend(self.blast(expr.lhs), cw)
            c = b.extend(self.blast(expr.rhs), cw)
            if op == "+":
                return b.add_vec(a, c)
            if op == "-":
                return b.sub_vec(a, c)
            if op == "*":
                return b.mul_vec(a, c)
            if op == "/":
                return b.divmod_vec(a, c)[0]
            if op == "%":
                return b.divmod_vec(a, c)[1]
            if op == "&":
                return [b.and2(x, y) for x, y in zip(a, c)]
            if op == "|":
                return [b.or2(x, y) for x, y in zip(a, c)]
            if op == "^":
                return [b.xor2(x, y) for x, y in zip(a, c)]
            if op == "==":
                return [b.eq_vec(a, c)]
            if op == "!=":
                return [-b.eq_vec(a, c)]
            if op == "<":
                return [b.ult_vec(a, c)]
            if op == ">":
                return [b.ult_vec(c, a)]
            if op == "<=":
                return [-b.ult_vec(c, a)]
            if op == ">=":
                return [-b.ult_vec(a, c)]
        if isinstance(expr, Ternary):
            s = self.bool_of(self.blast(expr.cond))
            t = b.extend(self.blast(expr.then), w)
            e = b.extend(self.blast(expr.orelse), w)
            return [b.mux(s, x, y) for x, y in zip(t, e)]
        raise UnsupportedForBlasting(type(expr).__name__)


def build_miter(a: Design, b: Design) -> tuple[Blaster, dict[str, list[int]]]:
    """Shared-input miter: SAT iff some output differs for some input.

    Returns the blaster (solve on ``blaster.solver``) and the input vars
    per port so models can be decoded.
    """
    blaster = Blaster()
    wenv = WidthEnv(a)
    input_vars = {
        p.name: blaster.input_vec(wenv.width_of(p.name)) for p in a.input_ports()
    }
    outs_a = DesignBlaster(blaster, a, input_vars).run()
    outs_b = DesignBlaster(blaster, b, input_vars).run()
    diffs = []
    for name in sorted(outs_a):
        for x, y in zip(outs_a[name], outs_b[name]):
            diffs.append(blaster.xor2(x, y))
    miter = blaster.any_of(diffs)
    blaster.solver.add_clause([miter])
    return blaster, input_vars


def decode_model(blaster: Blaster, input_vars: dict[str, list[int]]) -> dict[str, int]:
    values = {}
    for name, vec in input_vars.items():
        v = 0
        for i, lit in enumerate(vec):
            if blaster.solver.model_value(lit):
                v |= 1 << i
        values[name] = v
    return values
