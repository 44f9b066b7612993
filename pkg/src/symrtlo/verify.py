"""Equivalence verification.

Two-step philosophy: cheap stimulus comparison filters obviously broken
rewrites; formal modes (exhaustive enumeration, propositional miter over
a CDCL solver, sequential product-machine reachability) settle the rest.
Every NotEquivalent verdict carries a counterexample that replays to a
real mismatch through the simulator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InterfaceMismatch,
    SpaceTooLarge,
    SymrtloError,
)
from .nodes import Design
from .semantics import WidthEnv, mask
from . import bitblast
from .sim import (
    Assignment,
    Evaluator,
    SequentialContext,
    _input_env,
    _outputs_of,
    _settle_comb,
    clocked_blocks,
    clocked_regs,
)

EXHAUSTIVE_COMB_BITS = 20
EXHAUSTIVE_SEQ_SPACE = 10**6
PRODUCT_REG_BITS = 24
PRODUCT_INPUT_BITS = 12


@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: str  # equivalent | not_equivalent | inconclusive
    mode: str  # exhaustive | propositional | product_reachability | bounded_sequential
    counterexample: object = None  # Assignment or tuple[Assignment, ...]
    bound: str | None = None
    notes: tuple[str, ...] = field(default=())

    @property
    def equivalent(self) -> bool:
        return self.verdict == "equivalent"

    @property
    def passed(self) -> bool:
        """Proof or clean bounded run (no mismatch observed)."""
        return self.verdict == "equivalent" or (
            self.verdict == "inconclusive" and self.counterexample is None
        )

    def to_dict(self) -> dict:
        cex = None
        if isinstance(self.counterexample, Assignment):
            cex = self.counterexample.values()
        elif self.counterexample is not None:
            cex = [a.values() for a in self.counterexample]
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "counterexample": cex,
            "bound": self.bound,
            "notes": list(self.notes),
        }


def is_combinational(design: Design) -> bool:
    return not clocked_blocks(design)


def _interface(design: Design) -> dict[str, tuple[str, int]]:
    wenv = WidthEnv(design)
    return {p.name: (p.direction, wenv.width_of(p.name)) for p in design.ports}


def check_interfaces(a: Design, b: Design) -> None:
    ia, ib = _interface(a), _interface(b)
    if ia != ib:
        only_a = sorted(set(ia) - set(ib))
        only_b = sorted(set(ib) - set(ia))
        diff = sorted(
            n for n in set(ia) & set(ib) if ia[n] != ib[n]
        )
        raise InterfaceMismatch(
            f"port interfaces differ (only in a: {only_a}, only in b: {only_b}, "
            f"mismatched: {diff})"
        )


def _input_bits(design: Design, *, exclude_clk_reset: bool = False) -> int:
    wenv = WidthEnv(design)
    names = [p.name for p in design.input_ports()]
    if exclude_clk_reset:
        from .sim import detect_clock

        info = detect_clock(design)
        names = [n for n in names if n not in (info.clock, info.reset)]
    return sum(wenv.width_of(n) for n in names)


# ---------------------------------------------------------------------------
# Stimulus generation


def gen_stimulus(
    design: Design,
    strategy: str = "exhaustive",
    count: int = 256,
    seed: int = 0,
    depth: int = 16,
):
    """Stimulus for a design: input Assignments (combinational) or input
    sequences (sequential).

    ``strategy`` is ``exhaustive`` (ascending binary order; bounded) or
    ``random`` (seed-reproducible, duplicates allowed).
    """
    if is_combinational(design):
        wenv = WidthEnv(design)
        ports = [(p.name, wenv.width_of(p.name)) for p in design.input_ports()]
        total = sum(w for _, w in ports)
        if strategy == "exhaustive":
            if total > EXHAUSTIVE_COMB_BITS:
                raise SpaceTooLarge(f"{total} input bits exceeds exhaustive bound")
            return [_vector_to_assignment(v, ports) for v in range(1 << total)]
        rng = random.Random(seed)
        return [
            _vector_to_assignment(rng.getrandbits(total), ports) for _ in range(count)
        ]
    ctx = SequentialContext(design)
    ports = [(n, ctx.wenv.width_of(n)) for n in ctx.data_inputs]
    total = sum(w for _, w in ports)
    if strategy == "exhaustive":
        space = (1 << total) ** depth
        if space > EXHAUSTIVE_SEQ_SPACE:
            raise SpaceTooLarge(
                f"{(1 << total)}^{depth} sequences exceed exhaustive bound"
            )
        seqs = []
        for idx in range(space):
            seq = []
            rest = idx
            for _ in range(depth):
                seq.append(_vector_to_assignment(rest % (1 << total), ports))
                rest //= 1 << total
            seqs.append(seq)
        return seqs
    rng = random.Random(seed)
    return [
        [_vector_to_assignment(rng.getrandbits(total), ports) for _ in range(depth)]
        for _ in range(count)
    ]


def _vector_to_assignment(vector: int, ports: list[tuple[str, int]]) -> Assignment:
    values, widths = {}, {}
    shift = 0
    for name, w in reversed(ports):  # last-declared port takes the low bits
        values[name] = (vector >> shift) & mask(w)
        widths[name] = w
        shift += w
    return Assignment.of(values, widths)


# ---------------------------------------------------------------------------
# Combinational equivalence


class _BatchEval:
    """Vectorized evaluation of all drivers over a batch of input vectors.

    Falls back to None (caller uses scalar loop) when any width > 32.
    """

    def __init__(self, design: Design):
        self.design = design
        self.wenv = WidthEnv(design)

    def usable(self) -> bool:
        try:
            widths = [self.wenv.expr_width(e) for e in _all_exprs(self.design)]
        except SymrtloError:
            return False
        sig = self.wenv.signal_widths.values()
        return all(w <= 32 for w in widths) and all(w <= 32 for w in sig)

    def outputs(self, input_arrays: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        from .sim import topo_comb_order, ContinuousAssign
        from . import symexec

        env = dict(input_arrays)
        n = len(next(iter(input_arrays.values())))
        driven = set()
        for node in topo_comb_order(self.design, self.wenv):
            if isinstance(node, ContinuousAssign):
                driven.add(node.target)
            else:
                driven |= set(symexec.exec_block(node.body, "comb"))
        for d in self.design.decls:
            if d.name not in driven and d.name not in env:
                env[d.name] = np.zeros(n, dtype=np.uint64)
        for node in topo_comb_order(self.design, self.wenv):
            if isinstance(node, ContinuousAssign):
                w = self.wenv.width_of(node.target)
                env[node.target] = self._eval(node.rhs, env) & np.uint64(mask(w))
            else:
                values = symexec.exec_block(node.body, "comb")
                for t in sorted(values):
                    w = self.wenv.width_of(t)
                    env[t] = self._eval(values[t], env) & np.uint64(mask(w))
        return {
            p.name: env[p.name] if p.name in env else np.zeros(n, dtype=np.uint64)
            for p in self.design.output_ports()
        }

    def _eval(self, expr, env) -> np.ndarray:
        from .nodes import Binary, Const, Ref, Select, Ternary, Unary
        from .semantics import const_value

        wenv = self.wenv
        w = wenv.expr_width(expr)
        m = np.uint64(mask(w))
        if isinstance(expr, Const):
            n = len(next(iter(env.values())))
            return np.full(n, expr.value, dtype=np.uint64)
        if isinstance(expr, Ref):
            if wenv.is_param(expr.name):
                n = len(next(iter(env.values())))
                return np.full(n, wenv.params[expr.name], dtype=np.uint64)
            return env[expr.name]
        cv = wenv.const_only_value(expr)
        if cv is not None:
            n = len(next(iter(env.values())))
            return np.full(n, cv, dtype=np.uint64)
        if isinstance(expr, Unary):
            v = self._eval(expr.operand, env)
            if expr.op == "-":
                return (np.uint64(0) - v) & m
            if expr.op == "!":
                return (v == 0).astype(np.uint64)
            if expr.op == "~":
                return (~v) & m
        if isinstance(expr, Binary):
            op = expr.op
            a = self._eval(expr.lhs, env)
            b = self._eval(expr.rhs, env)
            if op == "+":
                return (a + b) & m
            if op == "-":
                return (a - b) & m
            if op == "*":
                return (a * b) & m
            if op == "/":
                safe = np.where(b == 0, np.uint64(1), b)
                return np.where(b == 0, np.uint64(0), a // safe) & m
            if op == "%":
                safe = np.where(b == 0, np.uint64(1), b)
                return np.where(b == 0, np.uint64(0), a % safe) & m
            if op == "<<":
                amt = np.minimum(b, np.uint64(63))
                return np.where(b > 63, np.uint64(0), (a << amt) & m)
            if op == ">>":
                amt = np.minimum(b, np.uint64(63))
                return np.where(b > 63, np.uint64(0), a >> amt) & m
            if op == "&":
                return a & b
            if op == "|":
                return a | b
            if op == "^":
                return a ^ b
            if op == "==":
                return (a == b).astype(np.uint64)
            if op == "!=":
                return (a != b).astype(np.uint64)
            if op == "<":
                return (a < b).astype(np.uint64)
            if op == "<=":
                return (a <= b).astype(np.uint64)
            if op == ">":
                return (a > b).astype(np.uint64)
            if op == ">=":
                return (a >= b).astype(np.uint64)
            if op == "&&":
                return ((a != 0) & (b != 0)).astype(np.uint64)
            if op == "||":
                return ((a != 0) | (b != 0)).astype(np.uint64)
        if isinstance(expr, Ternary):
            c = self._eval(expr.cond, env)
            t = self._eval(expr.then, env)
            e = self._eval(expr.orelse, env)
            return np.where(c != 0, t, e)
        if isinstance(expr, Select):
            base = self._eval(expr.base, env)
            hi = const_value(expr.msb, wenv.params)
            lo = const_value(expr.lsb, wenv.params)
            return (base >> np.uint64(lo)) & np.uint64(mask(hi - lo + 1))
        raise SymrtloError(f"batch eval: {type(expr).__name__}")


def _all_exprs(design: Design):
    from .nodes import walk_exprs

    yield from walk_exprs(design)


def _scalar_outputs(design: Design, inputs: Assignment) -> Assignment:
    wenv = WidthEnv(design)
    ev = Evaluator(wenv)
    env = _input_env(design, wenv, inputs)
    _settle_comb(design, wenv, ev, env)
    return _outputs_of(design, wenv, env)


def _exhaustive_comb(a: Design, b: Design) -> EquivalenceVerdict:
    wenv = WidthEnv(a)
    ports = [(p.name, wenv.width_of(p.name)) for p in a.input_ports()]
    total = sum(w for _, w in ports)
    if total > EXHAUSTIVE_COMB_BITS:
        raise SpaceTooLarge(f"{total} input bits exceeds exhaustive bound")
    batch_a, batch_b = _BatchEval(a), _BatchEval(b)
    if batch_a.usable() and batch_b.usable() and total <= 24:
        vectors = np.arange(1 << total, dtype=np.uint64)
        arrays: dict[str, np.ndarray] = {}
        shift = 0
        for name, w in reversed(ports):
            arrays[name] = (vectors >> np.uint64(shift)) & np.uint64(mask(w))
            shift += w
        outs_a = batch_a.outputs(dict(arrays))
        outs_b = batch_b.outputs(dict(arrays))
        for name in sorted(outs_a):
            diff = outs_a[name] != outs_b[name]
            if diff.any():
                idx = int(np.argmax(diff))
                cex = _vector_to_assignment(idx, ports)
                return EquivalenceVerdict(
                    "not_equivalent",
                    "exhaustive",
                    counterexample=cex,
                    bound=f"2^{total} vectors",
                )
        return EquivalenceVerdict("equivalent", "exhaustive", bound=f"2^{total} vectors")
    for vec in range(1 << total):
        stim = _vector_to_assignment(vec, ports)
        if _scalar_outputs(a, stim) != _scalar_outputs(b, stim):
            return EquivalenceVerdict(
                "not_equivalent", "exhaustive", counterexample=stim,
                bound=f"2^{total} vectors",
            )
    return EquivalenceVerdict("equivalent", "exhaustive", bound=f"2^{total} vectors")


def _propositional_comb(a: Design, b: Design) -> EquivalenceVerdict:
    try:
        blaster, input_vars = bitblast.build_miter(a, b)
    except bitblast.UnsupportedForBlasting as e:
        return EquivalenceVerdict(
            "inconclusive", "propositional", notes=(str(e),),
            counterexample=None, bound="not blasted",
        )
    if not blaster.solver.ok:
        return EquivalenceVerdict("equivalent", "propositional", bound="miter UNSAT")
    if blaster.solver.solve():
        values = bitblast.decode_model(blaster, input_vars)
        wenv = WidthEnv(a)
        widths = {n: wenv.width_of(n) for n in values}
        cex = Assignment.of(values, widths)
        return EquivalenceVerdict(
            "not_equivalent", "propositional", counterexample=cex, bound="miter SAT"
        )
    return EquivalenceVerdict("equivalent", "propositional", bound="miter UNSAT")


def check_equiv_comb(a: Design, b: Design, mode: str = "auto") -> EquivalenceVerdict:
    """Combinational equivalence: exhaustive simulation or a SAT miter.

    ``auto`` picks exhaustive when total input bits <= 20, else the
    propositional route.
    """
    if not is_combinational(a) or not is_combinational(b):
        raise InterfaceMismatch("check_equiv_comb requires combinational designs")
    check_interfaces(a, b)
    if mode == "auto":
        mode = "exhaustive" if _input_bits(a) <= EXHAUSTIVE_COMB_BITS else "propositional"
    if mode == "exhaustive":
        return _exhaustive_comb(a, b)
    if mode in ("propositional", "sat"):
        return _propositional_comb(a, b)
    raise ValueError(f"unknown combinational mode {mode!r}")


# ---------------------------------------------------------------------------
# Sequential equivalence


def _seq_inputs(ctx: SequentialContext) -> list[tuple[str, int]]:
    return [(n, ctx.wenv.width_of(n)) for n in ctx.data_inputs]


def check_equiv_seq(
    a: Design,
    b: Design,
    mode: str = "product",
    depth: int = 16,
    vectors: int = 64,
    seed: int = 0,
    reset_cycles: int = 1,
) -> EquivalenceVerdict:
    """Sequential equivalence from the joint reset state.

    ``product`` explores the reachable joint register space (full proof;
    registers are matched by behavior, never by name) and falls back to
    bounded simulation when the space is too large. ``bounded`` runs
    seeded lockstep simulation and can only return NotEquivalent or
    Inconclusive("equivalent to depth k").
    """
    check_interfaces(a, b)
    ctx_a = SequentialContext(a)
    ctx_b = SequentialContext(b)
    if tuple(ctx_a.data_inputs) != tuple(ctx_b.data_inputs):
        raise InterfaceMismatch(
            f"data inputs differ: {ctx_a.data_inputs} vs {ctx_b.data_inputs}"
        )
    notes: list[str] = []
    if mode == "product":
        reg_bits = sum(ctx_a.wenv.width_of(r) for r in clocked_regs(a)) + sum(
            ctx_b.wenv.width_of(r) for r in clocked_regs(b)
        )
        in_bits = sum(w for _, w in _seq_inputs(ctx_a))
        if reg_bits > PRODUCT_REG_BITS or in_bits > PRODUCT_INPUT_BITS:
            notes.append(
                f"product space too large (regs={reg_bits} bits, inputs={in_bits} "
                "bits); fell back to bounded simulation"
            )
            mode = "bounded"
        else:
            return _product_reachability(ctx_a, ctx_b, reset_cycles, tuple(notes))
    if mode == "bounded":
        return _bounded_lockstep(
            ctx_a, ctx_b, depth, vectors, seed, reset_cycles, tuple(notes)
        )
    raise ValueError(f"unknown sequential mode {mode!r}")


def _product_reachability(
    ctx_a: SequentialContext,
    ctx_b: SequentialContext,
    reset_cycles: int,
    notes: tuple[str, ...],
) -> EquivalenceVerdict:
    ports = _seq_inputs(ctx_a)
    total = sum(w for _, w in ports)
    symbols = [_vector_to_assignment(v, ports) for v in range(1 << total)]
    start_a = ctx_a.reset_state(reset_cycles)
    start_b = ctx_b.reset_state(reset_cycles)

    def key(sa, sb):
        return (tuple(sorted(sa.items())), tuple(sorted(sb.items())))

    seen = {key(start_a, start_b): None}
    frontier = [(start_a, start_b, ())]
    explored = 0
    while frontier:
        next_frontier = []
        for sa, sb, path in frontier:
            for sym in symbols:
                inputs = sym.values()
                na, oa = ctx_a.step(sa, inputs)
                nb, ob = ctx_b.step(sb, inputs)
                explored += 1
                if oa != ob:
                    return EquivalenceVerdict(
                        "not_equivalent",
                        "product_reachability",
                        counterexample=path + (sym,),
                        bound=f"{len(seen)} joint states",
                        notes=notes,
                    )
                k = key(na, nb)
                if k not in seen:
                    seen[k] = None
                    next_frontier.append((na, nb, path + (sym,)))
        frontier = next_frontier
    return EquivalenceVerdict(
        "equivalent",
        "product_reachability",
        bound=f"{len(seen)} reachable joint states, {explored} edges",
        notes=notes,
    )


def _bounded_lockstep(
    ctx_a: SequentialContext,
    ctx_b: SequentialContext,
    depth: int,
    vectors: int,
    seed: int,
    reset_cycles: int,
    notes: tuple[str, ...],
) -> EquivalenceVerdict:
    ports = _seq_inputs(ctx_a)
    total = sum(w for _, w in ports)
    sequences: list[list[Assignment]]
    if vectors is not None and (1 << total) ** depth <= min(
        EXHAUSTIVE_SEQ_SPACE, vectors * 16
    ):
        space = (1 << total) ** depth
        sequences = []
        for idx in range(space):
            seq, rest = [], idx
            for _ in range(depth):
                seq.append(_vector_to_assignment(rest % (1 << total), ports))
                rest //= 1 << total
            sequences.append(seq)
    else:
        rng = random.Random(seed)
        sequences = [
            [_vector_to_assignment(rng.getrandbits(total), ports) for _ in range(depth)]
            for _ in range(vectors)
        ]
    for seq in sequences:
        sa = ctx_a.reset_state(reset_cycles)
        sb = ctx_b.reset_state(reset_cycles)
        for t, sym in enumerate(seq):
            inputs = sym.values()
            sa, oa = ctx_a.step(sa, inputs)
            sb, ob = ctx_b.step(sb, inputs)
            if oa != ob:
                return EquivalenceVerdict(
                    "not_equivalent",
                    "bounded_sequential",
                    counterexample=tuple(seq[: t + 1]),
                    bound=f"depth {depth}",
                    notes=notes,
                )
    return EquivalenceVerdict(
        "inconclusive",
        "bounded_sequential",
        bound=f"equivalent to depth {depth} over {len(sequences)} sequences",
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Convenience: full check with auto mode selection


def check_equiv(
    a: Design,
    b: Design,
    mode: str = "auto",
    depth: int = 16,
    vectors: int = 64,
    seed: int = 0,
) -> EquivalenceVerdict:
    """Dispatch to the right checker; ``mode`` may also force one
    (exhaustive | sat | product | bounded)."""
    comb = is_combinational(a) and is_combinational(b)
    if mode in ("exhaustive", "sat", "propositional"):
        return check_equiv_comb(a, b, "exhaustive" if mode == "exhaustive" else "sat")
    if mode in ("product", "bounded"):
        return check_equiv_seq(a, b, mode, depth=depth, vectors=vectors, seed=seed)
    if comb:
        return check_equiv_comb(a, b, "auto")
    return check_equiv_seq(a, b, "product", depth=depth, vectors=vectors, seed=seed)
