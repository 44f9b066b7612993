"""Two-valued deterministic simulation.

Provides combinational evaluation, cycle-accurate sequential simulation
with nonblocking commit semantics, and constant folding. All arithmetic
follows the width rules in GRAMMAR.md; division and modulo by zero
evaluate to 0 (recorded as a warning on the evaluator).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (
    CombinationalLoop,
    MissingInput,
    NoClockFound,
    SymrtloError,
)
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
    referenced_names,
    stmt_reads,
    stmt_targets,
    walk_exprs,
)
from .semantics import (
    COMPARISON_OPS,
    LOGICAL_OPS,
    WidthEnv,
    const_value,
    mask,
    require_valid,
)


@dataclass(frozen=True)
class Assignment:
    """Immutable map from signal name to (value, width)."""

    entries: tuple[tuple[str, int, int], ...]

    @classmethod
    def of(cls, values: dict[str, int], widths: dict[str, int]) -> "Assignment":
        entries = []
        for name in sorted(values):
            v, w = values[name], widths[name]
            if not 0 <= v < (1 << w):
                raise ValueError(f"{name}={v} does not fit in {w} bits")
            entries.append((name, v, w))
        return cls(tuple(entries))

    def __getitem__(self, name: str) -> int:
        for n, v, _ in self.entries:
            if n == name:
                return v
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _, _ in self.entries)

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _, _ in self.entries)

    def values(self) -> dict[str, int]:
        return {n: v for n, v, _ in self.entries}

    def width(self, name: str) -> int:
        for n, _, w in self.entries:
            if n == name:
                return w
        raise KeyError(name)


@dataclass(frozen=True)
class Trace:
    reset_cycles: int
    steps: tuple[tuple[Assignment, Assignment], ...]
    state_snapshots: tuple[Assignment, ...] | None = None

    def to_jsonl(self) -> str:
        lines = []
        for inputs, outputs in self.steps:
            lines.append(
                json.dumps(
                    {"inputs": inputs.values(), "outputs": outputs.values()},
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")


class Evaluator:
    """Scalar expression evaluator over a value environment.

    ``env`` maps signal names to ints; parameters come from the width
    environment. Division/modulo by zero yield 0 and append to
    ``warnings``.
    """

    def __init__(self, wenv: WidthEnv):
        self.wenv = wenv
        self.warnings: list[str] = []

    def eval(self, expr: Expr, env: dict[str, int]) -> int:
        w = self.wenv.expr_width(expr)
        return self._eval(expr, env) & mask(w)

    def _eval(self, expr: Expr, env: dict[str, int]) -> int:
        wenv = self.wenv
        if isinstance(expr, Const):
            return expr.value
        if isinstance(expr, Ref):
            if expr.name in env:
                return env[expr.name]
            if wenv.is_param(expr.name):
                return wenv.params[expr.name]
            raise SymrtloError(f"no value for {expr.name!r}")
        cv = wenv.const_only_value(expr)
        if cv is not None:
            return cv
        if isinstance(expr, Unary):
            v = self.eval(expr.operand, env)
            w = wenv.expr_width(expr)
            if expr.op == "-":
                return (-v) & mask(w)
            if expr.op == "!":
                return int(v == 0)
            if expr.op == "~":
                return (~v) & mask(w)
        if isinstance(expr, Binary):
            op = expr.op
            if op in LOGICAL_OPS:
                a = self.eval(expr.lhs, env)
                if op == "&&":
                    return int(bool(a) and bool(self.eval(expr.rhs, env)))
                return int(bool(a) or bool(self.eval(expr.rhs, env)))
            a = self.eval(expr.lhs, env)
            b = self.eval(expr.rhs, env)
            w = wenv.expr_width(expr)
            m = mask(w)
            if op == "+":
                return (a + b) & m
            if op == "-":
                return (a - b) & m
            if op == "*":
                return (a * b) & m
            if op == "/":
                if b == 0:
                    self.warnings.append("division by zero evaluates to 0")
                    return 0
                return (a // b) & m
            if op == "%":
                if b == 0:
                    self.warnings.append("modulo by zero evaluates to 0")
                    return 0
                return (a % b) & m
            if op == "<<":
                return (a << b) & m if b < 64 else 0
            if op == ">>":
                return (a >> b) & m if b < 64 else 0
            if op == "&":
                return a & b
            if op == "|":
                return a | b
            if op == "^":
                return a ^ b
            if op in COMPARISON_OPS:
                table = {
                    "==": a == b, "!=": a != b,
                    "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                }
                return int(table[op])
        if isinstance(expr, Ternary):
            if self.eval(expr.cond, env):
                return self.eval(expr.then, env)
            return self.eval(expr.orelse, env)
        if isinstance(expr, Select):
            base = self.eval(expr.base, env)
            hi = const_value(expr.msb, wenv.params)
            lo = const_value(expr.lsb, wenv.params)
            return (base >> lo) & mask(hi - lo + 1)
        raise SymrtloError(f"cannot evaluate {type(expr).__name__}")

    def exec_comb(self, body: tuple[Stmt, ...], env: dict[str, int]):
        """Blocking semantics: assignments are visible to later statements."""

        def assign(target, value):
            env[target] = value

        self._exec(body, env, assign)

    def exec_clocked(self, body: tuple[Stmt, ...], env: dict[str, int], pending: dict[str, int]):
        """Nonblocking semantics: reads see pre-edge values only."""

        def assign(target, value):
            pending[target] = value

        self._exec(body, env, assign)

    def _exec(self, body: tuple[Stmt, ...], env: dict[str, int], assign):
        for stmt in body:
            if isinstance(stmt, (BlockingAssign, NonblockingAssign)):
                w = self.wenv.width_of(stmt.target)
                assign(stmt.target, self.eval(stmt.rhs, env) & mask(w))
            elif isinstance(stmt, If):
                branch = stmt.then_body if self.eval(stmt.cond, env) else stmt.else_body
                self._exec(branch, env, assign)
            elif isinstance(stmt, Case):
                subject = self.eval(stmt.subject, env)
                taken = None
                for arm in stmt.arms:
                    for label in arm.labels:
                        if self.eval(label, env) == subject:
                            taken = arm.body
                            break
                    if taken is not None:
                        break
                if taken is None and stmt.default is not None:
                    taken = stmt.default
                if taken is not None:
                    self._exec(taken, env, assign)
            else:
                raise SymrtloError(f"cannot execute {type(stmt).__name__}")


# ---------------------------------------------------------------------------
# Driver analysis


def _comb_nodes(design: Design):
    """Yield (produced-signals, read-signals, node) for combinational drivers."""
    for item in design.items:
        if isinstance(item, ContinuousAssign):
            yield {item.target}, referenced_names(item.rhs), item
        elif isinstance(item, AlwaysBlock) and not item.sensitivity.is_clocked():
            yield stmt_targets(item.body), stmt_reads(item.body), item


def topo_comb_order(design: Design, wenv: WidthEnv) -> list:
    """Topologically order combinational drivers; raise on loops.

    Parameter references are constants, not dependencies.
    """
    nodes = list(_comb_nodes(design))
    produced_by = {}
    for idx, (prods, _, _) in enumerate(nodes):
        for s in prods:
            produced_by[s] = idx
    adj: dict[int, set[int]] = {i: set() for i in range(len(nodes))}
    for idx, (_, reads, _) in enumerate(nodes):
        for r in reads:
            if r in produced_by and not wenv.is_param(r):
                adj[idx].add(produced_by[r])

    order: list[int] = []
    state = {i: 0 for i in adj}  # 0 new, 1 visiting, 2 done
    stack_path: list[int] = []

    def visit(i: int):
        if state[i] == 2:
            return
        if state[i] == 1:
            cycle_start = stack_path.index(i)
            cycle = []
            for j in stack_path[cycle_start:]:
                cycle.append(sorted(nodes[j][0])[0])
            raise CombinationalLoop(cycle + [cycle[0]])
        state[i] = 1
        stack_path.append(i)
        for dep in sorted(adj[i]):
            visit(dep)
        stack_path.pop()
        state[i] = 2
        order.append(i)

    for i in range(len(nodes)):
        visit(i)
    return [nodes[i][2] for i in order]


def clocked_blocks(design: Design) -> list[AlwaysBlock]:
    return [
        item
        for item in design.items
        if isinstance(item, AlwaysBlock) and item.sensitivity.is_clocked()
    ]


def clocked_regs(design: Design) -> list[str]:
    regs: list[str] = []
    for block in clocked_blocks(design):
        for t in sorted(stmt_targets(block.body)):
            if t not in regs:
                regs.append(t)
    return regs


@dataclass(frozen=True)
class ClockInfo:
    clock: str
    reset: str | None  # asynchronous, active-high


def detect_clock(design: Design) -> ClockInfo:
    """Identify clock and optional async reset from the clocked blocks.

    The clock is the posedge signal shared by all clocked blocks; a second
    posedge signal qualifies as reset when it gates a leading if-branch
    that assigns constants to regs. Anything else is an error.
    """
    blocks = clocked_blocks(design)
    if not blocks:
        raise NoClockFound("design has no clocked always block")
    param_names = {p.name for p in design.parameters}
    clock: str | None = None
    reset: str | None = None
    for block in blocks:
        pos = [sig for edge, sig in block.sensitivity.edges if edge == "posedge"]
        neg = [sig for edge, sig in block.sensitivity.edges if edge == "negedge"]
        if neg:
            raise NoClockFound("negedge sensitivity is not supported")
        if len(pos) == 1:
            candidates = {pos[0]: None}
        elif len(pos) == 2:
            resets = _reset_candidates(block, param_names)
            candidates = {}
            for sig in pos:
                if sig not in resets:
                    candidates[sig] = [s for s in pos if s != sig][0]
            if len(candidates) != 1:
                raise NoClockFound(
                    "cannot tell clock from reset in sensitivity "
                    f"({', '.join(pos)})"
                )
        else:
            raise NoClockFound(f"unsupported sensitivity with {len(pos)} posedges")
        (blk_clock, blk_reset), = candidates.items()
        if clock is None:
            clock, reset = blk_clock, blk_reset
        elif clock != blk_clock:
            raise NoClockFound(f"multiple clocks: {clock!r} and {blk_clock!r}")
        elif blk_reset is not None and reset is None:
            reset = blk_reset
        elif blk_reset is not None and reset != blk_reset:
            raise NoClockFound(f"multiple resets: {reset!r} and {blk_reset!r}")
    return ClockInfo(clock, reset)


def _reset_candidates(block: AlwaysBlock, param_names: set[str]) -> set[str]:
    """Signals gating a leading if whose branch assigns only constants."""
    out: set[str] = set()
    if not block.body:
        return out
    stmt = block.body[0]
    if not isinstance(stmt, If):
        return out
    cond = stmt.cond
    if isinstance(cond, Ref):
        branch = stmt.then_body
        name = cond.name
    elif isinstance(cond, Unary) and cond.op == "!" and isinstance(cond.operand, Ref):
        branch = stmt.else_body
        name = cond.operand.name
    else:
        return out
    assigns = [s for s in branch if isinstance(s, NonblockingAssign)]
    if assigns and all(_is_constlike(s.rhs, param_names) for s in assigns):
        out.add(name)
    return out


def _is_constlike(expr: Expr, param_names: set[str]) -> bool:
    for e in walk_exprs(expr):
        if isinstance(e, Const):
            continue
        if isinstance(e, Ref) and e.name in param_names:
            continue
        return False
    return True


# ---------------------------------------------------------------------------
# Public operations


def eval_comb(
    design: Design,
    inputs: Assignment,
    overrides: dict[str, int] | None = None,
) -> Assignment:
    """Evaluate a purely combinational design.

    Returns the values of all output ports. Raises CombinationalLoop or
    MissingInput.
    """
    if clocked_blocks(design):
        raise SymrtloError("eval_comb requires a combinational design")
    require_valid(design)
    wenv = WidthEnv(design, overrides)
    ev = Evaluator(wenv)
    env = _input_env(design, wenv, inputs)
    _settle_comb(design, wenv, ev, env)
    return _outputs_of(design, wenv, env)


def _input_env(design: Design, wenv: WidthEnv, inputs: Assignment, *, skip=()) -> dict[str, int]:
    env: dict[str, int] = {}
    for p in design.input_ports():
        if p.name in skip:
            continue
        if p.name not in inputs:
            raise MissingInput(p.name)
        env[p.name] = inputs[p.name] & mask(wenv.width_of(p.name))
    return env


def _settle_comb(design: Design, wenv: WidthEnv, ev: Evaluator, env: dict[str, int]):
    driven: set[str] = set()
    for prods, _, _ in _comb_nodes(design):
        driven |= prods
    for block in clocked_blocks(design):
        driven |= stmt_targets(block.body)
    # Declared but undriven nets read as 0.
    for d in design.decls:
        if d.name not in driven:
            env.setdefault(d.name, 0)
    for node in topo_comb_order(design, wenv):
        if isinstance(node, ContinuousAssign):
            env[node.target] = ev.eval(node.rhs, env) & mask(wenv.width_of(node.target))
        else:
            ev.exec_comb(node.body, env)


def _outputs_of(design: Design, wenv: WidthEnv, env: dict[str, int]) -> Assignment:
    values, widths = {}, {}
    for p in design.output_ports():
        if p.name not in env:
            values[p.name] = 0
        else:
            values[p.name] = env[p.name]
        widths[p.name] = wenv.width_of(p.name)
    return Assignment.of(values, widths)


class SequentialContext:
    """Reusable stepping context for one design instance.

    Keeps the width environment, clock info and topological order so that
    product-machine exploration can step cheaply.
    """

    def __init__(self, design: Design, overrides: dict[str, int] | None = None):
        require_valid(design)
        self.design = design
        self.wenv = WidthEnv(design, overrides)
        self.clock = detect_clock(design)
        self.ev = Evaluator(self.wenv)
        self.regs = clocked_regs(design)
        self._blocks = clocked_blocks(design)
        self.data_inputs = tuple(
            p.name
            for p in design.input_ports()
            if p.name not in (self.clock.clock, self.clock.reset)
        )

    def reset_state(self, cycles: int = 1) -> dict[str, int]:
        state = {r: 0 for r in self.regs}
        env_inputs = {name: 0 for name in self.data_inputs}
        if self.clock.reset is not None:
            for _ in range(max(cycles, 1)):
                state = self._edge(state, env_inputs, reset=1)
        return state

    def _edge(self, state: dict[str, int], inputs: dict[str, int], reset: int) -> dict[str, int]:
        env = dict(inputs)
        env.update(state)
        if self.clock.reset is not None:
            env[self.clock.reset] = reset
        env[self.clock.clock] = 0
        _settle_comb(self.design, self.wenv, self.ev, env)
        pending: dict[str, int] = {}
        for block in self._blocks:
            self.ev.exec_clocked(block.body, env, pending)
        new_state = dict(state)
        new_state.update(pending)
        return new_state

    def outputs(self, state: dict[str, int], inputs: dict[str, int]) -> Assignment:
        env = dict(inputs)
        env.update(state)
        if self.clock.reset is not None:
            env[self.clock.reset] = 0
        env[self.clock.clock] = 0
        _settle_comb(self.design, self.wenv, self.ev, env)
        return _outputs_of(self.design, self.wenv, env)

    def step(self, state: dict[str, int], inputs: dict[str, int]):
        """One clock edge: returns (next_state, outputs sampled post-edge)."""
        new_state = self._edge(state, inputs, reset=0)
        return new_state, self.outputs(new_state, inputs)

    def input_widths(self) -> dict[str, int]:
        return {n: self.wenv.width_of(n) for n in self.data_inputs}


def simulate(
    design: Design,
    stimulus: list[Assignment],
    reset_cycles: int = 1,
    overrides: dict[str, int] | None = None,
    record_state: bool = False,
) -> Trace:
    """Cycle-accurate simulation: reset, then one stimulus entry per edge.

    Nonblocking semantics: all next-state values are computed from the
    pre-edge state and committed together; outputs are sampled after the
    edge settles.
    """
    ctx = SequentialContext(design, overrides)
    state = ctx.reset_state(reset_cycles)
    steps = []
    snapshots = []
    reg_widths = {r: ctx.wenv.width_of(r) for r in ctx.regs}
    for entry in stimulus:
        inputs = {}
        for name in ctx.data_inputs:
            if name not in entry:
                raise MissingInput(name)
            inputs[name] = entry[name] & mask(ctx.wenv.width_of(name))
        state, outputs = ctx.step(state, inputs)
        in_assign = Assignment.of(inputs, {n: ctx.wenv.width_of(n) for n in inputs})
        steps.append((in_assign, outputs))
        if record_state:
            snapshots.append(Assignment.of(dict(state), reg_widths))
    return Trace(
        reset_cycles=reset_cycles,
        steps=tuple(steps),
        state_snapshots=tuple(snapshots) if record_state else None,
    )


# ---------------------------------------------------------------------------
# Constant folding


def fold_const(expr: Expr, warnings: list[str] | None = None) -> Expr:
    """Replace every constant-only subtree with a Const.

    The result is a fixpoint and preserves evaluation semantics
    (constant-only subtrees are self-determined; see GRAMMAR.md).
    Constant division/modulo by zero is reported into ``warnings`` and
    the offending node is left unfolded.
    """
    from .semantics import const_subtree_value_width

    sink = warnings if warnings is not None else []

    def rhs_is_zero(e: Expr) -> bool:
        if isinstance(e, Const):
            return e.value == 0
        r = const_subtree_value_width(e, {})
        return r is not None and r[0] == 0

    def has_const_div_by_zero(e: Expr) -> bool:
        return any(
            isinstance(sub, Binary) and sub.op in ("/", "%") and rhs_is_zero(sub.rhs)
            for sub in walk_exprs(e)
        )

    def try_fold_whole(node: Expr) -> Expr | None:
        if has_const_div_by_zero(node):
            return None
        r = const_subtree_value_width(node, {})
        if r is None:
            return None
        v, w = r
        if max(v.bit_length(), 1) == w:
            return Const(v)  # unsized; same width under the rules
        return Const(v, w)

    def fold(node: Expr) -> Expr:
        if isinstance(node, (Const, Ref, Select)):
            return node
        whole = try_fold_whole(node)
        if whole is not None:
            return whole
        if isinstance(node, Unary):
            rebuilt: Expr = Unary(node.op, fold(node.operand), span=node.span)
        elif isinstance(node, Binary):
            rebuilt = Binary(node.op, fold(node.lhs), fold(node.rhs), span=node.span)
            if rebuilt.op in ("/", "%") and rhs_is_zero(rebuilt.rhs) and isinstance(
                rebuilt.lhs, Const
            ):
                sink.append(f"constant {rebuilt.op} by zero left unfolded")
        elif isinstance(node, Ternary):
            cond = fold(node.cond)
            if isinstance(cond, Const):
                return fold(node.then) if cond.value else fold(node.orelse)
            rebuilt = Ternary(cond, fold(node.then), fold(node.orelse), span=node.span)
        else:
            return node
        # pruning a dead ternary branch can expose a new constant subtree
        return try_fold_whole(rebuilt) or rebuilt

    return fold(expr)
