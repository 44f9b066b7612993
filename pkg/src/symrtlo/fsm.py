"""Symbolic FSM extraction, minimization, and Verilog re-emission.

Extraction recognizes the three-block idiom: a clocked block updating the
state register from a next-state variable (with an async reset to a
constant), a combinational transition block (leading default plus a case
over the state register with nested cases over one input), and
combinational output logic. A leading ``next = state`` default completes
missing case arms as self-loops, making the machine fully specified;
machines built directly (e.g. from JSON) may be partial.

Minimization runs partition refinement on deterministic-complete
machines (exact minimum) and a compatibility-pair / closed-cover search
on partially specified ones: exact branch and bound up to 12 states,
greedy maximal compatibles beyond that (flagged inexact).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace

from .errors import AmbiguousFsm, NotAnFsm, UnreachableInitial
from .nodes import (
    AlwaysBlock,
    BlockingAssign,
    Case,
    CaseArm,
    Const,
    ContinuousAssign,
    Design,
    Decl,
    Expr,
    If,
    NonblockingAssign,
    Parameter,
    Ref,
    Sensitivity,
    referenced_names,
    stmt_reads,
    stmt_targets,
)
from .semantics import WidthEnv, const_value, require_valid
from .sim import Evaluator, detect_clock


def make_symbol(signal: str, value: int, width: int) -> str:
    return f"{signal}={value:0{width}b}"


def symbol_value(symbol: str) -> tuple[str, int, int]:
    signal, bits = symbol.split("=", 1)
    return signal, int(bits, 2), len(bits)


@dataclass(frozen=True)
class SymbolicFsm:
    """States, input symbols, (possibly partial) transitions, outputs.

    ``transitions`` maps state -> symbol -> tuple of successors; a
    missing symbol entry means unspecified, more than one successor means
    nondeterministic. ``outputs`` holds per-state (Moore) values;
    ``mealy_outputs``, when present, holds per-(state, symbol) values
    sampled in that state under that input. ``guards`` carries optional
    datapath constraints used only as compatibility conditions.
    ``accepting`` is carried untouched; RTL machines have no acceptance
    semantics.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: dict[str, dict[str, tuple[str, ...]]]
    initial: str
    accepting: frozenset[str] | None = None
    outputs: dict[str, dict[str, int]] | None = None
    mealy_outputs: dict[tuple[str, str], dict[str, int]] | None = None
    guards: dict[tuple[str, str], Expr] | None = None

    def __post_init__(self):
        if self.initial not in self.states:
            raise ValueError(f"initial state {self.initial!r} not in states")
        for q, row in self.transitions.items():
            if q not in self.states:
                raise ValueError(f"transition from unknown state {q!r}")
            for sym, succs in row.items():
                if sym not in self.alphabet:
                    raise ValueError(f"unknown symbol {sym!r}")
                for s in succs:
                    if s not in self.states:
                        raise ValueError(f"transition to unknown state {s!r}")

    def successors(self, state: str, symbol: str) -> tuple[str, ...]:
        return self.transitions.get(state, {}).get(symbol, ())

    def is_deterministic_complete(self) -> bool:
        return all(
            len(self.successors(q, s)) == 1
            for q in self.states
            for s in self.alphabet
        )

    def reachable(self) -> list[str]:
        seen = [self.initial]
        seen_set = {self.initial}
        i = 0
        while i < len(seen):
            q = seen[i]
            i += 1
            for sym in self.alphabet:
                for s in self.successors(q, sym):
                    if s not in seen_set:
                        seen_set.add(s)
                        seen.append(s)
        return [q for q in self.states if q in seen_set]

    def to_json_dict(self) -> dict:
        transitions = {}
        for q in self.states:
            row = {}
            for sym in self.alphabet:
                succs = self.successors(q, sym)
                if len(succs) == 1:
                    row[sym] = {"next_state": succs[0]}
                elif len(succs) > 1:
                    row[sym] = {"next_state": list(succs)}
            transitions[q] = row
        doc = {
            "states": list(self.states),
            "transitions": transitions,
            "outputs": {q: dict(v) for q, v in (self.outputs or {}).items()},
            "initial": self.initial,
        }
        if self.mealy_outputs:
            doc["mealy_outputs"] = {
                f"{q}|{sym}": dict(v) for (q, sym), v in self.mealy_outputs.items()
            }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=False)


def fsm_from_json(doc: dict) -> SymbolicFsm:
    states = tuple(doc["states"])
    transitions: dict[str, dict[str, tuple[str, ...]]] = {}
    alphabet: list[str] = []
    for q, row in doc.get("transitions", {}).items():
        tr = {}
        for sym, entry in row.items():
            nxt = entry["next_state"] if isinstance(entry, dict) else entry
            tr[sym] = (nxt,) if isinstance(nxt, str) else tuple(nxt)
            if sym not in alphabet:
                alphabet.append(sym)
        transitions[q] = tr
    outputs = {q: dict(v) for q, v in doc.get("outputs", {}).items()} or None
    mealy = None
    if "mealy_outputs" in doc:
        mealy = {}
        for key, v in doc["mealy_outputs"].items():
            q, sym = key.split("|", 1)
            mealy[(q, sym)] = dict(v)
    return SymbolicFsm(
        states=states,
        alphabet=tuple(sorted(alphabet, key=lambda s: symbol_value(s)[1])),
        transitions=transitions,
        initial=doc["initial"],
        outputs=outputs,
        mealy_outputs=mealy,
    )


@dataclass(frozen=True)
class StateMapping:
    """Total map from original state to merged-class name.

    Class names join their members with underscores in original
    declaration order. ``exact`` is False when the partial-FSM search
    fell back to the greedy cover.
    """

    mapping: dict[str, str]
    exact: bool = True

    def classes(self) -> dict[str, tuple[str, ...]]:
        inv: dict[str, list[str]] = {}
        for state, cls in self.mapping.items():
            inv.setdefault(cls, []).append(state)
        return {c: tuple(members) for c, members in inv.items()}


@dataclass(frozen=True)
class FsmBinding:
    """Where the FSM lives inside a Design (used by reemit)."""

    state_reg: str
    next_var: str
    subject: str  # input port scanned by the inner cases
    subject_width: int
    clock: str
    reset: str | None
    state_params: tuple[str, ...]  # declaration order
    encodings: dict[str, int]
    state_width: int
    clocked_idx: int
    transition_idx: int
    output_idxs: tuple[int, ...]
    output_signals: dict[str, int]  # signal -> width
    mealy: bool


# ---------------------------------------------------------------------------
# Extraction


def _clocked_state_candidates(design: Design, reset: str | None):
    """(item index, state reg, next var, reset value expr) per clocked block
    matching `if (reset) state <= K; else state <= next;`."""
    out = []
    for idx, item in enumerate(design.items):
        if not isinstance(item, AlwaysBlock) or not item.sensitivity.is_clocked():
            continue
        body = item.body
        if len(body) != 1 or not isinstance(body[0], If):
            continue
        stmt = body[0]
        if not (isinstance(stmt.cond, Ref) and reset is not None and stmt.cond.name == reset):
            continue
        then_assigns = [s for s in stmt.then_body if isinstance(s, NonblockingAssign)]
        else_assigns = [s for s in stmt.else_body if isinstance(s, NonblockingAssign)]
        if len(then_assigns) != 1 or len(else_assigns) != 1:
            continue
        if len(stmt.then_body) != 1 or len(stmt.else_body) != 1:
            continue
        reset_assign, step_assign = then_assigns[0], else_assigns[0]
        if reset_assign.target != step_assign.target:
            continue
        if not isinstance(step_assign.rhs, Ref):
            continue
        out.append((idx, reset_assign.target, step_assign.rhs.name, reset_assign.rhs))
    return out


def _param_name_of(expr: Expr, params: set[str]) -> str | None:
    if isinstance(expr, Ref) and expr.name in params:
        return expr.name
    return None


def _assign_target_of(body, next_var: str, params: set[str], state_reg: str):
    """Body must be exactly `next_var = <param or state_reg>`; returns the
    state-param name or 'SELF'."""
    if len(body) != 1 or not isinstance(body[0], BlockingAssign):
        return None
    stmt = body[0]
    if stmt.target != next_var:
        return None
    p = _param_name_of(stmt.rhs, params)
    if p is not None:
        return p
    if isinstance(stmt.rhs, Ref) and stmt.rhs.name == state_reg:
        return "SELF"
    return None


def _extract_with_binding(design: Design) -> tuple[SymbolicFsm, FsmBinding]:
    require_valid(design)
    try:
        clock_info = detect_clock(design)
    except Exception as e:  # no clocked logic at all
        raise NotAnFsm(f"no usable clock: {e}") from e
    wenv = WidthEnv(design)
    param_names = {p.name for p in design.parameters}

    candidates = _clocked_state_candidates(design, clock_info.reset)
    if not candidates:
        raise NotAnFsm("no clocked block updates a register from a next-state variable")
    if len(candidates) > 1:
        raise AmbiguousFsm(
            "two candidate state registers: "
            + ", ".join(c[1] for c in candidates)
        )
    clocked_idx, state_reg, next_var, reset_expr = candidates[0]

    # transition block: the comb block whose only target is next_var
    transition_idx = None
    for idx, item in enumerate(design.items):
        if isinstance(item, AlwaysBlock) and not item.sensitivity.is_clocked():
            if stmt_targets(item.body) == {next_var}:
                if transition_idx is not None:
                    raise AmbiguousFsm("two blocks drive the next-state variable")
                transition_idx = idx
    if transition_idx is None:
        raise NotAnFsm(f"no combinational block drives {next_var!r}")
    tblock = design.items[transition_idx]

    body = list(tblock.body)
    default_kind = None  # "self" | param name
    if body and isinstance(body[0], BlockingAssign) and body[0].target == next_var:
        rhs = body[0].rhs
        if isinstance(rhs, Ref) and rhs.name == state_reg:
            default_kind = "SELF"
        else:
            p = _param_name_of(rhs, param_names)
            if p is None:
                raise NotAnFsm("leading next-state default is not a state constant")
            default_kind = p
        body = body[1:]
    if len(body) != 1 or not isinstance(body[0], Case):
        raise NotAnFsm("transition block is not a single case over the state register")
    outer = body[0]
    if not (isinstance(outer.subject, Ref) and outer.subject.name == state_reg):
        raise NotAnFsm("transition case subject is not the state register")

    # collect per-state arms
    arm_of_state: dict[str, object] = {}
    for arm in outer.arms:
        for label in arm.labels:
            p = _param_name_of(label, param_names)
            if p is None:
                raise NotAnFsm("state case label is not a parameter")
            if p in arm_of_state:
                raise NotAnFsm(f"state {p!r} labeled twice")
            arm_of_state[p] = arm.body

    # discover the input subject and the labeled symbol values
    subject = None
    label_values: set[int] = set()
    arm_transitions: dict[str, object] = {}
    for state, abody in arm_of_state.items():
        direct = _assign_target_of(abody, next_var, param_names, state_reg)
        if direct is not None:
            arm_transitions[state] = direct
            continue
        if len(abody) != 1 or not isinstance(abody[0], Case):
            raise NotAnFsm(f"arm for {state!r} is neither assignment nor case")
        inner = abody[0]
        if not isinstance(inner.subject, Ref):
            raise NotAnFsm("inner case subject must be a plain input reference")
        name = inner.subject.name
        port = design.port(name)
        if port is None or port.direction != "input":
            raise NotAnFsm(f"inner case subject {name!r} is not an input port")
        if subject is None:
            subject = name
        elif subject != name:
            raise NotAnFsm("multiple input subjects in transition cases")
        width = wenv.width_of(name)
        entries = {}
        for arm in inner.arms:
            for label in arm.labels:
                try:
                    v = const_value(label, wenv.params)
                except Exception as e:
                    raise NotAnFsm(f"non-constant input label: {e}") from e
                if isinstance(label, Const) and label.width is not None and label.width != width:
                    raise NotAnFsm("unlabeled input bits")
                if v >= (1 << width):
                    raise NotAnFsm("unlabeled input bits")
                target = _assign_target_of(arm.body, next_var, param_names, state_reg)
                if target is None:
                    raise NotAnFsm(f"inner case arm for {state!r} is not a plain assignment")
                entries[v] = target
                label_values.add(v)
        default_target = None
        if inner.default is not None:
            default_target = _assign_target_of(inner.default, next_var, param_names, state_reg)
            if default_target is None:
                raise NotAnFsm("inner case default is not a plain assignment")
        arm_transitions[state] = (entries, default_target)

    if subject is None:
        # no inner case anywhere: a one-input-free FSM; use a virtual symbol
        raise NotAnFsm("transition block never scans an input")
    subject_width = wenv.width_of(subject)

    # state set: parameters named anywhere in the FSM structure, in
    # declaration order
    named = set(arm_of_state)
    for t in arm_transitions.values():
        if isinstance(t, str) and t != "SELF":
            named.add(t)
        elif isinstance(t, tuple):
            entries, default_target = t
            named |= {x for x in entries.values() if x != "SELF"}
            if default_target and default_target != "SELF":
                named.add(default_target)
    if default_kind and default_kind != "SELF":
        named.add(default_kind)
    reset_param = _param_name_of(reset_expr, param_names)
    if reset_param is None:
        try:
            reset_value = const_value(reset_expr, wenv.params)
        except Exception as e:
            raise NotAnFsm(f"reset value is not constant: {e}") from e
    else:
        named.add(reset_param)
        reset_value = wenv.params[reset_param]
    state_params = tuple(p.name for p in design.parameters if p.name in named)
    encodings = {p: wenv.params[p] for p in state_params}
    if len(set(encodings.values())) != len(encodings):
        raise NotAnFsm("two state parameters share an encoding")
    if reset_param is None:
        matches = [p for p, v in encodings.items() if v == reset_value]
        if not matches:
            raise NotAnFsm("reset value does not match any state parameter")
        reset_param = matches[0]

    symbols_values = sorted(label_values)
    alphabet = tuple(make_symbol(subject, v, subject_width) for v in symbols_values)

    transitions: dict[str, dict[str, tuple[str, ...]]] = {}
    for state in state_params:
        row: dict[str, tuple[str, ...]] = {}
        spec = arm_transitions.get(state)
        for v in symbols_values:
            sym = make_symbol(subject, v, subject_width)
            target = None
            if isinstance(spec, str):
                target = state if spec == "SELF" else spec
            elif isinstance(spec, tuple):
                entries, default_target = spec
                if v in entries:
                    target = state if entries[v] == "SELF" else entries[v]
                elif default_target is not None:
                    target = state if default_target == "SELF" else default_target
            if target is None and spec is None and outer.default is not None:
                d = _assign_target_of(outer.default, next_var, param_names, state_reg)
                if d is not None:
                    target = state if d == "SELF" else d
            if target is None and default_kind is not None:
                target = state if default_kind == "SELF" else default_kind
            if target is not None:
                row[sym] = (target,)
        transitions[state] = row

    # output logic: every other comb block reading the state register
    output_idxs = []
    output_signals: dict[str, int] = {}
    mealy = False
    data_inputs = {
        p.name
        for p in design.input_ports()
        if p.name not in (clock_info.clock, clock_info.reset)
    }
    for idx, item in enumerate(design.items):
        if idx == transition_idx or not isinstance(item, AlwaysBlock):
            continue
        if item.sensitivity.is_clocked():
            continue
        reads = {
            r
            for r in stmt_reads(item.body)
            if r not in param_names
        }
        if state_reg not in reads:
            continue
        extra = reads - {state_reg}
        if extra - {subject}:
            raise NotAnFsm(
                f"output logic reads unsupported signals: {sorted(extra - {subject})}"
            )
        if subject in extra:
            mealy = True
        output_idxs.append(idx)
        for t in sorted(stmt_targets(item.body)):
            output_signals[t] = wenv.width_of(t)
    # any other reader of the state register takes us outside the idiom
    for idx, item in enumerate(design.items):
        if idx in (clocked_idx, transition_idx) or idx in output_idxs:
            continue
        reads = (
            referenced_names(item.rhs)
            if isinstance(item, ContinuousAssign)
            else stmt_reads(item.body)
        )
        if state_reg in reads or next_var in reads:
            raise NotAnFsm("state register is read outside the FSM blocks")
    if not output_idxs:
        raise NotAnFsm("no output logic reads the state register")
    if mealy and len(symbols_values) != (1 << subject_width):
        raise NotAnFsm("mealy output logic with unlabeled input values")

    # evaluate output blocks per state (and per symbol when Mealy)
    ev = Evaluator(wenv)
    outputs: dict[str, dict[str, int]] = {}
    mealy_outputs: dict[tuple[str, str], dict[str, int]] = {}
    for state in state_params:
        moore_env = {state_reg: encodings[state]}
        for name in data_inputs:
            moore_env.setdefault(name, 0)
        if not mealy:
            sink: dict[str, int] = {}
            for idx in output_idxs:
                tmp = dict(moore_env)
                ev.exec_comb(design.items[idx].body, tmp)
                for t in stmt_targets(design.items[idx].body):
                    sink[t] = tmp[t]
            outputs[state] = dict(sorted(sink.items()))
        else:
            for v in symbols_values:
                env = dict(moore_env)
                env[subject] = v
                sink = {}
                for idx in output_idxs:
                    tmp = dict(env)
                    ev.exec_comb(design.items[idx].body, tmp)
                    for t in stmt_targets(design.items[idx].body):
                        sink[t] = tmp[t]
                sym = make_symbol(subject, v, subject_width)
                mealy_outputs[(state, sym)] = dict(sorted(sink.items()))

    fsm = SymbolicFsm(
        states=state_params,
        alphabet=alphabet,
        transitions=transitions,
        initial=reset_param,
        outputs=outputs if not mealy else None,
        mealy_outputs=mealy_outputs if mealy else None,
    )
    binding = FsmBinding(
        state_reg=state_reg,
        next_var=next_var,
        subject=subject,
        subject_width=subject_width,
        clock=clock_info.clock,
        reset=clock_info.reset,
        state_params=state_params,
        encodings=encodings,
        state_width=wenv.width_of(state_reg),
        clocked_idx=clocked_idx,
        transition_idx=transition_idx,
        output_idxs=tuple(output_idxs),
        output_signals=output_signals,
        mealy=mealy,
    )
    return fsm, binding


def extract_fsm(design: Design) -> SymbolicFsm:
    """Extract the symbolic FSM of a design; NotAnFsm/AmbiguousFsm on
    structural mismatch."""
    fsm, _ = _extract_with_binding(design)
    return fsm


# ---------------------------------------------------------------------------
# Compatibility and minimization


def _outputs_clash(fsm: SymbolicFsm, p: str, q: str) -> bool:
    if fsm.outputs is not None:
        op, oq = fsm.outputs.get(p, {}), fsm.outputs.get(q, {})
        for sig in set(op) & set(oq):
            if op[sig] != oq[sig]:
                return True
    if fsm.mealy_outputs is not None:
        for sym in fsm.alphabet:
            op = fsm.mealy_outputs.get((p, sym))
            oq = fsm.mealy_outputs.get((q, sym))
            if op is not None and oq is not None:
                for sig in set(op) & set(oq):
                    if op[sig] != oq[sig]:
                        return True
    if fsm.guards is not None:
        for sym in fsm.alphabet:
            if fsm.successors(p, sym) and fsm.successors(q, sym):
                gp = fsm.guards.get((p, sym))
                gq = fsm.guards.get((q, sym))
                if gp != gq:
                    return True
    return False


def compatibility_pairs(fsm: SymbolicFsm) -> set[frozenset[str]]:
    """Unordered pairs that agree on outputs wherever both are defined
    and whose successors are recursively compatible on commonly defined
    symbols (iterated marking to fixpoint)."""
    states = list(fsm.states)
    marked: set[frozenset[str]] = set()
    for p, q in itertools.combinations(states, 2):
        if _outputs_clash(fsm, p, q):
            marked.add(frozenset((p, q)))
    changed = True
    while changed:
        changed = False
        for p, q in itertools.combinations(states, 2):
            pair = frozenset((p, q))
            if pair in marked:
                continue
            for sym in fsm.alphabet:
                sp, sq = fsm.successors(p, sym), fsm.successors(q, sym)
                if not sp or not sq:
                    continue
                for a in sp:
                    for b in sq:
                        if a != b and frozenset((a, b)) in marked:
                            marked.add(pair)
                            changed = True
                            break
                    if pair in marked:
                        break
                if pair in marked:
                    break
    return {
        frozenset((p, q))
        for p, q in itertools.combinations(states, 2)
        if frozenset((p, q)) not in marked
    }


def _class_name(members: tuple[str, ...], order: dict[str, int], taken: set[str]) -> str:
    name = "_".join(sorted(members, key=lambda s: order[s]))
    while name in taken:
        name += "_m"
    return name


def _partition_refinement(fsm: SymbolicFsm, states: list[str]) -> list[tuple[str, ...]]:
    def out_sig(q):
        if fsm.mealy_outputs is not None:
            return tuple(
                tuple(sorted(fsm.mealy_outputs.get((q, s), {}).items()))
                for s in fsm.alphabet
            )
        return tuple(sorted((fsm.outputs or {}).get(q, {}).items()))

    block_of = {}
    sigs = {}
    for q in states:
        sigs.setdefault(out_sig(q), []).append(q)
    for i, members in enumerate(sigs.values()):
        for q in members:
            block_of[q] = i
    while True:
        new_sigs: dict[tuple, list[str]] = {}
        for q in states:
            sig = (
                block_of[q],
                tuple(block_of[fsm.successors(q, s)[0]] for s in fsm.alphabet),
            )
            new_sigs.setdefault(sig, []).append(q)
        if len(new_sigs) == len(set(block_of.values())):
            order = {q: i for i, q in enumerate(fsm.states)}
            blocks = [tuple(sorted(m, key=lambda s: order[s])) for m in new_sigs.values()]
            blocks.sort(key=lambda b: order[b[0]])
            return blocks
        new_block_of = {}
        for i, members in enumerate(new_sigs.values()):
            for q in members:
                new_block_of[q] = i
        block_of = new_block_of


def _all_compatible_classes(states: list[str], compatible: set[frozenset[str]]):
    """All nonempty pairwise-compatible subsets, deterministically ordered."""
    classes: list[tuple[str, ...]] = []
    n = len(states)
    for r in range(1, n + 1):
        for combo in itertools.combinations(states, r):
            ok = all(
                frozenset((a, b)) in compatible
                for a, b in itertools.combinations(combo, 2)
            )
            if ok:
                classes.append(combo)
    return classes


def _implied(fsm: SymbolicFsm, members: tuple[str, ...], symbol: str) -> frozenset[str]:
    out = set()
    for q in members:
        out.update(fsm.successors(q, symbol))
    return frozenset(out)


def _cover_is_closed(fsm: SymbolicFsm, cover: list[tuple[str, ...]]) -> bool:
    sets = [frozenset(c) for c in cover]
    for members in cover:
        for sym in fsm.alphabet:
            implied = _implied(fsm, members, sym)
            if implied and not any(implied <= s for s in sets):
                return False
    return True


def minimal_closed_cover(
    fsm: SymbolicFsm,
    states: list[str],
    compatible: set[frozenset[str]],
    exact_limit: int = 12,
) -> tuple[list[tuple[str, ...]], bool]:
    """Smallest set of compatibility classes covering ``states`` whose
    implied classes stay inside the cover. Exact (branch and bound over
    sizes) up to ``exact_limit`` states, greedy beyond."""
    if len(states) > exact_limit:
        return _greedy_cover(fsm, states, compatible), False
    classes = _all_compatible_classes(states, compatible)
    by_state: dict[str, list[int]] = {q: [] for q in states}
    for i, c in enumerate(classes):
        for q in c:
            by_state[q].append(i)

    order = {q: i for i, q in enumerate(fsm.states)}

    for k in range(1, len(states) + 1):
        chosen: list[int] = []

        def dfs(covered: frozenset[str]) -> list[int] | None:
            if len(chosen) > k:
                return None
            if covered >= frozenset(states):
                cover = [classes[i] for i in chosen]
                if _cover_is_closed(fsm, cover):
                    return list(chosen)
                return None
            if len(chosen) == k:
                return None
            target = min(
                (q for q in states if q not in covered), key=lambda q: order[q]
            )
            for ci in by_state[target]:
                if ci in chosen:
                    continue
                chosen.append(ci)
                res = dfs(covered | frozenset(classes[ci]))
                if res is not None:
                    return res
                chosen.pop()
            return None

        res = dfs(frozenset())
        if res is not None:
            return [classes[i] for i in res], True
    return [tuple((q,)) for q in states], True  # unreachable in practice


def _greedy_cover(fsm: SymbolicFsm, states, compatible):
    classes = _all_compatible_classes(states, compatible)
    classes.sort(key=lambda c: (-len(c), c))
    cover: list[tuple[str, ...]] = []
    covered: set[str] = set()
    for c in classes:
        if not set(c) <= covered:
            cover.append(c)
            covered.update(c)
        if covered >= set(states):
            break
    # close the cover: implied sets must land inside some class
    changed = True
    while changed:
        changed = False
        sets = [frozenset(c) for c in cover]
        for members in list(cover):
            for sym in fsm.alphabet:
                implied = _implied(fsm, members, sym)
                if implied and not any(implied <= s for s in sets):
                    order = {q: i for i, q in enumerate(fsm.states)}
                    cover.append(tuple(sorted(implied, key=lambda q: order[q])))
                    changed = True
                    break
            if changed:
                break
    return cover


def _quotient(
    fsm: SymbolicFsm,
    cover: list[tuple[str, ...]],
    reachable: list[str],
    dropped: list[str],
    exact: bool,
) -> tuple[SymbolicFsm, StateMapping]:
    order = {q: i for i, q in enumerate(fsm.states)}
    cover = sorted(cover, key=lambda c: min(order[q] for q in c))
    # first containing class wins; induced blocks partition the states
    assigned: dict[str, int] = {}
    for idx, members in enumerate(cover):
        for q in members:
            assigned.setdefault(q, idx)
    blocks: dict[int, list[str]] = {i: [] for i in range(len(cover))}
    for q in reachable:
        blocks[assigned[q]].append(q)

    taken: set[str] = set()
    names: dict[int, str] = {}
    for idx, members in enumerate(cover):
        base = tuple(blocks[idx]) if blocks[idx] else members
        name = _class_name(tuple(base), order, taken)
        taken.add(name)
        names[idx] = name

    mapping = {q: names[assigned[q]] for q in reachable}
    for q in dropped:
        mapping[q] = _class_name((q,), order, taken)
        taken.add(mapping[q])

    sets = [frozenset(c) for c in cover]
    transitions: dict[str, dict[str, tuple[str, ...]]] = {}
    outputs: dict[str, dict[str, int]] = {}
    mealy: dict[tuple[str, str], dict[str, int]] = {}
    for idx, members in enumerate(cover):
        row: dict[str, tuple[str, ...]] = {}
        for sym in fsm.alphabet:
            implied = _implied(fsm, members, sym)
            if not implied:
                continue
            target = next(i for i, s in enumerate(sets) if implied <= s)
            row[sym] = (names[target],)
        transitions[names[idx]] = row
        if fsm.outputs is not None:
            merged: dict[str, int] = {}
            for q in members:
                for sig, val in fsm.outputs.get(q, {}).items():
                    merged[sig] = val
            outputs[names[idx]] = dict(sorted(merged.items()))
        if fsm.mealy_outputs is not None:
            for sym in fsm.alphabet:
                merged = {}
                for q in members:
                    for sig, val in fsm.mealy_outputs.get((q, sym), {}).items():
                        merged[sig] = val
                if merged:
                    mealy[(names[idx], sym)] = dict(sorted(merged.items()))

    state_order = [names[i] for i in range(len(cover))]
    minimized = SymbolicFsm(
        states=tuple(state_order),
        alphabet=fsm.alphabet,
        transitions=transitions,
        initial=mapping[fsm.initial],
        outputs=outputs if fsm.outputs is not None else None,
        mealy_outputs=mealy if fsm.mealy_outputs is not None else None,
    )
    return minimized, StateMapping(mapping, exact=exact)


def minimize(fsm: SymbolicFsm) -> tuple[SymbolicFsm, StateMapping]:
    """Minimize an FSM: exact partition refinement for complete
    deterministic machines, closed-cover search for partial ones.

    Unreachable states are dropped first and map to singleton classes.
    """
    reachable = fsm.reachable()
    if fsm.initial not in reachable:
        raise UnreachableInitial("initial state unreachable")
    dropped = [q for q in fsm.states if q not in reachable]

    sub = fsm
    if dropped:
        sub = SymbolicFsm(
            states=tuple(reachable),
            alphabet=fsm.alphabet,
            transitions={q: dict(fsm.transitions.get(q, {})) for q in reachable},
            initial=fsm.initial,
            outputs={q: v for q, v in (fsm.outputs or {}).items() if q in reachable}
            if fsm.outputs is not None
            else None,
            mealy_outputs={
                k: v for k, v in (fsm.mealy_outputs or {}).items() if k[0] in set(reachable)
            }
            if fsm.mealy_outputs is not None
            else None,
            guards=fsm.guards,
        )

    if (
        sub.is_deterministic_complete()
        and sub.guards is None
        and _outputs_fully_specified(sub)
    ):
        blocks = _partition_refinement(sub, list(sub.states))
        return _quotient(fsm, blocks, reachable, dropped, exact=True)

    compatible = compatibility_pairs(sub)
    cover, exact = minimal_closed_cover(sub, list(sub.states), compatible)
    return _quotient(fsm, cover, reachable, dropped, exact=exact)


def _outputs_fully_specified(fsm: SymbolicFsm) -> bool:
    """Every state (or transition, for Mealy) defines the same signals;
    partially specified outputs force the compatibility-cover path."""
    if fsm.mealy_outputs is not None:
        signal_sets = {
            frozenset((fsm.mealy_outputs.get((q, s)) or {}).keys())
            for q in fsm.states
            for s in fsm.alphabet
        }
        return len(signal_sets) == 1
    if fsm.outputs is None:
        return True
    signal_sets = {frozenset(fsm.outputs.get(q, {}).keys()) for q in fsm.states}
    return len(signal_sets) == 1


# ---------------------------------------------------------------------------
# Re-emission


def reemit(design: Design, minimized: SymbolicFsm, mapping: StateMapping) -> Design:
    """Rebuild the design around the minimized FSM.

    State parameters become the merged-class names with binary encodings
    assigned in BFS order from the initial state; the transition and
    output blocks are rewritten; everything else is preserved verbatim.
    Name collisions get an ``_m`` suffix.
    """
    _, binding = _extract_with_binding(design)

    # BFS encoding from the initial state, symbol order = alphabet order
    bfs = [minimized.initial]
    seen = {minimized.initial}
    i = 0
    while i < len(bfs):
        q = bfs[i]
        i += 1
        for sym in minimized.alphabet:
            for s in minimized.successors(q, sym):
                if s not in seen:
                    seen.add(s)
                    bfs.append(s)
    for q in minimized.states:
        if q not in seen:
            bfs.append(q)
            seen.add(q)
    n = len(bfs)
    width = max((n - 1).bit_length(), 1)

    taken = (
        {p.name for p in design.ports}
        | {d.name for d in design.decls}
        | {p.name for p in design.parameters if p.name not in binding.state_params}
    )
    final_names: dict[str, str] = {}
    for q in minimized.states:
        name = q
        while name in taken or name in final_names.values():
            name += "_m"
        final_names[q] = name
    encodings = {q: idx for idx, q in enumerate(bfs)}

    def state_const(q: str) -> Ref:
        return Ref(final_names[q])

    new_params = tuple(
        p for p in design.parameters if p.name not in binding.state_params
    ) + tuple(
        Parameter(final_names[q], Const(encodings[q], width))
        for q in minimized.states
    )

    def retype_decl(d: Decl) -> Decl:
        if d.name in (binding.state_reg, binding.next_var):
            if width > 1:
                return replace(d, msb=Const(width - 1), lsb=Const(0))
            return replace(d, msb=None, lsb=None)
        return d

    new_decls = tuple(retype_decl(d) for d in design.decls)
    new_ports = []
    for p in design.ports:
        if p.name in (binding.state_reg, binding.next_var):
            if width > 1:
                new_ports.append(replace(p, msb=Const(width - 1), lsb=Const(0)))
            else:
                new_ports.append(replace(p, msb=None, lsb=None))
        else:
            new_ports.append(p)

    clocked = AlwaysBlock(
        sensitivity=design.items[binding.clocked_idx].sensitivity,
        body=(
            If(
                Ref(binding.reset),
                (NonblockingAssign(binding.state_reg, state_const(minimized.initial)),),
                (NonblockingAssign(binding.state_reg, Ref(binding.next_var)),),
            ),
        ),
    )

    arms = []
    for q in minimized.states:
        inner_arms = []
        for sym in minimized.alphabet:
            succs = minimized.successors(q, sym)
            if not succs:
                continue
            _, value, w = symbol_value(sym)
            inner_arms.append(
                CaseArm(
                    (Const(value, binding.subject_width),),
                    (BlockingAssign(binding.next_var, state_const(succs[0])),),
                )
            )
        if inner_arms:
            arms.append(
                CaseArm(
                    (state_const(q),),
                    (Case(Ref(binding.subject), tuple(inner_arms), None),),
                )
            )
    transition = AlwaysBlock(
        sensitivity=Sensitivity("star"),
        body=(
            BlockingAssign(binding.next_var, Ref(binding.state_reg)),
            Case(Ref(binding.state_reg), tuple(arms), None),
        ),
    )

    out_stmts: list = []
    for sig in sorted(binding.output_signals):
        out_stmts.append(BlockingAssign(sig, Const(0)))
    out_arms = []
    for q in minimized.states:
        body: list = []
        if minimized.outputs is not None:
            vals = minimized.outputs.get(q, {})
            for sig in sorted(vals):
                body.append(BlockingAssign(sig, Const(vals[sig])))
        else:
            inner = []
            for sym in minimized.alphabet:
                vals = (minimized.mealy_outputs or {}).get((q, sym), {})
                stmts = tuple(
                    BlockingAssign(sig, Const(vals[sig])) for sig in sorted(vals)
                )
                if stmts:
                    _, value, _ = symbol_value(sym)
                    inner.append(CaseArm((Const(value, binding.subject_width),), stmts))
            if inner:
                body.append(Case(Ref(binding.subject), tuple(inner), None))
        if body:
            out_arms.append(CaseArm((state_const(q),), tuple(body)))
    out_block = AlwaysBlock(
        sensitivity=Sensitivity("star"),
        body=tuple(out_stmts) + (Case(Ref(binding.state_reg), tuple(out_arms), None),),
    )

    new_items = []
    emitted_outputs = False
    for idx, item in enumerate(design.items):
        if idx == binding.clocked_idx:
            new_items.append(clocked)
        elif idx == binding.transition_idx:
            new_items.append(transition)
        elif idx in binding.output_idxs:
            if not emitted_outputs:
                new_items.append(out_block)
                emitted_outputs = True
        else:
            new_items.append(item)

    result = replace(
        design,
        parameters=new_params,
        ports=tuple(new_ports),
        decls=new_decls,
        items=tuple(new_items),
    )
    require_valid(result)
    return result
