"""Shared test machinery: random FSM generators and brute-force oracles.

The oracles here are deliberately independent of the library's
algorithms: the partition oracle enumerates every set partition and
checks the congruence conditions directly; the cover oracle enumerates
candidate class combinations by size.
"""

from __future__ import annotations

import itertools
import random

from symrtlo.fsm import SymbolicFsm, make_symbol


def random_complete_moore(rng: random.Random, max_states=6, max_symbols=4) -> SymbolicFsm:
    n = rng.randint(2, max_states)
    width = rng.choice([1, 2]) if max_symbols >= 4 else 1
    symbols = [make_symbol("inp", v, width) for v in range(1 << width)]
    states = tuple(f"S{i}" for i in range(n))
    transitions = {
        q: {s: (states[rng.randrange(n)],) for s in symbols} for q in states
    }
    outputs = {q: {"out": rng.randint(0, 1)} for q in states}
    return SymbolicFsm(
        states=states,
        alphabet=tuple(symbols),
        transitions=transitions,
        initial=states[0],
        outputs=outputs,
    )


def random_partial_moore(
    rng: random.Random,
    max_states=8,
    p_defined=0.7,
    p_output=0.85,
) -> SymbolicFsm:
    n = rng.randint(3, max_states)
    width = rng.choice([1, 2])
    symbols = [make_symbol("inp", v, width) for v in range(1 << width)]
    states = tuple(f"S{i}" for i in range(n))
    transitions = {}
    for q in states:
        row = {}
        for s in symbols:
            if rng.random() < p_defined:
                row[s] = (states[rng.randrange(n)],)
        transitions[q] = row
    outputs = {}
    for q in states:
        if rng.random() < p_output:
            outputs[q] = {"out": rng.randint(0, 1)}
        else:
            outputs[q] = {}
    return SymbolicFsm(
        states=states,
        alphabet=tuple(symbols),
        transitions=transitions,
        initial=states[0],
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# Oracle 1: exhaustive set-partition search for complete Moore machines


def set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]
        yield [[first]] + partition


def _restrict_reachable(fsm: SymbolicFsm) -> SymbolicFsm:
    reach = fsm.reachable()
    return SymbolicFsm(
        states=tuple(reach),
        alphabet=fsm.alphabet,
        transitions={q: dict(fsm.transitions.get(q, {})) for q in reach},
        initial=fsm.initial,
        outputs={q: v for q, v in (fsm.outputs or {}).items() if q in reach},
    )


def brute_force_min_states(fsm: SymbolicFsm) -> int:
    """Minimum block count over all partitions of the reachable states
    that are congruences: outputs constant per block, successors of a
    block land in a single block for every symbol."""
    sub = _restrict_reachable(fsm)
    states = list(sub.states)
    best = len(states)
    for partition in set_partitions(states):
        if len(partition) >= best:
            continue
        block_of = {}
        for i, block in enumerate(partition):
            for q in block:
                block_of[q] = i
        ok = True
        for block in partition:
            outs = {tuple(sorted((sub.outputs or {}).get(q, {}).items())) for q in block}
            if len(outs) > 1:
                ok = False
                break
            for sym in sub.alphabet:
                targets = {block_of[sub.successors(q, sym)[0]] for q in block}
                if len(targets) > 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            best = len(partition)
    return best


# ---------------------------------------------------------------------------
# Oracle 2: exhaustive closed-cover enumeration for partial machines


def all_compatible_classes_oracle(fsm: SymbolicFsm, compatible) -> list[tuple[str, ...]]:
    states = list(fsm.states)
    out = []
    for r in range(1, len(states) + 1):
        for combo in itertools.combinations(states, r):
            if all(
                frozenset((a, b)) in compatible
                for a, b in itertools.combinations(combo, 2)
            ):
                out.append(combo)
    return out


def cover_is_valid(fsm: SymbolicFsm, cover) -> bool:
    sets = [frozenset(c) for c in cover]
    if not frozenset().union(*sets) >= frozenset(fsm.states):
        return False
    for members in cover:
        for sym in fsm.alphabet:
            implied = set()
            for q in members:
                implied.update(fsm.successors(q, sym))
            if implied and not any(frozenset(implied) <= s for s in sets):
                return False
    return True


def no_smaller_cover_exists(fsm: SymbolicFsm, compatible, k: int, combo_cap=500000) -> bool:
    """Exhaustively confirm no closed cover with fewer than k classes
    exists. Raises if the enumeration would exceed ``combo_cap``."""
    classes = all_compatible_classes_oracle(fsm, compatible)
    total = 0
    for j in range(1, k):
        total += _ncombs(len(classes), j)
    if total > combo_cap:
        raise RuntimeError(
            f"cover oracle would enumerate {total} combos; regenerate the fixture"
        )
    for j in range(1, k):
        for combo in itertools.combinations(classes, j):
            if cover_is_valid(fsm, combo):
                return False
    return True


def _ncombs(n: int, k: int) -> int:
    import math

    return math.comb(n, k)


# ---------------------------------------------------------------------------
# Symbolic trace equivalence on defined sequences


def defined_trace_equal(
    original: SymbolicFsm, minimized: SymbolicFsm, mapping, depth: int
) -> bool:
    """Walk every input sequence (up to ``depth``) that stays inside the
    original's defined transitions; wherever the original defines an
    output value after a step, the minimized machine must produce it."""

    def walk(q_orig: str, q_min: str, remaining: int) -> bool:
        if remaining == 0:
            return True
        for sym in original.alphabet:
            succ_o = original.successors(q_orig, sym)
            if not succ_o:
                continue  # outside the defined domain: no obligation
            succ_m = minimized.successors(q_min, sym)
            if not succ_m:
                return False  # minimized must cover defined behavior
            no, nm = succ_o[0], succ_m[0]
            out_o = (original.outputs or {}).get(no, {})
            out_m = (minimized.outputs or {}).get(nm, {})
            for sig, val in out_o.items():
                if sig in out_m and out_m[sig] != val:
                    return False
                if sig not in out_m:
                    return False
            if not walk(no, nm, remaining - 1):
                return False
        return True

    return walk(original.initial, mapping.mapping[original.initial], depth)
