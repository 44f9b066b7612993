import json
import random

import pytest

from symrtlo.errors import AmbiguousFsm, NotAnFsm
from symrtlo.fsm import (
    SymbolicFsm,
    compatibility_pairs,
    extract_fsm,
    fsm_from_json,
    make_symbol,
    minimal_closed_cover,
    minimize,
    reemit,
)
from symrtlo.parser import parse
from symrtlo.verify import check_equiv_seq

from . import helpers
from .conftest import load

# the reduced six-state machine: classes {S0,S4} and {S3,S5}
REDUCED_TRANSITIONS = {
    "S2": {"00": "S1", "01": "S3_S5", "10": "S2", "11": "S0_S4"},
    "S0_S4": {"00": "S0_S4", "01": "S1", "10": "S2", "11": "S3_S5"},
    "S1": {"00": "S0_S4", "01": "S3_S5", "10": "S1", "11": "S3_S5"},
    "S3_S5": {"00": "S1", "01": "S0_S4", "10": "S0_S4", "11": "S3_S5"},
}
REDUCED_OUTPUTS = {"S2": 1, "S0_S4": 1, "S1": 0, "S3_S5": 0}


@pytest.fixture(scope="module")
def six_state():
    return load("fsm_six_state.v")


@pytest.fixture(scope="module")
def six_state_fsm(six_state):
    return extract_fsm(six_state)


# -- extraction ----------------------------------------------------------------


def test_extract_states_and_alphabet(six_state_fsm):
    fsm = six_state_fsm
    assert fsm.states == ("S0", "S1", "S2", "S3", "S4", "S5")
    assert fsm.alphabet == tuple(f"input_signal={b}" for b in ("00", "01", "10", "11"))
    assert fsm.initial == "S0"
    assert fsm.outputs == {
        "S0": {"output_signal": 1},
        "S1": {"output_signal": 0},
        "S2": {"output_signal": 1},
        "S3": {"output_signal": 0},
        "S4": {"output_signal": 1},
        "S5": {"output_signal": 0},
    }


def test_extract_explicit_transitions(six_state_fsm):
    fsm = six_state_fsm
    assert fsm.successors("S0", "input_signal=11") == ("S3",)
    assert fsm.successors("S2", "input_signal=00") == ("S1",)
    assert fsm.successors("S5", "input_signal=10") == ("S0",)


def test_extract_completes_missing_arms_as_self_loops(six_state_fsm):
    # the leading `next_state = current_state;` fills the unlisted arms
    assert six_state_fsm.successors("S1", "input_signal=10") == ("S1",)
    assert six_state_fsm.successors("S5", "input_signal=11") == ("S5",)


def test_extract_rejects_combinational_design():
    with pytest.raises(NotAnFsm):
        extract_fsm(load("subexpr_raw.v"))


def test_extract_rejects_two_state_registers():
    src = """
module twofsm(input clk, input rst, input [0:0] go, output reg o1, output reg o2);
  parameter A0 = 1'b0, A1 = 1'b1;
  reg sa, na, sb, nb;
  always @(*) begin o1 = 0; case (sa) A1: o1 = 1; default: o1 = 0; endcase end
  always @(*) begin o2 = 0; case (sb) A1: o2 = 1; default: o2 = 0; endcase end
  always @(posedge clk or posedge rst) begin
    if (rst) sa <= A0; else sa <= na;
  end
  always @(posedge clk or posedge rst) begin
    if (rst) sb <= A0; else sb <= nb;
  end
  always @(*) begin na = sa; case (sa) A0: case (go) 1'b1: na = A1; endcase endcase end
  always @(*) begin nb = sb; case (sb) A0: case (go) 1'b1: nb = A1; endcase endcase end
endmodule
"""
    with pytest.raises(AmbiguousFsm):
        extract_fsm(parse(src))


def test_extract_json_mirrors_symbolic_shape(six_state_fsm):
    doc = json.loads(six_state_fsm.to_json())
    assert doc["states"] == list(six_state_fsm.states)
    assert doc["transitions"]["S0"]["input_signal=01"] == {"next_state": "S1"}
    assert doc["outputs"]["S4"] == {"output_signal": 1}
    rebuilt = fsm_from_json(doc)
    assert rebuilt.states == six_state_fsm.states
    assert rebuilt.transitions == six_state_fsm.transitions
    assert rebuilt.outputs == six_state_fsm.outputs


# -- minimization --------------------------------------------------------------


def test_minimize_six_state_matches_reduced_machine(six_state_fsm):
    mini, mapping = minimize(six_state_fsm)
    assert set(mini.states) == {"S2", "S0_S4", "S1", "S3_S5"}
    assert mapping.mapping == {
        "S0": "S0_S4", "S4": "S0_S4",
        "S3": "S3_S5", "S5": "S3_S5",
        "S1": "S1", "S2": "S2",
    }
    for state, row in REDUCED_TRANSITIONS.items():
        for bits, target in row.items():
            assert mini.successors(state, f"input_signal={bits}") == (target,)
    for state, value in REDUCED_OUTPUTS.items():
        assert mini.outputs[state] == {"output_signal": value}
    assert mini.initial == "S0_S4"
    assert mapping.exact


def test_minimize_already_minimal_toggle():
    fsm = extract_fsm(load("toggle.v"))
    mini, mapping = minimize(fsm)
    assert len(mini.states) == len(fsm.states) == 2
    assert mapping.mapping == {"OFF": "OFF", "ON": "ON"}


def test_minimize_idempotent(six_state_fsm):
    mini, _ = minimize(six_state_fsm)
    again, _ = minimize(mini)
    assert len(again.states) == len(mini.states)


def test_minimize_drops_unreachable():
    sym = make_symbol("inp", 0, 1)
    sym1 = make_symbol("inp", 1, 1)
    fsm = SymbolicFsm(
        states=("A", "B", "Z"),
        alphabet=(sym, sym1),
        transitions={
            "A": {sym: ("A",), sym1: ("B",)},
            "B": {sym: ("A",), sym1: ("B",)},
            "Z": {sym: ("A",), sym1: ("Z",)},
        },
        initial="A",
        outputs={"A": {"o": 0}, "B": {"o": 1}, "Z": {"o": 0}},
    )
    mini, mapping = minimize(fsm)
    assert set(mini.states) == {"A", "B"}
    assert mapping.mapping["Z"] == "Z"  # unreachable keeps its own class


def test_minimize_unreachable_initial():
    sym = make_symbol("inp", 0, 1)
    fsm = SymbolicFsm(
        states=("A",),
        alphabet=(sym,),
        transitions={"A": {sym: ("A",)}},
        initial="A",
        outputs={"A": {}},
    )
    # force an inconsistent machine by hand
    bad = SymbolicFsm(
        states=("A", "B"),
        alphabet=(sym,),
        transitions={"A": {sym: ("A",)}, "B": {sym: ("B",)}},
        initial="B",
        outputs={"A": {}, "B": {}},
    )
    assert minimize(fsm)[0].states == ("A",)
    mini, _ = minimize(bad)  # B is reachable (it is initial): fine
    assert mini.initial


def test_minimize_matches_bruteforce_on_random_complete(six_state_fsm):
    rng = random.Random(101)
    for _ in range(60):
        fsm = helpers.random_complete_moore(rng)
        mini, _ = minimize(fsm)
        assert len(mini.states) == helpers.brute_force_min_states(fsm)


def test_minimize_monotone_and_strict_when_compatible_pair_exists():
    rng = random.Random(55)
    for _ in range(40):
        fsm = helpers.random_complete_moore(rng)
        reach = fsm.reachable()
        mini, _ = minimize(fsm)
        assert len(mini.states) <= len(fsm.states)
        compat = compatibility_pairs(
            SymbolicFsm(
                states=tuple(reach),
                alphabet=fsm.alphabet,
                transitions={q: fsm.transitions[q] for q in reach},
                initial=fsm.initial,
                outputs={q: fsm.outputs[q] for q in reach},
            )
        )
        if compat:
            assert len(mini.states) < len(reach)


def test_mapping_consistency_on_random_complete():
    # applying the state mapping to the original transitions yields the
    # minimized transition function
    rng = random.Random(77)
    for _ in range(40):
        fsm = helpers.random_complete_moore(rng)
        mini, mapping = minimize(fsm)
        for q in fsm.reachable():
            for sym in fsm.alphabet:
                target = fsm.successors(q, sym)[0]
                assert mini.successors(mapping.mapping[q], sym) == (
                    mapping.mapping[target],
                )


# -- compatibility pairs ---------------------------------------------------------


def test_compat_pairs_six_state(six_state_fsm):
    pairs = compatibility_pairs(six_state_fsm)
    assert frozenset(("S0", "S4")) in pairs
    assert frozenset(("S3", "S5")) in pairs
    assert frozenset(("S0", "S1")) not in pairs  # outputs differ


def test_compat_differing_outputs_never_compatible():
    sym = make_symbol("inp", 0, 1)
    fsm = SymbolicFsm(
        states=("A", "B"),
        alphabet=(sym,),
        transitions={"A": {sym: ("A",)}, "B": {sym: ("B",)}},
        initial="A",
        outputs={"A": {"o": 0}, "B": {"o": 1}},
    )
    assert compatibility_pairs(fsm) == set()


def test_compat_unspecified_symbol_imposes_no_constraint():
    # three states; B leaves symbol 1 unspecified, so (A, B) compatibility
    # only depends on symbol 0; C clashes with A on outputs
    s0, s1 = make_symbol("inp", 0, 1), make_symbol("inp", 1, 1)
    fsm = SymbolicFsm(
        states=("A", "B", "C"),
        alphabet=(s0, s1),
        transitions={
            "A": {s0: ("A",), s1: ("C",)},
            "B": {s0: ("A",)},
            "C": {s0: ("C",), s1: ("C",)},
        },
        initial="A",
        outputs={"A": {"o": 0}, "B": {"o": 0}, "C": {"o": 1}},
    )
    pairs = compatibility_pairs(fsm)
    assert pairs == {frozenset(("A", "B"))}


def test_compat_guards_require_syntactic_equality():
    from symrtlo.nodes import Binary, Const, Ref

    s0 = make_symbol("inp", 0, 1)
    g1 = Binary(">", Ref("level"), Const(3))
    g2 = Binary(">", Ref("level"), Const(4))
    base = dict(
        states=("A", "B"),
        alphabet=(s0,),
        transitions={"A": {s0: ("A",)}, "B": {s0: ("B",)}},
        initial="A",
        outputs={"A": {"o": 0}, "B": {"o": 0}},
    )
    same = SymbolicFsm(**base, guards={("A", s0): g1, ("B", s0): g1})
    diff = SymbolicFsm(**base, guards={("A", s0): g1, ("B", s0): g2})
    assert frozenset(("A", "B")) in compatibility_pairs(same)
    assert frozenset(("A", "B")) not in compatibility_pairs(diff)


# -- partial machines -------------------------------------------------------------


def test_partial_minimize_small_known_machine():
    # A and B agree where both defined and must merge; C's output differs
    s0, s1 = make_symbol("inp", 0, 1), make_symbol("inp", 1, 1)
    fsm = SymbolicFsm(
        states=("A", "B", "C"),
        alphabet=(s0, s1),
        transitions={
            "A": {s0: ("B",), s1: ("C",)},
            "B": {s0: ("A",)},
            "C": {s0: ("C",)},
        },
        initial="A",
        outputs={"A": {"o": 0}, "B": {"o": 0}, "C": {"o": 1}},
    )
    mini, mapping = minimize(fsm)
    assert len(mini.states) == 2
    assert mapping.mapping["A"] == mapping.mapping["B"] == "A_B"
    assert mapping.exact


def test_partial_minimize_respects_closure_on_random(six_state_fsm):
    rng = random.Random(909)
    for _ in range(25):
        fsm = helpers.random_partial_moore(rng, max_states=6)
        mini, mapping = minimize(fsm)
        assert len(mini.states) <= len(fsm.reachable())
        assert helpers.defined_trace_equal(fsm, mini, mapping, depth=5)


def test_partial_cover_not_larger_than_exhaustive(six_state_fsm):
    rng = random.Random(4242)
    checked = 0
    while checked < 10:
        fsm = helpers.random_partial_moore(rng, max_states=6)
        reach = fsm.reachable()
        sub = SymbolicFsm(
            states=tuple(reach),
            alphabet=fsm.alphabet,
            transitions={q: fsm.transitions.get(q, {}) for q in reach},
            initial=fsm.initial,
            outputs={q: (fsm.outputs or {}).get(q, {}) for q in reach},
        )
        compat = compatibility_pairs(sub)
        cover, exact = minimal_closed_cover(sub, list(sub.states), compat)
        assert exact
        assert helpers.cover_is_valid(sub, cover)
        assert helpers.no_smaller_cover_exists(sub, compat, len(cover))
        checked += 1


# -- reemit -------------------------------------------------------------------


def test_reemit_six_state_golden(six_state):
    fsm = extract_fsm(six_state)
    mini, mapping = minimize(fsm)
    out = reemit(six_state, mini, mapping)
    # two state bits, parameters named by merge classes
    names = [p.name for p in out.parameters]
    assert set(names) == {"S0_S4", "S1", "S2", "S3_S5"}
    widths = {p.name: p for p in out.parameters}
    verdict = check_equiv_seq(six_state, out, "product")
    assert verdict.equivalent
    # encodings are BFS from the initial state
    from symrtlo.semantics import parameter_env

    env = parameter_env(out)
    assert env["S0_S4"] == 0 and env["S1"] == 1 and env["S2"] == 2 and env["S3_S5"] == 3


def test_reemit_exhaustive_short_sequences(six_state):
    # every input sequence of length <= 8 would be 4^8 = 65536 runs; the
    # product reachability proof covers them all, spot-check a few by
    # simulation as an independent probe
    from symrtlo.sim import Assignment, simulate

    fsm = extract_fsm(six_state)
    mini, mapping = minimize(fsm)
    out = reemit(six_state, mini, mapping)
    rng = random.Random(5)
    for _ in range(50):
        seq = [
            Assignment.of({"input_signal": rng.randint(0, 3)}, {"input_signal": 2})
            for _ in range(8)
        ]
        ta = simulate(six_state, seq)
        tb = simulate(out, seq)
        assert [o.values() for _, o in ta.steps] == [o.values() for _, o in tb.steps]


def test_reemit_identity_roundtrip():
    d = load("toggle.v")
    fsm = extract_fsm(d)
    mini, mapping = minimize(fsm)
    out = reemit(d, mini, mapping)
    fsm2 = extract_fsm(out)
    assert len(fsm2.states) == len(mini.states)
    assert fsm2.alphabet == fsm.alphabet
    assert check_equiv_seq(d, out, "product").equivalent


def test_reemit_single_state_machine():
    src = """
module one(input clk, input rst, input [0:0] go, output reg o);
  parameter A = 1'b0, B = 1'b1;
  reg s, n;
  always @(*) begin o = 0; case (s) A: o = 0; B: o = 0; endcase end
  always @(posedge clk or posedge rst) begin
    if (rst) s <= A; else s <= n;
  end
  always @(*) begin
    n = s;
    case (s)
      A: case (go) 1'b0: n = B; 1'b1: n = B; endcase
      B: case (go) 1'b0: n = A; 1'b1: n = A; endcase
    endcase
  end
endmodule
"""
    d = parse(src)
    fsm = extract_fsm(d)
    mini, mapping = minimize(fsm)
    assert len(mini.states) == 1
    out = reemit(d, mini, mapping)
    assert check_equiv_seq(d, out, "product").equivalent


def test_reemit_name_collision_gets_suffix():
    # a wire already called S0_S4 forces the merged class to rename
    src = """
module clash(input clk, input rst, input [1:0] input_signal, output reg output_signal, output S0_S4);
  parameter S0 = 3'b000, S1 = 3'b001, S2 = 3'b010, S3 = 3'b011, S4 = 3'b100, S5 = 3'b101;
  reg [2:0] current_state, next_state;
  assign S0_S4 = input_signal[0];
  always @(current_state) begin
    output_signal = 0;
    case (current_state)
      S0: output_signal = 1; S2: output_signal = 1; S4: output_signal = 1;
      default: output_signal = 0;
    endcase
  end
  always @(posedge clk or posedge rst) begin
    if (rst) current_state <= S0; else current_state <= next_state;
  end
  always @(*) begin
    next_state = current_state;
    case (current_state)
      S0: case (input_signal) 2'b00: next_state = S0; 2'b01: next_state = S1; 2'b10: next_state = S2; 2'b11: next_state = S3; endcase
      S1: case (input_signal) 2'b00: next_state = S0; 2'b01: next_state = S3; 2'b11: next_state = S5; endcase
      S2: case (input_signal) 2'b00: next_state = S1; 2'b01: next_state = S3; 2'b10: next_state = S2; 2'b11: next_state = S4; endcase
      S3: case (input_signal) 2'b00: next_state = S1; 2'b01: next_state = S0; 2'b10: next_state = S4; 2'b11: next_state = S5; endcase
      S4: case (input_signal) 2'b00: next_state = S0; 2'b01: next_state = S1; 2'b10: next_state = S2; 2'b11: next_state = S5; endcase
      S5: case (input_signal) 2'b00: next_state = S1; 2'b01: next_state = S4; 2'b10: next_state = S0; endcase
    endcase
  end
endmodule
"""
    d = parse(src)
    fsm = extract_fsm(d)
    mini, mapping = minimize(fsm)
    out = reemit(d, mini, mapping)
    names = {p.name for p in out.parameters}
    assert "S0_S4_m" in names and "S0_S4" not in names
    assert check_equiv_seq(d, out, "product").equivalent


def test_mealy_extraction_and_minimization():
    # output depends on state AND input: B and C behave identically
    src = """
module mealy(input clk, input rst, input [0:0] go, output reg tick);
  parameter A = 2'b00, B = 2'b01, C = 2'b10;
  reg [1:0] st, nx;
  always @(*) begin
    tick = 0;
    case (st)
      A: case (go) 1'b0: tick = 0; 1'b1: tick = 1; endcase
      B: case (go) 1'b0: tick = 1; 1'b1: tick = 0; endcase
      C: case (go) 1'b0: tick = 1; 1'b1: tick = 0; endcase
    endcase
  end
  always @(posedge clk or posedge rst) begin
    if (rst) st <= A; else st <= nx;
  end
  always @(*) begin
    nx = st;
    case (st)
      A: case (go) 1'b0: nx = B; 1'b1: nx = C; endcase
      B: case (go) 1'b0: nx = A; 1'b1: nx = B; endcase
      C: case (go) 1'b0: nx = A; 1'b1: nx = C; endcase
    endcase
  end
endmodule
"""
    d = parse(src)
    fsm = extract_fsm(d)
    assert fsm.mealy_outputs is not None and fsm.outputs is None
    assert fsm.mealy_outputs[("A", "go=1")] == {"tick": 1}
    assert fsm.mealy_outputs[("B", "go=0")] == {"tick": 1}
    mini, mapping = minimize(fsm)
    assert len(mini.states) == 2
    assert mapping.mapping["B"] == mapping.mapping["C"] == "B_C"
    out = reemit(d, mini, mapping)
    assert check_equiv_seq(d, out, "product").equivalent
