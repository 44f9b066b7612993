import random

import pytest

from symrtlo.errors import InterfaceMismatch, SpaceTooLarge
from symrtlo.parser import parse
from symrtlo.semantics import set_parameters
from symrtlo.sim import eval_comb, simulate
from symrtlo.verify import (
    check_equiv,
    check_equiv_comb,
    check_equiv_seq,
    gen_stimulus,
)

from .conftest import load


# -- gen_stimulus -------------------------------------------------------------


def test_exhaustive_enumeration_order():
    d = parse("module m(input [1:0] a, output y); assign y = a[0]; endmodule")
    stim = gen_stimulus(d, "exhaustive")
    assert [s["a"] for s in stim] == [0, 1, 2, 3]


def test_random_stimulus_reproducible():
    d = parse("module m(input [7:0] a, output y); assign y = a[0]; endmodule")
    a = gen_stimulus(d, "random", count=10, seed=7)
    b = gen_stimulus(d, "random", count=10, seed=7)
    assert a == b
    assert len(a) == 10


def test_exhaustive_space_too_large():
    d = parse("module m(input [31:0] a, output y); assign y = a[0]; endmodule")
    with pytest.raises(SpaceTooLarge):
        gen_stimulus(d, "exhaustive")


def test_sequential_stimulus_sequences():
    d = load("toggle.v")
    seqs = gen_stimulus(d, "random", count=4, seed=1, depth=5)
    assert len(seqs) == 4 and all(len(s) == 5 for s in seqs)
    assert all("go" in step for s in seqs for step in s)


# -- combinational equivalence --------------------------------------------------


def test_identity_plus_zero_equivalent():
    a = parse("module m(input [7:0] a, output [7:0] y); assign y = a + 0; endmodule")
    b = parse("module m(input [7:0] a, output [7:0] y); assign y = a; endmodule")
    assert check_equiv_comb(a, b, "exhaustive").equivalent
    assert check_equiv_comb(a, b, "sat").equivalent


def test_off_by_one_not_equivalent_with_replayable_cex():
    a = parse("module m(input [3:0] a, output [3:0] y); assign y = a + 1; endmodule")
    b = parse("module m(input [3:0] a, output [3:0] y); assign y = a; endmodule")
    for mode in ("exhaustive", "sat"):
        v = check_equiv_comb(a, b, mode)
        assert v.verdict == "not_equivalent"
        assert eval_comb(a, v.counterexample) != eval_comb(b, v.counterexample)


def test_subexpr_pair_bw2_exhaustive_and_bw8_sat():
    raw, exp = load("subexpr_raw.v"), load("subexpr_expected.v")
    small = check_equiv_comb(
        set_parameters(raw, {"BW": 2}), set_parameters(exp, {"BW": 2}), "exhaustive"
    )
    assert small.equivalent and small.bound == "2^8 vectors"
    assert check_equiv_comb(raw, exp, "sat").equivalent


def test_interface_mismatch_detected():
    a = parse("module m(input [3:0] a, output [3:0] y); assign y = a; endmodule")
    b = parse("module m(input [3:0] b, output [3:0] y); assign y = b; endmodule")
    with pytest.raises(InterfaceMismatch):
        check_equiv_comb(a, b)
    c = parse("module m(input [2:0] a, output [3:0] y); assign y = a; endmodule")
    with pytest.raises(InterfaceMismatch):
        check_equiv_comb(a, c)


def test_comb_check_rejects_sequential_inputs():
    with pytest.raises(InterfaceMismatch):
        check_equiv_comb(load("toggle.v"), load("toggle.v"))


def test_auto_picks_exhaustive_for_small_inputs():
    a = parse("module m(input [3:0] a, output [3:0] y); assign y = a; endmodule")
    assert check_equiv_comb(a, a, "auto").mode == "exhaustive"


def test_verdict_symmetry():
    a = parse("module m(input [3:0] a, output [3:0] y); assign y = a + 1; endmodule")
    b = parse("module m(input [3:0] a, output [3:0] y); assign y = a; endmodule")
    for mode in ("exhaustive", "sat"):
        assert (
            check_equiv_comb(a, b, mode).verdict
            == check_equiv_comb(b, a, mode).verdict
        )


def test_exhaustive_agrees_with_propositional_random_pairs():
    rng = random.Random(99)
    ops = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "<", "==", "&&"]

    def expr(depth):
        if depth == 0 or rng.random() < 0.35:
            return rng.choice(["a", "b", str(rng.randint(0, 7))])
        if rng.random() < 0.15:
            return f"({expr(depth-1)} ? {expr(depth-1)} : {expr(depth-1)})"
        return f"({expr(depth-1)} {rng.choice(ops)} {expr(depth-1)})"

    agreements = 0
    for _ in range(100):
        wa, wb, wy = rng.randint(1, 4), rng.randint(1, 4), rng.randint(1, 5)
        header = f"module m(input [{wa-1}:0] a, input [{wb-1}:0] b, output [{wy-1}:0] y);"
        d1 = parse(f"{header} assign y = {expr(3)}; endmodule")
        d2 = parse(f"{header} assign y = {expr(3)}; endmodule")
        ve = check_equiv_comb(d1, d2, "exhaustive")
        vp = check_equiv_comb(d1, d2, "sat")
        assert ve.verdict == vp.verdict
        if vp.verdict == "not_equivalent":
            assert eval_comb(d1, vp.counterexample) != eval_comb(d2, vp.counterexample)
        agreements += 1
    assert agreements == 100


# -- sequential equivalence -------------------------------------------------------


def test_seq_reflexive_product():
    d = load("fsm_six_state.v")
    v = check_equiv_seq(d, d, "product")
    assert v.equivalent and v.mode == "product_reachability"


def test_seq_bounded_positive_is_inconclusive():
    d = load("toggle.v")
    v = check_equiv_seq(d, d, "bounded", depth=6, vectors=8, seed=1)
    assert v.verdict == "inconclusive"
    assert "depth 6" in v.bound
    assert v.passed


def test_seq_mutated_transition_caught_with_replayable_sequence():
    d = load("fsm_six_state.v")
    # flip one transition: S5 on 01 goes to S1 instead of S4
    mutated_src = load("fsm_six_state.v")
    text = open("fixtures/fsm_six_state.v").read().replace(
        "S5: case (input_signal)\n                2'b00: next_state = S1;\n                2'b01: next_state = S4;",
        "S5: case (input_signal)\n                2'b00: next_state = S1;\n                2'b01: next_state = S1;",
    )
    mutated = parse(text)
    assert mutated != d
    v = check_equiv_seq(d, mutated, "product")
    assert v.verdict == "not_equivalent"
    seq = list(v.counterexample)
    ta = simulate(d, seq)
    tb = simulate(mutated, seq)
    assert ta.steps[-1][1] != tb.steps[-1][1]


def test_seq_minimized_pair_equivalent():
    from symrtlo.fsm import extract_fsm, minimize, reemit

    d = load("fsm_six_state.v")
    mini, mapping = minimize(extract_fsm(d))
    out = reemit(d, mini, mapping)
    assert check_equiv_seq(d, out, "product").equivalent
    bounded = check_equiv_seq(d, out, "bounded", depth=8, vectors=32, seed=0)
    assert bounded.passed and bounded.verdict == "inconclusive"


def test_check_equiv_auto_dispatch():
    comb = parse("module m(input a, output y); assign y = a; endmodule")
    assert check_equiv(comb, comb).mode == "exhaustive"
    seq = load("toggle.v")
    assert check_equiv(seq, seq).mode == "product_reachability"
