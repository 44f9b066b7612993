import json
import random

import pytest

from symrtlo.errors import CombinationalLoop, MissingInput, NoClockFound
from symrtlo.nodes import Binary, Const, Ref, walk_exprs
from symrtlo.parser import parse
from symrtlo.sim import (
    Assignment,
    Evaluator,
    eval_comb,
    fold_const,
    simulate,
)
from symrtlo.semantics import WidthEnv

from .conftest import load


def _a(values, width=8):
    return Assignment.of(values, {k: width for k in values})


def stim(values_list, width=2, name="input_signal"):
    return [Assignment.of({name: v}, {name: width}) for v in values_list]


# hand-evaluated under the documented width rules: s1=3+5, s2=3*5,
# s3=3%5+2, s4=1+2+15, s5=(3-5) mod 256, s6=6*3+2+1-5
def test_eval_comb_subexpr_oracle():
    out = eval_comb(load("subexpr_raw.v"), _a({"a": 3, "b": 5, "c": 1, "d": 2}))
    assert out["s1"] == 8
    assert out["s2"] == 15
    assert out["s3"] == 5
    assert out["s4"] == 18
    assert out["s5"] == 254
    assert out["s6"] == 16


def test_eval_comb_zero_case():
    d = parse("module m(input [3:0] a, output [3:0] y); assign y = a + 0; endmodule")
    assert eval_comb(d, _a({"a": 0}, 4))["y"] == 0


def test_eval_comb_detects_loop():
    d = parse(
        "module m(input a, output y); wire x; wire z;"
        " assign x = z; assign z = x; assign y = a; endmodule"
    )
    with pytest.raises(CombinationalLoop):
        eval_comb(d, _a({"a": 1}, 1))


def test_eval_comb_missing_input():
    d = parse("module m(input a, input b, output y); assign y = a & b; endmodule")
    with pytest.raises(MissingInput):
        eval_comb(d, _a({"a": 1}, 1))


def test_division_by_zero_yields_zero_with_warning():
    d = parse(
        "module m(input [3:0] a, input [3:0] b, output [3:0] y);"
        " assign y = a / b; endmodule"
    )
    assert eval_comb(d, _a({"a": 7, "b": 0}, 4))["y"] == 0


# state S0 emits 1; 01 drives S0->S1 (emit 0), then 00 drives S1->S0 (emit 1)
def test_simulate_fsm_single_step():
    t = simulate(load("fsm_six_state.v"), stim([0b00]))
    assert [o["output_signal"] for _, o in t.steps] == [1]


def test_simulate_fsm_two_steps():
    t = simulate(load("fsm_six_state.v"), stim([0b01, 0b00]))
    assert [o["output_signal"] for _, o in t.steps] == [0, 1]


def test_simulate_empty_stimulus():
    t = simulate(load("fsm_six_state.v"), [])
    assert t.steps == () and t.reset_cycles == 1


def test_simulate_determinism():
    d = load("fsm_six_state.v")
    s = stim([0, 1, 2, 3, 1, 0])
    assert simulate(d, s) == simulate(d, s)


def test_simulate_requires_clock():
    with pytest.raises(NoClockFound):
        simulate(load("subexpr_raw.v"), [])


def test_nonblocking_commit_is_order_independent():
    # two clocked blocks exchanging values: a swap, not a shift
    src_a = (
        "module m(input clk, input rst, output reg [3:0] p, output reg [3:0] q);"
        " always @(posedge clk or posedge rst) begin"
        "   if (rst) p <= 4'b0001; else p <= q; end"
        " always @(posedge clk or posedge rst) begin"
        "   if (rst) q <= 4'b0010; else q <= p; end"
        " endmodule"
    )
    src_b = (
        "module m(input clk, input rst, output reg [3:0] p, output reg [3:0] q);"
        " always @(posedge clk or posedge rst) begin"
        "   if (rst) q <= 4'b0010; else q <= p; end"
        " always @(posedge clk or posedge rst) begin"
        "   if (rst) p <= 4'b0001; else p <= q; end"
        " endmodule"
    )
    steps = [Assignment.of({}, {})] * 3
    ta = simulate(parse(src_a), steps)
    tb = simulate(parse(src_b), steps)
    assert [o.values() for _, o in ta.steps] == [o.values() for _, o in tb.steps]
    assert ta.steps[0][1].values() == {"p": 2, "q": 1}  # swapped once


def test_trace_jsonl_format():
    t = simulate(load("toggle.v"), [Assignment.of({"go": 1}, {"go": 1})])
    lines = t.to_jsonl().strip().split("\n")
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["inputs"] == {"go": 1}
    assert set(doc["outputs"]) == {"out"}


def test_state_snapshots_recorded():
    t = simulate(load("toggle.v"), stim([1, 1], width=1, name="go"), record_state=True)
    assert t.state_snapshots is not None
    assert [s["state"] for s in t.state_snapshots] == [1, 0]


# -- fold_const --------------------------------------------------------------


def _expr(src: str):
    return parse(f"module m(input [7:0] a, output [7:0] y); assign y = {src}; endmodule").items[0].rhs


def test_fold_constant_arithmetic():
    folded = fold_const(_expr("(2 + 3) * a"))
    assert folded == Binary("*", Const(5), Ref("a"))


def test_fold_leaves_mixed_expression():
    e = _expr("a + 23")
    assert fold_const(e) == e


def test_fold_shift_and_logic():
    folded = fold_const(_expr("(4 >> 1) + (1 && 0)"))
    assert isinstance(folded, Const) and folded.value == 2


def test_fold_division_by_zero_reported_unfolded():
    warnings: list[str] = []
    e = _expr("7 / 0")
    assert fold_const(e, warnings) == e
    assert warnings and "zero" in warnings[0]


def test_fold_is_fixpoint_and_never_grows():
    rng = random.Random(11)
    for _ in range(200):
        e = _random_expr(rng, 3)
        once = fold_const(e)
        assert fold_const(once) == once
        assert _size(once) <= _size(e)


def _size(e):
    return sum(1 for _ in walk_exprs(e))


_VARS = ["a", "b", "c", "d"]
_OPS = ["+", "-", "*", "/", "%", "<<", ">>", "&", "|", "^", "==", "<", "&&"]


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.35:
        if rng.random() < 0.5:
            return Const(rng.randint(0, 255), 8)
        return Ref(rng.choice(_VARS))
    return Binary(
        rng.choice(_OPS), _random_expr(rng, depth - 1), _random_expr(rng, depth - 1)
    )


def test_fold_soundness_random():
    # 1000 random expressions over <=4 variables of width <=8: folding
    # must preserve evaluation on sampled environments
    rng = random.Random(7)
    d = parse(
        "module m(input [7:0] a, input [7:0] b, input [7:0] c, input [7:0] d,"
        " output [7:0] y); assign y = a; endmodule"
    )
    wenv = WidthEnv(d)
    ev = Evaluator(wenv)
    for _ in range(1000):
        e = _random_expr(rng, 3)
        folded = fold_const(e)
        for _ in range(5):
            env = {v: rng.randint(0, 255) for v in _VARS}
            assert ev.eval(e, env) == ev.eval(folded, env)
