from dataclasses import replace

import pytest

from symrtlo.cost import cost, lower, register_bits
from symrtlo.parser import parse

from .conftest import ALL_FIXTURES, load


def test_single_operator_counts():
    d = parse("module m(input [3:0] a, input [3:0] b, output [3:0] y);"
              " assign y = a + b; endmodule")
    report = cost(d)
    assert report.cells == 1
    assert report.histogram == {"add": 1}
    assert report.wires == 3
    assert lower(d).nets == ("a", "b", "y")


def test_empty_module():
    report = cost(parse("module m(input a, output y); endmodule"))
    assert report.wires == 2 and report.cells == 0 and report.depth == 0
    assert report.area_proxy == 0


def test_cells_sum_matches_histogram():
    for name in ALL_FIXTURES:
        report = cost(load(name))
        assert report.cells == sum(report.histogram.values())
        assert report.wires >= 0 and report.depth >= 0


def test_dce_strictly_reduces_cells():
    before = cost(load("dead_code_raw.v"))
    after = cost(load("dead_code_expected.v"))
    assert after.cells < before.cells
    assert after.wires < before.wires


def test_cse_strictly_reduces_cells():
    before = cost(load("subexpr_raw.v"))
    after = cost(load("subexpr_expected.v"))
    assert after.cells < before.cells


def test_dead_assign_injection_never_decreases_cells():
    base = load("subexpr_expected.v")
    extra = parse(
        "module t #(parameter BW = 8) (input [BW-1:0] a, output [BW-1:0] q);"
        " assign q = a * a + 7; endmodule"
    ).items[0]
    injected = replace(
        base,
        items=base.items + (replace(extra, target="dead_net"),),
    )
    assert cost(injected).cells >= cost(base).cells


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_item_removal_monotone(name):
    d = load(name)
    full = cost(d)
    for i in range(len(d.items)):
        pruned = replace(d, items=d.items[:i] + d.items[i + 1:])
        try:
            smaller = cost(pruned)
        except Exception:
            continue  # removal can invalidate the design; not a cost question
        assert smaller.cells <= full.cells
        assert smaller.area_proxy <= full.area_proxy
        assert smaller.depth <= full.depth


def test_determinism():
    d = load("fsm_six_state.v")
    assert cost(d).to_dict() == cost(d).to_dict()


def test_fsm_minimization_shrinks_register_bits():
    from symrtlo.fsm import extract_fsm, minimize, reemit

    d = load("fsm_six_state.v")
    mini, mapping = minimize(extract_fsm(d))
    out = reemit(d, mini, mapping)
    assert register_bits(d) == 3
    assert register_bits(out) == 2


def test_mux_counts_from_case_blocks():
    report = cost(load("mux_chain.v"))
    assert report.histogram.get("mux", 0) >= 2
    assert report.histogram.get("cmp", 0) >= 2
