import json

from symrtlo.cli import main

from .conftest import fixture_path


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_optimize_writes_output_and_report(tmp_path, capsys):
    out_v = tmp_path / "out.v"
    report = tmp_path / "report.json"
    code, _, err = run(
        capsys,
        "optimize",
        "--input", str(fixture_path("dead_code_raw.v")),
        "--goal", "area",
        "--out", str(out_v),
        "--report", str(report),
        "--seed", "3",
    )
    assert code == 0
    assert "assign s1 = a + 23;" in out_v.read_text()
    doc = json.loads(report.read_text())
    assert doc["plan"]["goal"] == "area"
    assert doc["cost_after"]["cells"] < doc["cost_before"]["cells"]
    assert doc["seed"] == 3


def test_optimize_renders_figures(tmp_path, capsys):
    figdir = tmp_path / "figs"
    code, _, _ = run(
        capsys,
        "optimize",
        "--input", str(fixture_path("fsm_six_state.v")),
        "--goal", "area",
        "--out", str(tmp_path / "o.v"),
        "--figures", str(figdir),
    )
    assert code == 0
    names = {p.name for p in figdir.iterdir()}
    assert {"cost_breakdown.png", "cost_breakdown.csv", "fsm_states.png"} <= names
    csv_text = (figdir / "cost_breakdown.csv").read_text()
    assert csv_text.startswith("kind,cells_before,cells_after")
    assert all((figdir / n).stat().st_size > 0 for n in names)


def test_optimize_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.v"
    bad.write_text("module m(input a output y); endmodule")
    code, _, err = run(capsys, "optimize", "--input", str(bad), "--goal", "area")
    assert code == 2
    assert "error" in err


def test_optimize_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.v"
    bad.write_text("module m(input a, output y); assign y = ghost; endmodule")
    code, _, err = run(capsys, "optimize", "--input", str(bad), "--goal", "area")
    assert code == 2
    assert "undeclared" in err


def test_check_equiv_verdict_line_and_json(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "check-equiv",
        str(fixture_path("subexpr_raw.v")),
        str(fixture_path("subexpr_expected.v")),
        "--mode", "sat",
    )
    assert code == 0
    first, rest = out.split("\n", 1)
    assert first.startswith("EQUIVALENT")
    doc = json.loads(rest)
    assert doc["verdict"] == "equivalent" and doc["mode"] == "propositional"


def test_check_equiv_not_equivalent_exit_code(tmp_path, capsys):
    a = tmp_path / "a.v"
    b = tmp_path / "b.v"
    a.write_text("module m(input [3:0] x, output [3:0] y); assign y = x + 1; endmodule")
    b.write_text("module m(input [3:0] x, output [3:0] y); assign y = x; endmodule")
    code, out, _ = run(capsys, "check-equiv", str(a), str(b))
    assert code == 3
    assert out.startswith("NOT EQUIVALENT")


def test_check_equiv_bounded_mode(capsys):
    code, out, _ = run(
        capsys,
        "check-equiv",
        str(fixture_path("toggle.v")),
        str(fixture_path("toggle.v")),
        "--mode", "bounded:4",
    )
    assert code == 0
    assert out.startswith("INCONCLUSIVE")
    assert "depth 4" in out


def test_cost_json(capsys):
    code, out, _ = run(capsys, "cost", str(fixture_path("subexpr_raw.v")), "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["cells"] == 13 and doc["wires"] == 17


def test_fsm_min_dump_symbolic(capsys):
    code, out, _ = run(
        capsys, "fsm-min", str(fixture_path("fsm_six_state.v")), "--dump-symbolic"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["states"] == ["S0", "S1", "S2", "S3", "S4", "S5"]
    assert doc["transitions"]["S1"]["input_signal=10"] == {"next_state": "S1"}


def test_fsm_min_emits_minimized_verilog(tmp_path, capsys):
    out_v = tmp_path / "m.v"
    code, _, err = run(
        capsys, "fsm-min", str(fixture_path("fsm_six_state.v")), "--out", str(out_v)
    )
    assert code == 0
    assert "states 6 -> 4" in err
    assert "S0_S4" in out_v.read_text()


def test_fsm_min_rejects_combinational(capsys):
    code, _, err = run(capsys, "fsm-min", str(fixture_path("subexpr_raw.v")))
    assert code == 2
    assert "not an FSM" in err


def test_rules_search_cli(capsys):
    code, out, _ = run(
        capsys,
        "rules", "search", "eliminate multiplication by zero in assignments",
        "--goal", "area",
    )
    assert code == 0
    assert "Zero Multiplication Elimination" in out


def test_passk_cli(capsys):
    code, out, _ = run(capsys, "passk", "--n", "10", "--c", "5", "--k", "1", "5", "10")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "pass@1 = 0.500000"
    assert lines[2] == "pass@10 = 1.000000"


def test_cli_determinism(tmp_path, capsys):
    outs = []
    out_v = tmp_path / "o.v"
    for i in range(2):
        rep = tmp_path / f"r{i}.json"
        code, _, _ = run(
            capsys,
            "optimize",
            "--input", str(fixture_path("subexpr_raw.v")),
            "--goal", "area",
            "--out", str(out_v),
            "--report", str(rep),
            "--seed", "11",
        )
        assert code == 0
        doc = json.loads(rep.read_text())
        doc.pop("timings")
        outs.append((out_v.read_text(), json.dumps(doc, sort_keys=True)))
    assert outs[0] == outs[1]


def test_check_equiv_space_too_large_exit_code(tmp_path, capsys):
    wide = tmp_path / "wide.v"
    wide.write_text(
        "module m(input [31:0] x, output [31:0] y); assign y = x; endmodule"
    )
    code, _, err = run(capsys, "check-equiv", str(wide), str(wide), "--mode", "exhaustive")
    assert code == 4
    assert "exceeds exhaustive bound" in err
