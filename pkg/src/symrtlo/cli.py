"""Command-line interface.

Subcommands: optimize, fsm-min, check-equiv, cost, rules, passk.
Exit codes: 0 success, 2 parse/validation error, 3 verification failure,
4 internal bound exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .cost import cost
from .emitter import emit
from .errors import (
    AmbiguousFsm,
    NotAnFsm,
    ParseError,
    SpaceTooLarge,
    StateSpaceTooLarge,
    SymrtloError,
    VerificationFailed,
)
from .fsm import extract_fsm, minimize, reemit
from .parser import parse_file
from .pipeline import OptimizeConfig, optimize_design, pass_at_k
from .rules import load_default_rules, load_rules, search
from .validation import validate
from .verify import check_equiv

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_BOUND = 4


def _load_validated(path: str):
    design = parse_file(path)
    diags = validate(design)
    for d in diags:
        print(d, file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        raise SystemExit(EXIT_PARSE)
    return design


def _cmd_optimize(args) -> int:
    design = _load_validated(args.input)
    config = OptimizeConfig(
        goal=args.goal,
        rules_path=args.rules,
        max_rules=args.max_rules,
        seed=args.seed,
        verify=args.verify,
        budget=args.budget,
        adapter=args.adapter,
    )
    try:
        optimized, report = optimize_design(design, config)
    except VerificationFailed as e:
        # keep the original: emit it unchanged so downstream flows never
        # consume an unverified artifact
        print(f"error: {e}", file=sys.stderr)
        if args.out:
            Path(args.out).write_text(emit(design), encoding="utf-8")
        return EXIT_VERIFY
    report.input_path = args.input
    report.output_path = args.out
    text = emit(optimized)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    if args.figures:
        from .figures import render_figures

        for path in render_figures(report, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    summary = (
        f"{args.input}: cells {report.cost_before.cells} -> "
        f"{report.cost_after.cells}, area proxy {report.cost_before.area_proxy} -> "
        f"{report.cost_after.area_proxy}"
    )
    if report.fsm_summary:
        summary += (
            f", fsm states {report.fsm_summary['original_states']} -> "
            f"{report.fsm_summary['minimized_states']}"
        )
    print(summary, file=sys.stderr)
    return EXIT_OK


def _cmd_fsm_min(args) -> int:
    design = _load_validated(args.input)
    try:
        fsm = extract_fsm(design)
    except (NotAnFsm, AmbiguousFsm) as e:
        print(f"error: not an FSM: {e}", file=sys.stderr)
        return EXIT_PARSE
    if args.dump_symbolic:
        print(fsm.to_json())
        return EXIT_OK
    minimized, mapping = minimize(fsm)
    if args.dump_minimized:
        print(minimized.to_json())
        return EXIT_OK
    out_design = reemit(design, minimized, mapping)
    text = emit(out_design)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    print(
        f"states {len(fsm.states)} -> {len(minimized.states)} "
        f"(exact={mapping.exact}); mapping: "
        + ", ".join(f"{k}->{v}" for k, v in sorted(mapping.mapping.items())),
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_check_equiv(args) -> int:
    a = _load_validated(args.a)
    b = _load_validated(args.b)
    mode = args.mode
    depth = 16
    if mode.startswith("bounded:"):
        depth = int(mode.split(":", 1)[1])
        mode = "bounded"
    try:
        verdict = check_equiv(a, b, mode, depth=depth, seed=args.seed)
    except SpaceTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BOUND
    label = {
        "equivalent": "EQUIVALENT",
        "not_equivalent": "NOT EQUIVALENT",
        "inconclusive": "INCONCLUSIVE",
    }[verdict.verdict]
    print(f"{label} (mode={verdict.mode}, bound={verdict.bound})")
    doc = json.dumps(verdict.to_dict(), indent=2)
    if args.report:
        Path(args.report).write_text(doc + "\n", encoding="utf-8")
    else:
        print(doc)
    return EXIT_OK if verdict.verdict == "equivalent" else (
        EXIT_VERIFY if verdict.verdict == "not_equivalent" else EXIT_OK
    )


def _cmd_cost(args) -> int:
    design = _load_validated(args.input)
    report = cost(design)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(f"wires:      {report.wires}")
        print(f"cells:      {report.cells}")
        print(f"area proxy: {report.area_proxy}")
        print(f"depth:      {report.depth}")
        for kind, n in sorted(report.histogram.items()):
            print(f"  {kind}: {n}")
    return EXIT_OK


def _cmd_rules_search(args) -> int:
    if args.rules:
        library, conflicts = load_rules(args.rules)
    else:
        library, conflicts = load_default_rules()
    results = search(
        args.query, args.goal, library, max_rules=args.max_rules, conflicts=conflicts
    )
    if args.json:
        print(
            json.dumps(
                [{"name": r.name, "score": s, "category": r.category,
                  "objective_improvement": r.objective_improvement,
                  "function_name": r.function_name} for r, s in results],
                indent=2,
            )
        )
    else:
        if not results:
            print("no matching rules")
        for rule, score in results:
            tag = rule.function_name or "(advisory)"
            print(f"{score:.4f}  {rule.name}  [{tag}]")
    return EXIT_OK


def _cmd_passk(args) -> int:
    values = pass_at_k(args.n, args.c, args.k)
    for k, v in zip(args.k, values):
        print(f"pass@{k} = {v:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symrtlo",
        description="Deterministic RTL optimization toolkit for a Verilog subset",
    )
    parser.add_argument("--version", action="version", version=f"symrtlo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run the full optimization pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--goal", choices=["area", "power", "timing"], default="area")
    p.add_argument("--out", help="output Verilog path (stdout when omitted)")
    p.add_argument("--report", help="write the JSON run report here")
    p.add_argument("--rules", help="rules file (bundled default when omitted)")
    p.add_argument("--max-rules", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--verify",
        default="auto",
        help="auto | exhaustive | sat | product | bounded:K",
    )
    p.add_argument("--budget", type=int, default=32)
    p.add_argument("--adapter", help="adapter name (default: structural)")
    p.add_argument("--figures", help="directory for report figures + CSV")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("fsm-min", help="extract and minimize the FSM")
    p.add_argument("input")
    p.add_argument("--out", help="output Verilog path (stdout when omitted)")
    p.add_argument(
        "--dump-symbolic",
        action="store_true",
        help="print the extracted FSM as JSON and exit",
    )
    p.add_argument(
        "--dump-minimized",
        action="store_true",
        help="print the minimized FSM as JSON and exit",
    )
    p.set_defaults(func=_cmd_fsm_min)

    p = sub.add_parser("check-equiv", help="check equivalence of two designs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument(
        "--mode", default="auto", help="auto | exhaustive | sat | product | bounded:K"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON verdict here")
    p.set_defaults(func=_cmd_check_equiv)

    p = sub.add_parser("cost", help="structural cost report")
    p.add_argument("input")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_cost)

    rules_parser = sub.add_parser("rules", help="rule library operations")
    rules_sub = rules_parser.add_subparsers(dest="rules_command", required=True)
    p = rules_sub.add_parser("search", help="retrieve rules for a query")
    p.add_argument("query")
    p.add_argument("--goal", choices=["area", "power", "timing"], required=True)
    p.add_argument("--rules", help="rules file (bundled default when omitted)")
    p.add_argument("--max-rules", type=int, default=8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_rules_search)

    p = sub.add_parser("passk", help="closed-form pass@k")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--k", type=int, nargs="+", required=True)
    p.set_defaults(func=_cmd_passk)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as e:  # validation failures from _load_validated
        return int(e.code or 0)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (SpaceTooLarge, StateSpaceTooLarge) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BOUND
    except SymrtloError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
