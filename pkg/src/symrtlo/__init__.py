"""symrtlo: deterministic RTL optimization toolkit for a Verilog subset.

Library surface: parse/emit/validate a typed AST, simulate it with
two-valued semantics, rewrite it through verified AST templates, extract
and minimize FSMs symbolically, check equivalence (exhaustive, SAT
miter, product reachability), and report structural costs. The CLI
(`symrtlo`) wraps the full pipeline.
"""

__version__ = "0.1.0"

from .nodes import Design
from .parser import parse, parse_file
from .emitter import emit
from .validation import Diagnostic, validate
from .sim import Assignment, Trace, eval_comb, fold_const, simulate
from .templates import TEMPLATES, CANONICAL_ORDER, MatchSite, RewriteTemplate
from .rewrite import RewriteLog, apply_template, match_nodes, run_pipeline
from .rules import (
    ConflictTable,
    Rule,
    elbow_cutoff,
    embed,
    load_default_rules,
    load_rules,
    save_rules,
    search,
    similarity,
)
from .fsm import (
    StateMapping,
    SymbolicFsm,
    compatibility_pairs,
    extract_fsm,
    fsm_from_json,
    minimize,
    reemit,
)
from .verify import (
    EquivalenceVerdict,
    check_equiv,
    check_equiv_comb,
    check_equiv_seq,
    gen_stimulus,
)
from .cost import CostReport, cost, lower, register_bits
from .pipeline import (
    OptimizationPlan,
    OptimizeConfig,
    RunReport,
    StructuralAdapter,
    dispatch,
    get_adapter,
    optimize_design,
    pass_at_k,
)

__all__ = [
    "Design", "parse", "parse_file", "emit", "Diagnostic", "validate",
    "Assignment", "Trace", "eval_comb", "fold_const", "simulate",
    "TEMPLATES", "CANONICAL_ORDER", "MatchSite", "RewriteTemplate",
    "RewriteLog", "apply_template", "match_nodes", "run_pipeline",
    "ConflictTable", "Rule", "elbow_cutoff", "embed", "load_default_rules",
    "load_rules", "save_rules", "search", "similarity",
    "StateMapping", "SymbolicFsm", "compatibility_pairs", "extract_fsm",
    "fsm_from_json", "minimize", "reemit",
    "EquivalenceVerdict", "check_equiv", "check_equiv_comb", "check_equiv_seq",
    "gen_stimulus",
    "CostReport", "cost", "lower", "register_bits",
    "OptimizationPlan", "OptimizeConfig", "RunReport", "StructuralAdapter",
    "dispatch", "get_adapter", "optimize_design", "pass_at_k",
]
