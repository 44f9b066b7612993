"""End-to-end orchestration: dispatch, optimize, pass@k.

The dispatcher summarizes a design (via a pluggable, deterministic
adapter), retrieves matching rules, decides whether the control-flow
path applies, and maps rules to built-in templates. ``optimize_design``
executes the plan with the two-step verification policy (random fast
filter, then a formal mode) and never returns an unverified rewrite: a
failed final check aborts back to the original design.
"""

from __future__ import annotations

import hashlib
import os
import random
import time
from dataclasses import dataclass

from .errors import DomainError, NotAnFsm, AmbiguousFsm, VerificationFailed
from .nodes import Design
from .cost import CostReport, cost
from .emitter import emit
from .fsm import extract_fsm, minimize, reemit
from .rewrite import LogEntry, RewriteLog, run_pipeline
from .rules import ConflictTable, Rule, load_default_rules, load_rules, search
from .sim import SequentialContext
from .templates import CANONICAL_ORDER, TEMPLATES
from .verify import (
    EquivalenceVerdict,
    check_equiv_comb,
    check_equiv_seq,
    gen_stimulus,
    is_combinational,
)
from .sim import eval_comb


# ---------------------------------------------------------------------------
# Adapter interface


class StructuralAdapter:
    """Deterministic, offline summarizer/suggester.

    ``summarize`` renders structural facts (port/reg counts, operator
    histogram, always-block kinds, FSM flag) plus machine-countable
    optimization opportunities; ``suggest`` turns those counts and the
    goal into retrieval keywords. Output is byte-stable for a fixed
    design.
    """

    name = "structural"

    def summarize(self, design: Design) -> str:
        from .nodes import AlwaysBlock, Binary, Ternary, Unary, walk_exprs

        ops: dict[str, int] = {}
        for e in walk_exprs(design):
            if isinstance(e, Binary):
                ops[e.op] = ops.get(e.op, 0) + 1
            elif isinstance(e, Unary):
                ops[e.op] = ops.get(e.op, 0) + 1
            elif isinstance(e, Ternary):
                ops["?:"] = ops.get("?:", 0) + 1
        comb = sum(
            1
            for i in design.items
            if isinstance(i, AlwaysBlock) and not i.sensitivity.is_clocked()
        )
        clocked = sum(
            1
            for i in design.items
            if isinstance(i, AlwaysBlock) and i.sensitivity.is_clocked()
        )
        try:
            extract_fsm(design)
            fsm_flag = "detected"
        except (NotAnFsm, AmbiguousFsm):
            fsm_flag = "none"

        opportunities = {
            "dead-assigns": len(TEMPLATES["DeadCodeElimination"].finder(design)),
            "repeated-subexpressions": len(
                TEMPLATES["CommonSubexpressionElimination"].finder(design)
            ),
            "constant-expressions": len(TEMPLATES["ConstantFolding"].finder(design)),
            "pow2-strength": len(TEMPLATES["StrengthReduction"].finder(design)),
            "single-use-wires": len(
                TEMPLATES["TemporaryVariableElimination"].finder(design)
            ),
            "if-else-chains": len(TEMPLATES["MuxSimplification"].finder(design)),
            "algebraic-identities": len(
                TEMPLATES["AlgebraicSimplification"].finder(design)
            ),
        }
        op_words = {
            "+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod",
            "<<": "shl", ">>": "shr", "&": "and", "|": "or", "^": "xor",
            "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt",
            ">=": "ge", "&&": "land", "||": "lor", "!": "lnot", "~": "bnot",
            "?:": "mux",
        }
        # only nonzero counts: zero entries would leak every template's
        # keywords into the retrieval query
        parts = [
            f"module {design.name}",
            f"inputs {len(design.input_ports())}",
            f"outputs {len(design.output_ports())}",
            f"regs {sum(1 for d in design.decls if d.kind == 'reg')}",
            f"always-comb {comb}",
            f"always-clocked {clocked}",
            f"fsm {fsm_flag}",
        ]
        if any(ops.values()):
            parts.append(
                "ops "
                + " ".join(f"{op_words[k]}={v}" for k, v in sorted(ops.items()) if v)
            )
        if any(opportunities.values()):
            parts.append(
                "opportunities "
                + " ".join(f"{k}={v}" for k, v in sorted(opportunities.items()) if v)
            )
        return "; ".join(parts)

    def suggest(self, summary: str, goal: str) -> str:
        counts: dict[str, int] = {}
        marker = "opportunities "
        idx = summary.rfind(marker)
        if idx >= 0:
            for token in summary[idx + len(marker):].split(";")[0].split():
                if "=" in token:
                    key, _, val = token.partition("=")
                    try:
                        counts[key] = int(val)
                    except ValueError:
                        pass
        # each phrase echoes the wording of the matching library record so
        # that applicable rules score in one tight band
        phrases = []
        if counts.get("dead-assigns"):
            phrases.append(
                "dead code elimination: detect assignments and declarations "
                "whose results never reach an output port; remove dead "
                "assignments and unused declarations (unused nets)"
            )
        if counts.get("repeated-subexpressions"):
            phrases.append(
                "common subexpression elimination: detect repeated "
                "subexpressions computed in several assignments (shared terms, "
                "duplicate operator trees); reuse a net that already carries "
                "the common subexpression"
            )
        if counts.get("constant-expressions"):
            phrases.append(
                "constant folding: detect operators whose operands are all "
                "constant expressions; fold constant subexpressions into "
                "literal values at compile time"
            )
        if counts.get("pow2-strength"):
            phrases.append(
                "strength reduction: detect multiplication or division by a "
                "power of two constant; replace multiplication with a left "
                "shift and unsigned division with a right shift"
            )
        if counts.get("single-use-wires"):
            phrases.append(
                "temporary variable elimination: detect single-use temporary "
                "wires assigned once and read once; inline the expression and "
                "drop the intermediate assignment"
            )
        if counts.get("if-else-chains"):
            phrases.append(
                "mux simplification: detect nested if-else chains assigning "
                "one target under equality tests on a single subject; collapse "
                "into a case statement (mux reduction)"
            )
        if counts.get("algebraic-identities"):
            phrases.append(
                "algebraic simplification: detect algebraic identities; "
                "simplify expressions using algebraic identities, removing "
                "no-op operators and zero multiplications"
            )
        if "fsm detected" in summary:
            phrases.append("finite state machine minimization merge equivalent states")
        phrases.append(f"optimize for {goal}")
        return "; ".join(phrases)


ADAPTERS = {"structural": StructuralAdapter}


def get_adapter(name: str | None = None):
    """Resolve the adapter: explicit name, else $SYMRTLO_ADAPTER, else the
    structural default."""
    name = name or os.environ.get("SYMRTLO_ADAPTER", "structural")
    if name not in ADAPTERS:
        raise DomainError(
            f"unknown adapter {name!r}; available: {sorted(ADAPTERS)}"
        )
    return ADAPTERS[name]()


# ---------------------------------------------------------------------------
# Dispatch


@dataclass(frozen=True)
class OptimizationPlan:
    goal: str
    paths: frozenset[str]
    selected_rules: tuple[tuple[str, float], ...]
    templates: tuple[str, ...]
    advisory_rules: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "goal": self.goal,
            "paths": sorted(self.paths),
            "selected_rules": [[n, s] for n, s in self.selected_rules],
            "templates": list(self.templates),
            "advisory_rules": list(self.advisory_rules),
        }


def dispatch(
    design: Design,
    goal: str,
    library: list[Rule] | None = None,
    conflicts: ConflictTable | None = None,
    max_rules: int = 8,
    adapter=None,
) -> OptimizationPlan:
    """Summarize, retrieve rules, probe for an FSM, and map rules to
    templates. Control flow joins the plan iff extraction succeeds."""
    if library is None:
        library, default_conflicts = load_default_rules()
        conflicts = conflicts or default_conflicts
    adapter = adapter or get_adapter()
    summary = adapter.summarize(design)
    suggestions = adapter.suggest(summary, goal)
    query = f"{summary}; {suggestions}"
    selected = search(query, goal, library, max_rules=max_rules, conflicts=conflicts)

    paths = {"dataflow"}
    try:
        extract_fsm(design)
        paths.add("controlflow")
    except (NotAnFsm, AmbiguousFsm):
        pass

    wanted = {
        r.function_name for r, _ in selected if r.function_name in TEMPLATES
    }
    templates = tuple(name for name in CANONICAL_ORDER if name in wanted)
    advisory = tuple(
        r.name for r, _ in selected if r.function_name is None
    )
    return OptimizationPlan(
        goal=goal,
        paths=frozenset(paths),
        selected_rules=tuple((r.name, s) for r, s in selected),
        templates=templates,
        advisory_rules=advisory,
    )


# ---------------------------------------------------------------------------
# Verification policy

FAST_FILTER_VECTORS = 256
FAST_FILTER_SEQUENCES = 64
FAST_FILTER_DEPTH = 16


def _fast_filter_comb(a: Design, b: Design, seed: int) -> bool:
    stimulus = gen_stimulus(a, "random", count=FAST_FILTER_VECTORS, seed=seed)
    for s in stimulus:
        if eval_comb(a, s) != eval_comb(b, s):
            return False
    return True


def _fast_filter_seq(a: Design, b: Design, seed: int) -> bool:
    ctx_a, ctx_b = SequentialContext(a), SequentialContext(b)
    from .verify import _seq_inputs, _vector_to_assignment

    ports = _seq_inputs(ctx_a)
    total = sum(w for _, w in ports)
    rng = random.Random(seed)
    for _ in range(FAST_FILTER_SEQUENCES):
        sa, sb = ctx_a.reset_state(), ctx_b.reset_state()
        for _ in range(FAST_FILTER_DEPTH):
            stim = _vector_to_assignment(rng.getrandbits(total), ports).values()
            sa, oa = ctx_a.step(sa, stim)
            sb, ob = ctx_b.step(sb, stim)
            if oa != ob:
                return False
    return True


def make_verifier(seed: int, mode: str = "auto", record: list | None = None):
    """Two-step verify hook: random fast filter, then a formal mode.

    Returns a callable (original, candidate) -> bool; verdicts are
    appended to ``record`` when given.
    """

    def hook(original: Design, candidate: Design) -> bool:
        comb = is_combinational(original) and is_combinational(candidate)
        if comb:
            if not _fast_filter_comb(original, candidate, seed):
                verdict = EquivalenceVerdict(
                    "not_equivalent", "exhaustive", bound="random fast filter"
                )
            elif mode in ("auto", "exhaustive", "sat"):
                verdict = check_equiv_comb(
                    original, candidate, mode if mode != "auto" else "auto"
                )
            else:
                verdict = check_equiv_comb(original, candidate, "auto")
        else:
            if not _fast_filter_seq(original, candidate, seed):
                verdict = EquivalenceVerdict(
                    "not_equivalent", "bounded_sequential", bound="random fast filter"
                )
            elif mode.startswith("bounded"):
                depth = int(mode.split(":", 1)[1]) if ":" in mode else 16
                verdict = check_equiv_seq(
                    original, candidate, "bounded", depth=depth, seed=seed
                )
            else:
                verdict = check_equiv_seq(original, candidate, "product")
        if record is not None:
            record.append(verdict)
        return verdict.passed

    return hook


# ---------------------------------------------------------------------------
# Optimization run


@dataclass
class RunReport:
    input_sha256: str
    output_sha256: str
    plan: OptimizationPlan
    rewrite_log: RewriteLog
    fsm_summary: dict | None
    verification: list[EquivalenceVerdict]
    cost_before: CostReport
    cost_after: CostReport
    timings: dict[str, float]
    seed: int
    input_path: str | None = None
    output_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "input": {"path": self.input_path, "sha256": self.input_sha256},
            "output": {"path": self.output_path, "sha256": self.output_sha256},
            "plan": self.plan.to_dict(),
            "rewrite_log": self.rewrite_log.to_dict(),
            "fsm_summary": self.fsm_summary,
            "verification": [v.to_dict() for v in self.verification],
            "cost_before": self.cost_before.to_dict(),
            "cost_after": self.cost_after.to_dict(),
            "timings": self.timings,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        import json

        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class OptimizeConfig:
    goal: str = "area"
    rules_path: str | None = None
    max_rules: int = 8
    seed: int = 0
    verify: str = "auto"
    budget: int = 32
    adapter: str | None = None


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def optimize_design(
    design: Design, config: OptimizeConfig, plan: OptimizationPlan | None = None
) -> tuple[Design, RunReport]:
    """Run the full plan on a validated design.

    The emitted design is always verification-equivalent to the input:
    candidates that fail verification are rolled back, and a failed final
    check raises VerificationFailed (callers keep the original).
    """
    timings: dict[str, float] = {}
    verdicts: list[EquivalenceVerdict] = []
    t0 = time.perf_counter()

    if config.rules_path:
        library, conflicts = load_rules(config.rules_path)
    else:
        library, conflicts = load_default_rules()
    adapter = get_adapter(config.adapter)
    if plan is None:
        plan = dispatch(
            design,
            config.goal,
            library,
            conflicts,
            max_rules=config.max_rules,
            adapter=adapter,
        )
    timings["dispatch"] = time.perf_counter() - t0

    cost_before = cost(design)
    current = design
    fsm_summary = None

    # data flow path
    t1 = time.perf_counter()
    log = RewriteLog()
    if "dataflow" in plan.paths and plan.templates:
        hook = make_verifier(config.seed, config.verify, verdicts)
        templates = [TEMPLATES[name] for name in plan.templates]
        current, log = run_pipeline(current, templates, hook, budget=config.budget)
    timings["dataflow"] = time.perf_counter() - t1

    # control flow path
    t2 = time.perf_counter()
    if "controlflow" in plan.paths:
        try:
            fsm = extract_fsm(current)
            minimized, mapping = minimize(fsm)
            if len(minimized.states) < len(fsm.states):
                candidate = reemit(current, minimized, mapping)
                verdict = check_equiv_seq(
                    design,
                    candidate,
                    "bounded" if config.verify.startswith("bounded") else "product",
                    depth=int(config.verify.split(":", 1)[1])
                    if config.verify.startswith("bounded") and ":" in config.verify
                    else 16,
                    seed=config.seed,
                )
                verdicts.append(verdict)
                if verdict.passed:
                    current = candidate
                    fsm_summary = {
                        "original_states": len(fsm.states),
                        "minimized_states": len(minimized.states),
                        "mapping": dict(sorted(mapping.mapping.items())),
                        "exact": mapping.exact,
                    }
                else:
                    log.entries.append(
                        LogEntry(
                            "FsmMinimization",
                            (),
                            accepted=False,
                            reason="verification failed",
                        )
                    )
            else:
                fsm_summary = {
                    "original_states": len(fsm.states),
                    "minimized_states": len(minimized.states),
                    "mapping": dict(sorted(mapping.mapping.items())),
                    "exact": mapping.exact,
                }
        except (NotAnFsm, AmbiguousFsm) as e:
            log.entries.append(
                LogEntry("FsmMinimization", (), accepted=False, reason=str(e))
            )
    timings["controlflow"] = time.perf_counter() - t2

    # final gate: the emitted artifact must verify against the input
    t3 = time.perf_counter()
    if current is design:
        verdicts.append(
            EquivalenceVerdict("equivalent", "exhaustive", bound="identical design")
        )
    if current is not design:
        comb = is_combinational(design) and is_combinational(current)
        if comb:
            final = check_equiv_comb(
                design,
                current,
                "auto" if config.verify in ("auto", "product", "bounded") or config.verify.startswith("bounded") else config.verify,
            )
        else:
            final = check_equiv_seq(
                design,
                current,
                "bounded" if config.verify.startswith("bounded") else "product",
                seed=config.seed,
            )
        verdicts.append(final)
        if not final.passed:
            raise VerificationFailed(
                f"final artifact failed verification ({final.mode}): original kept"
            )
    timings["verification"] = time.perf_counter() - t3

    report = RunReport(
        input_sha256=_sha256_text(emit(design)),
        output_sha256=_sha256_text(emit(current)),
        plan=plan,
        rewrite_log=log,
        fsm_summary=fsm_summary,
        verification=verdicts,
        cost_before=cost_before,
        cost_after=cost(current),
        timings=timings,
        seed=config.seed,
    )
    return current, report


# ---------------------------------------------------------------------------
# pass@k


def pass_at_k(n: int, c: int, ks: list[int]) -> list[float]:
    """Closed-form probability that at least one of k samples is correct,
    for each k: 1 - C(n-c, k)/C(n, k), computed as an overflow-safe
    running product."""
    if not (0 <= c <= n):
        raise DomainError(f"need 0 <= c <= n, got c={c}, n={n}")
    out = []
    for k in ks:
        if not (1 <= k <= n):
            raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
        if n - c < k:
            out.append(1.0)
            continue
        prob_none = 1.0
        for i in range(k):
            prob_none *= (n - c - i) / (n - i)
        out.append(1.0 - prob_none)
    return out
