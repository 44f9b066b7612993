"""Built-in rewrite templates.

Each template pairs a match predicate over AST nodes with a transform
that rewrites every matched site in one pass. Transforms are
value-preserving under the width rules in GRAMMAR.md; guards skip any
site where a width change could alter truncation behavior. The pipeline
additionally verifies every application against the original design, so
a template that declines a site loses an optimization, never soundness.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable

from .nodes import (
    AlwaysBlock,
    Binary,
    BlockingAssign,
    Case,
    CaseArm,
    Const,
    ContinuousAssign,
    Decl,
    Design,
    Expr,
    If,
    NonblockingAssign,
    Ref,
    Select,
    SourceSpan,
    Stmt,
    Ternary,
    Unary,
    map_exprs,
    referenced_names,
    stmt_reads,
    stmt_targets,
    walk_exprs,
)
from .semantics import WidthEnv
from .sim import fold_const


@dataclass(frozen=True)
class MatchSite:
    span: SourceSpan
    kind: str
    description: str

    def __str__(self):
        return f"{self.span}: {self.kind}: {self.description}"


@dataclass(frozen=True)
class RewriteTemplate:
    """Named (target kind, match predicate, transform) triple.

    ``finder`` returns the match sites in source order; ``applier``
    rewrites all of them in one pass and must return a design that still
    validates.
    """

    name: str
    target_kind: str  # Assign | Always | Expr | Module
    category: str
    goal_tags: frozenset[str]
    finder: Callable[[Design], list[MatchSite]]
    applier: Callable[[Design], Design]


# ---------------------------------------------------------------------------
# Canonical expression keys (commutative normalization)

_COMMUTATIVE = ("+", "*", "&", "|", "^")


def norm_key(expr: Expr, wenv: WidthEnv):
    """Hashable structural key; commutative operands are sorted, so
    ``a*b`` and ``b*a`` share a key. Parameters keep their names."""
    if isinstance(expr, Const):
        w = expr.width if expr.width is not None else max(expr.value.bit_length(), 1)
        return ("const", expr.value, w)
    if isinstance(expr, Ref):
        return ("ref", expr.name)
    if isinstance(expr, Unary):
        return (expr.op, norm_key(expr.operand, wenv))
    if isinstance(expr, Binary):
        lk = norm_key(expr.lhs, wenv)
        rk = norm_key(expr.rhs, wenv)
        if expr.op in _COMMUTATIVE:
            lk, rk = sorted((lk, rk), key=repr)
        return (expr.op, lk, rk)
    if isinstance(expr, Ternary):
        return (
            "?:",
            norm_key(expr.cond, wenv),
            norm_key(expr.then, wenv),
            norm_key(expr.orelse, wenv),
        )
    if isinstance(expr, Select):
        return ("sel", expr.base.name, norm_key(expr.msb, wenv), norm_key(expr.lsb, wenv))
    raise TypeError(type(expr).__name__)


# ---------------------------------------------------------------------------
# Constant folding


def _map_item_exprs(item, fn):
    """Apply ``fn`` to every full expression (RHS, condition, subject,
    label) of an item."""
    if isinstance(item, ContinuousAssign):
        return replace(item, rhs=fn(item.rhs))
    if isinstance(item, AlwaysBlock):
        return replace(item, body=tuple(_map_stmt_exprs(s, fn) for s in item.body))
    return item


def _map_stmt_exprs(stmt: Stmt, fn) -> Stmt:
    if isinstance(stmt, (BlockingAssign, NonblockingAssign)):
        return replace(stmt, rhs=fn(stmt.rhs))
    if isinstance(stmt, If):
        return replace(
            stmt,
            cond=fn(stmt.cond),
            then_body=tuple(_map_stmt_exprs(s, fn) for s in stmt.then_body),
            else_body=tuple(_map_stmt_exprs(s, fn) for s in stmt.else_body),
        )
    if isinstance(stmt, Case):
        return replace(
            stmt,
            subject=fn(stmt.subject),
            arms=tuple(
                replace(arm, body=tuple(_map_stmt_exprs(s, fn) for s in arm.body))
                for arm in stmt.arms
            ),
            default=None
            if stmt.default is None
            else tuple(_map_stmt_exprs(s, fn) for s in stmt.default),
        )
    return stmt


def _sites_where_items_differ(design: Design, new_design: Design, kind: str, what: str):
    sites = []
    for old, new in zip(design.items, new_design.items):
        if old != new:
            sites.append(MatchSite(old.span, kind, what))
    return sites


def _const_fold_apply(design: Design) -> Design:
    return replace(design, items=tuple(_map_item_exprs(i, fold_const) for i in design.items))


def _const_fold_find(design: Design):
    return _sites_where_items_differ(
        design, _const_fold_apply(design), "Assign", "constant subexpression folds"
    )


# ---------------------------------------------------------------------------
# Algebraic simplification


def _const_width_of(c: Const) -> int:
    return c.width if c.width is not None else max(c.value.bit_length(), 1)


def _algebraic_rules(wenv: WidthEnv, zero_mult_only: bool):
    def simplify(node: Expr) -> Expr:
        if not isinstance(node, Binary):
            return node
        a, b = node.lhs, node.rhs

        def const_side():
            if isinstance(a, Const):
                return a, b
            if isinstance(b, Const):
                return b, a
            return None, None

        c, x = const_side()
        if c is None:
            return node
        node_w = wenv.expr_width(node)
        # x*0 -> 0 and x&0 -> 0 keep the node's width, so they are always safe.
        if node.op == "*" and c.value == 0:
            return Const(0, node_w)
        if zero_mult_only:
            return node
        if node.op == "&" and c.value == 0:
            return Const(0, node_w)
        # Identity removals are safe only when dropping the constant does
        # not narrow the node (truncation upstream could change).
        if _const_width_of(c) > wenv.expr_width(x):
            return node
        if node.op == "+" and c.value == 0:
            return x
        if node.op == "-" and isinstance(b, Const) and b.value == 0:
            return a
        if node.op == "*" and c.value == 1:
            return x
        if node.op == "|" and c.value == 0:
            return x
        if node.op == "^" and c.value == 0:
            return x
        return node

    return simplify


def _algebraic_apply(design: Design, zero_mult_only: bool = False) -> Design:
    wenv = WidthEnv(design)
    simplify = _algebraic_rules(wenv, zero_mult_only)
    fn = lambda e: map_exprs(e, simplify)
    return replace(design, items=tuple(_map_item_exprs(i, fn) for i in design.items))


def _algebraic_find(design: Design, zero_mult_only: bool = False):
    what = "zero multiplication" if zero_mult_only else "algebraic identity"
    return _sites_where_items_differ(
        design, _algebraic_apply(design, zero_mult_only), "Expr", what
    )


# ---------------------------------------------------------------------------
# Dead code elimination


def _live_signals(design: Design) -> set[str]:
    readers: dict[str, set[str]] = {}

    def add(target: str, reads: set[str]):
        readers.setdefault(target, set()).update(reads)

    for item in design.items:
        if isinstance(item, ContinuousAssign):
            add(item.target, referenced_names(item.rhs))
        elif isinstance(item, AlwaysBlock):
            reads = stmt_reads(item.body) | {s for _, s in item.sensitivity.edges}
            for t in stmt_targets(item.body):
                add(t, reads)

    param_names = {p.name for p in design.parameters}
    live = {p.name for p in design.output_ports()}
    work = list(live)
    while work:
        sig = work.pop()
        for dep in readers.get(sig, ()):
            if dep not in live and dep not in param_names:
                live.add(dep)
                work.append(dep)
    return live


def _dce_dead_assigns(design: Design) -> list[ContinuousAssign]:
    live = _live_signals(design)
    return [
        item
        for item in design.items
        if isinstance(item, ContinuousAssign) and item.target not in live
    ]


def _dce_apply(design: Design) -> Design:
    dead = set(id(a) for a in _dce_dead_assigns(design))
    items = tuple(i for i in design.items if id(i) not in dead)

    used: set[str] = set()
    for item in items:
        if isinstance(item, ContinuousAssign):
            used.add(item.target)
            used |= referenced_names(item.rhs)
        else:
            used |= stmt_targets(item.body)
            used |= stmt_reads(item.body)
            used |= {s for _, s in item.sensitivity.edges}
    decls = tuple(d for d in design.decls if d.name in used)
    return replace(design, items=items, decls=decls)


def _dce_find(design: Design):
    return [
        MatchSite(a.span, "Assign", f"dead assign to {a.target!r}")
        for a in _dce_dead_assigns(design)
    ]


# ---------------------------------------------------------------------------
# Common subexpression elimination

_SUM_OPS = ("+", "-")

# A linear form maps factor multisets (tuples of atom keys) to integer
# coefficients mod 2^W; the empty tuple is the constant term.
LinearForm = dict[tuple, int]

_MAX_DISTRIBUTED_TERMS = 32


def _lf_negate(form: LinearForm, m: int) -> LinearForm:
    return {f: (-c) % m for f, c in form.items()}


def _lf_add(a: LinearForm, b: LinearForm, m: int) -> LinearForm:
    out = dict(a)
    for f, c in b.items():
        out[f] = (out.get(f, 0) + c) % m
        if out[f] == 0:
            del out[f]
    return out


def _lf_mul(a: LinearForm, b: LinearForm, m: int) -> LinearForm | None:
    if len(a) * len(b) > _MAX_DISTRIBUTED_TERMS:
        return None
    out: LinearForm = {}
    for fa, ca in a.items():
        for fb, cb in b.items():
            f = tuple(sorted(fa + fb, key=repr))
            out[f] = (out.get(f, 0) + ca * cb) % m
            if out[f] == 0:
                del out[f]
    return out


def _decompose(expr: Expr, wenv: WidthEnv, width: int) -> LinearForm:
    """Linear form of ``expr`` over atoms, distributing * over +/-.

    Only width-homogeneous +,-,* nodes are decomposed; everything else
    (including narrower subtrees, whose truncation must be preserved)
    becomes an opaque atom.
    """
    m = 1 << width

    def atom(e: Expr) -> LinearForm:
        return {(norm_key(e, wenv),): 1}

    def rec(e: Expr) -> LinearForm:
        if isinstance(e, Const):
            return {(): e.value % m} if e.value % m else {}
        if isinstance(e, Ref) and not wenv.is_param(e.name):
            return {(norm_key(e, wenv),): 1}
        if isinstance(e, Ref):  # parameter: constant
            return {(): wenv.params[e.name] % m} if wenv.params[e.name] % m else {}
        if isinstance(e, Unary) and e.op == "-" and wenv.expr_width(e) == width:
            return _lf_negate(rec(e.operand), m)
        if isinstance(e, Binary) and e.op in _SUM_OPS and wenv.expr_width(e) == width:
            lhs = rec(e.lhs)
            rhs = rec(e.rhs)
            if e.op == "-":
                rhs = _lf_negate(rhs, m)
            return _lf_add(lhs, rhs, m)
        if isinstance(e, Binary) and e.op == "*" and wenv.expr_width(e) == width:
            prod = _lf_mul(rec(e.lhs), rec(e.rhs), m)
            if prod is not None:
                return prod
            return atom(e)
        return atom(e)

    return rec(expr)


def _flatten_sum(expr: Expr) -> list[tuple[int, Expr]]:
    """Top-level +/- flattening without distribution: (sign, subtree)."""
    if isinstance(expr, Binary) and expr.op in _SUM_OPS:
        left = _flatten_sum(expr.lhs)
        right = _flatten_sum(expr.rhs)
        if expr.op == "-":
            right = [(-s, e) for s, e in right]
        return left + right
    return [(1, expr)]


def _lf_signed(form: LinearForm, sign: int, m: int) -> LinearForm:
    return form if sign == 1 else _lf_negate(form, m)


def _exact_consume(residue: LinearForm, form: LinearForm) -> LinearForm | None:
    """Subtract ``form`` when every factor's coefficient matches exactly."""
    if not form:
        return None
    for f, c in form.items():
        if residue.get(f) != c:
            return None
    out = dict(residue)
    for f in form:
        del out[f]
    return out


def _compound_form(form: LinearForm) -> bool:
    """True when reusing a net for this form saves an operator."""
    if not form:
        return False
    if len(form) >= 2:
        return True
    ((factors, coeff),) = form.items()
    if len(factors) >= 2:
        return True
    if coeff != 1:
        return True
    return bool(factors) and factors[0][0] != "ref"


@dataclass
class _CseState:
    wenv: WidthEnv
    # signature (canonical linear form tuple, width) -> (net, form, order)
    nets: dict
    order: int = 0

    def register(self, target: str, form: LinearForm, width: int):
        if not _compound_form(form):
            return
        if self.wenv.signal_widths.get(target) != width:
            return
        sig = (tuple(sorted(form.items(), key=repr)), width)
        if sig not in self.nets:
            self.nets[sig] = (target, form, self.order)
            self.order += 1

    def candidates(self, width: int):
        out = [
            (net, form, order)
            for (sig_form, sig_w), (net, form, order) in self.nets.items()
            if sig_w == width
        ]
        out.sort(key=lambda nfo: (-len(nfo[1]), nfo[2]))
        return out


def _cover_assign(rhs: Expr, state: _CseState, width: int) -> Expr | None:
    """Rewrite ``rhs`` as a +/- combination of known nets and original
    terms; None when no beneficial exact cover exists."""
    m = 1 << width
    wenv = state.wenv
    residue = _decompose(rhs, wenv, width)
    if not residue:
        return None
    originals = _flatten_sum(rhs)
    original_forms = [
        _lf_signed(_decompose(e, wenv, width), s, m) for s, e in originals
    ]

    picks: list[tuple[str, int, LinearForm]] = []  # (net, sign, form)
    while True:
        progressed = False
        for net, form, _ in state.candidates(width):
            for sign in (1, -1):
                attempt = _exact_consume(residue, _lf_signed(form, sign, m))
                if attempt is not None:
                    picks.append((net, sign, _lf_signed(form, sign, m)))
                    residue = attempt
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            break
    if not picks:
        return None

    leftovers: list[tuple[int, int, Expr]] = []  # (orig index, sign, subtree)
    for idx, ((sign, sub), form) in enumerate(zip(originals, original_forms)):
        attempt = _exact_consume(residue, form)
        if attempt is not None:
            leftovers.append((idx, sign, sub))
            residue = attempt
    if residue:
        return None

    units: list[tuple[int, int, int, Expr]] = []  # (position, tiebreak, sign, expr)
    for idx, sign, sub in leftovers:
        units.append((idx, 0, sign, sub))
    for pick_no, (net, sign, form) in enumerate(picks):
        pos = len(originals)
        for idx, oform in enumerate(original_forms):
            if set(oform) & set(form):
                pos = idx
                break
        units.append((pos, 1 + pick_no, sign, Ref(net)))
    units.sort(key=lambda u: (u[0], u[1]))

    if units[0][2] == -1:
        return None
    expr = units[0][3]
    for _, _, sign, sub in units[1:]:
        expr = Binary("+" if sign == 1 else "-", expr, sub)
    if wenv.expr_width(expr) != width:
        return None
    return expr


def _cse_phase_a(design: Design) -> Design:
    wenv = WidthEnv(design)
    state = _CseState(wenv, {})
    new_items = []
    for item in design.items:
        if not isinstance(item, ContinuousAssign):
            new_items.append(item)
            continue
        width = wenv.expr_width(item.rhs)
        original_form = _decompose(item.rhs, wenv, width)
        rewritten = _cover_assign(item.rhs, state, width)
        if rewritten is not None and rewritten != item.rhs:
            new_items.append(replace(item, rhs=rewritten))
        else:
            new_items.append(item)
        state.register(item.target, original_form, width)
    return replace(design, items=tuple(new_items))


def _nontrivial_subexprs(expr: Expr):
    for e in walk_exprs(expr):
        if isinstance(e, (Binary, Unary, Ternary)):
            yield e


def _cse_phase_b(design: Design) -> Design:
    """Extract repeated subtrees into fresh ``cse_<n>`` wires, preferring
    reuse of a net that already computes the subtree."""
    wenv = WidthEnv(design)
    assigns = [
        (i, item)
        for i, item in enumerate(design.items)
        if isinstance(item, ContinuousAssign)
    ]

    counts: Counter = Counter()
    first_pos: dict = {}
    exemplar: dict = {}
    net_of_key: dict = {}
    for pos, (_, item) in enumerate(assigns):
        rhs_key = norm_key(item.rhs, wenv)
        if rhs_key not in net_of_key and wenv.signal_widths.get(
            item.target
        ) == wenv.expr_width(item.rhs):
            net_of_key[rhs_key] = (item.target, pos)
        for sub in _nontrivial_subexprs(item.rhs):
            key = norm_key(sub, wenv)
            counts[key] += 1
            if key not in first_pos:
                first_pos[key] = pos
                exemplar[key] = sub

    # Largest subtrees first so nested repeats collapse into one wire.
    worth = [
        key
        for key, n in counts.items()
        if n >= 2 or (key in net_of_key and n >= 1)
    ]
    worth.sort(key=lambda k: (-len(repr(k)), repr(k)))

    taken_names = {p.name for p in design.ports} | {d.name for d in design.decls} | {
        p.name for p in design.parameters
    }
    new_wires: list[tuple[int, Decl, ContinuousAssign]] = []
    replacement: dict = {}
    fresh = 0
    for key in worth:
        if key in replacement:
            continue
        if key in net_of_key:
            net, def_pos = net_of_key[key]
            uses = counts[key] - 1  # its own definition
            if uses < 1:
                continue
            replacement[key] = (net, def_pos)
        else:
            while f"cse_{fresh}" in taken_names:
                fresh += 1
            name = f"cse_{fresh}"
            fresh += 1
            taken_names.add(name)
            sub = exemplar[key]
            w = wenv.expr_width(sub)
            decl = Decl(name, "wire", Const(w - 1), Const(0)) if w > 1 else Decl(name, "wire")
            assign = ContinuousAssign(name, sub)
            new_wires.append((first_pos[key], decl, assign))
            replacement[key] = (name, -1)
            wenv.signal_widths[name] = w

    if not replacement:
        return design

    def rewrite_rhs(expr: Expr, self_target: str, pos: int) -> Expr:
        key = norm_key(expr, wenv)
        if key in replacement:
            net, def_pos = replacement[key]
            if net != self_target and def_pos <= pos:
                return Ref(net)
        if isinstance(expr, (Const, Ref)):
            return expr
        if isinstance(expr, Unary):
            return replace(expr, operand=rewrite_rhs(expr.operand, self_target, pos))
        if isinstance(expr, Binary):
            return replace(
                expr,
                lhs=rewrite_rhs(expr.lhs, self_target, pos),
                rhs=rewrite_rhs(expr.rhs, self_target, pos),
            )
        if isinstance(expr, Ternary):
            return replace(
                expr,
                cond=rewrite_rhs(expr.cond, self_target, pos),
                then=rewrite_rhs(expr.then, self_target, pos),
                orelse=rewrite_rhs(expr.orelse, self_target, pos),
            )
        return expr

    pos_of_item: dict[int, int] = {idx: pos for pos, (idx, _) in enumerate(assigns)}
    new_items = []
    inserted: set[int] = set()
    for idx, item in enumerate(design.items):
        if isinstance(item, ContinuousAssign):
            pos = pos_of_item[idx]
            for wid, (at_pos, decl, assign) in enumerate(new_wires):
                if at_pos == pos and wid not in inserted:
                    inserted.add(wid)
                    new_items.append(assign)
            new_items.append(
                replace(item, rhs=rewrite_rhs(item.rhs, item.target, pos))
            )
        else:
            new_items.append(item)
    decls = design.decls + tuple(d for _, d, _ in new_wires)
    return replace(design, items=tuple(new_items), decls=decls)


def _changed_assign_sites(design: Design, new_design: Design, what: str):
    """Assign sites whose RHS changed, matched by target (robust to
    inserted wires)."""
    old_rhs = {
        i.target: (i.rhs, i.span)
        for i in design.items
        if isinstance(i, ContinuousAssign)
    }
    sites = []
    for item in new_design.items:
        if not isinstance(item, ContinuousAssign):
            continue
        old = old_rhs.get(item.target)
        if old is not None and old[0] != item.rhs:
            sites.append(MatchSite(old[1], "Assign", what))
    return sites


def _cse_apply(design: Design) -> Design:
    return _cse_phase_b(_cse_phase_a(design))


def _cse_find(design: Design):
    return _changed_assign_sites(
        design, _cse_apply(design), "common subexpression reuse"
    )


def _intermediate_extraction_apply(design: Design) -> Design:
    return _cse_phase_b(design)


def _intermediate_extraction_find(design: Design):
    return _changed_assign_sites(
        design,
        _intermediate_extraction_apply(design),
        "intermediate variable extraction",
    )


# ---------------------------------------------------------------------------
# Temporary variable elimination


def _single_use_wires(design: Design) -> list[str]:
    wenv = WidthEnv(design)
    port_names = {p.name for p in design.ports}
    assign_of: dict[str, ContinuousAssign] = {}
    for item in design.items:
        if isinstance(item, ContinuousAssign):
            assign_of[item.target] = item

    use_count: Counter = Counter()
    for item in design.items:
        for e in walk_exprs(item):
            if isinstance(e, Ref):
                use_count[e.name] += 1
            if isinstance(e, Select):
                use_count[e.base.name] += 1  # selects block inlining

    out = []
    for d in design.decls:
        if d.kind != "wire" or d.name in port_names:
            continue
        a = assign_of.get(d.name)
        if a is None or use_count[d.name] != 1:
            continue
        if wenv.expr_width(a.rhs) != wenv.width_of(d.name):
            continue
        if any(isinstance(e, Select) and e.base.name == d.name for e in walk_exprs(design)):
            continue
        out.append(d.name)
    return out


def _tve_apply_one(design: Design, name: str, assign: ContinuousAssign) -> Design:
    def inline(e: Expr) -> Expr:
        if isinstance(e, Ref) and e.name == name:
            return assign.rhs
        return e

    items = tuple(
        _map_item_exprs(i, lambda ex: map_exprs(ex, inline))
        for i in design.items
        if i is not assign
    )
    decls = tuple(d for d in design.decls if d.name != name)
    return replace(design, items=items, decls=decls)


def _tve_walk(design: Design):
    """Yield (site, next design) until there is no single-use wire left;
    inlining one wire can expose another, so this iterates to a fixpoint."""
    current = design
    while True:
        todo = _single_use_wires(current)
        if not todo:
            return
        name = todo[0]
        assign = next(
            i
            for i in current.items
            if isinstance(i, ContinuousAssign) and i.target == name
        )
        site = MatchSite(assign.span, "Assign", f"inline single-use wire {name!r}")
        current = _tve_apply_one(current, name, assign)
        yield site, current


def _tve_apply(design: Design) -> Design:
    current = design
    for _, current in _tve_walk(design):
        pass
    return current


def _tve_find(design: Design):
    return [site for site, _ in _tve_walk(design)]


# ---------------------------------------------------------------------------
# Strength reduction


def _strength_apply(design: Design) -> Design:
    wenv = WidthEnv(design)

    def reduce_node(node: Expr) -> Expr:
        if not isinstance(node, Binary):
            return node
        if node.op == "*":
            for x, c in ((node.lhs, node.rhs), (node.rhs, node.lhs)):
                if (
                    isinstance(c, Const)
                    and c.value >= 2
                    and c.value & (c.value - 1) == 0
                    and _const_width_of(c) <= wenv.expr_width(x)
                ):
                    k = c.value.bit_length() - 1
                    return Binary("<<", x, Const(k))
        if node.op == "/":
            c = node.rhs
            if (
                isinstance(c, Const)
                and c.value >= 2
                and c.value & (c.value - 1) == 0
                and _const_width_of(c) <= wenv.expr_width(node.lhs)
            ):
                k = c.value.bit_length() - 1
                return Binary(">>", node.lhs, Const(k))
        return node

    fn = lambda e: map_exprs(e, reduce_node)
    return replace(design, items=tuple(_map_item_exprs(i, fn) for i in design.items))


def _strength_find(design: Design):
    return _sites_where_items_differ(
        design, _strength_apply(design), "Expr", "power-of-two strength reduction"
    )


# ---------------------------------------------------------------------------
# Mux simplification


def _as_eq_chain(stmt: Stmt):
    """Match if-else chains of ``subject == const`` tests assigning one
    target; returns (subject, [(label, assign)], default assign)."""
    chain = []
    node = stmt
    subject = None
    target = None
    assign_type = None
    while isinstance(node, If):
        cond = node.cond
        if not (
            isinstance(cond, Binary)
            and cond.op == "=="
            and isinstance(cond.lhs, Ref)
            and isinstance(cond.rhs, Const)
        ):
            return None
        if subject is None:
            subject = cond.lhs.name
        elif cond.lhs.name != subject:
            return None
        if len(node.then_body) != 1 or not isinstance(
            node.then_body[0], (BlockingAssign, NonblockingAssign)
        ):
            return None
        assign = node.then_body[0]
        if target is None:
            target = assign.target
            assign_type = type(assign)
        elif assign.target != target or type(assign) is not assign_type:
            return None
        chain.append((cond.rhs, assign))
        if len(node.else_body) == 1 and isinstance(node.else_body[0], If):
            node = node.else_body[0]
            continue
        if len(node.else_body) == 1 and isinstance(
            node.else_body[0], (BlockingAssign, NonblockingAssign)
        ):
            final = node.else_body[0]
            if final.target != target or type(final) is not assign_type:
                return None
            if len(chain) < 2:
                return None
            return subject, chain, final
        return None
    return None


def _mux_rewrite_stmt(stmt: Stmt) -> Stmt:
    matched = _as_eq_chain(stmt)
    if matched is not None:
        subject, chain, final = matched
        arms = tuple(CaseArm((label,), (assign,)) for label, assign in chain)
        return Case(Ref(subject), arms, (final,), span=stmt.span)
    if isinstance(stmt, If):
        return replace(
            stmt,
            then_body=tuple(_mux_rewrite_stmt(s) for s in stmt.then_body),
            else_body=tuple(_mux_rewrite_stmt(s) for s in stmt.else_body),
        )
    if isinstance(stmt, Case):
        return replace(
            stmt,
            arms=tuple(
                replace(arm, body=tuple(_mux_rewrite_stmt(s) for s in arm.body))
                for arm in stmt.arms
            ),
            default=None
            if stmt.default is None
            else tuple(_mux_rewrite_stmt(s) for s in stmt.default),
        )
    return stmt


def _mux_apply(design: Design) -> Design:
    items = tuple(
        replace(i, body=tuple(_mux_rewrite_stmt(s) for s in i.body))
        if isinstance(i, AlwaysBlock)
        else i
        for i in design.items
    )
    return replace(design, items=items)


def _mux_find(design: Design):
    return _sites_where_items_differ(
        design, _mux_apply(design), "Always", "if-else chain collapses to case"
    )


# ---------------------------------------------------------------------------
# Registry

_AREA = frozenset({"area"})
_AREA_POWER = frozenset({"area", "power"})
_AREA_TIMING = frozenset({"area", "timing"})


def _template(name, kind, category, tags, finder, applier) -> RewriteTemplate:
    return RewriteTemplate(name, kind, category, tags, finder, applier)


TEMPLATES: dict[str, RewriteTemplate] = {
    t.name: t
    for t in [
        _template(
            "ConstantFolding", "Expr", "combinational/dataflow",
            frozenset({"area", "power", "timing"}),
            _const_fold_find, _const_fold_apply,
        ),
        _template(
            "AlgebraicSimplification", "Expr", "combinational/dataflow", _AREA_POWER,
            _algebraic_find, _algebraic_apply,
        ),
        _template(
            "ZeroMultiplicationTemplate", "Expr", "combinational/dataflow", _AREA,
            lambda d: _algebraic_find(d, zero_mult_only=True),
            lambda d: _algebraic_apply(d, zero_mult_only=True),
        ),
        _template(
            "CommonSubexpressionElimination", "Assign", "combinational/dataflow",
            _AREA_POWER, _cse_find, _cse_apply,
        ),
        _template(
            "IntermediateVariableExtractionTemplate", "Assign",
            "combinational/dataflow", _AREA,
            _intermediate_extraction_find, _intermediate_extraction_apply,
        ),
        _template(
            "StrengthReduction", "Expr", "combinational/dataflow", _AREA_TIMING,
            _strength_find, _strength_apply,
        ),
        _template(
            "TemporaryVariableElimination", "Assign", "combinational/dataflow", _AREA,
            _tve_find, _tve_apply,
        ),
        _template(
            "MuxSimplification", "Always", "mux", _AREA_TIMING,
            _mux_find, _mux_apply,
        ),
        _template(
            "DeadCodeElimination", "Assign", "combinational/dataflow", _AREA_POWER,
            _dce_find, _dce_apply,
        ),
    ]
}

# DCE last so it sweeps nets exposed by the other rewrites.
CANONICAL_ORDER = (
    "ConstantFolding",
    "AlgebraicSimplification",
    "ZeroMultiplicationTemplate",
    "CommonSubexpressionElimination",
    "IntermediateVariableExtractionTemplate",
    "StrengthReduction",
    "TemporaryVariableElimination",
    "MuxSimplification",
    "DeadCodeElimination",
)
