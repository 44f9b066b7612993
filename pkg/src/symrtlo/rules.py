"""Optimization-rule store and retrieval.

Rules are seven-field records (name, pattern, rewrite, category,
objective_improvement, template_guidance, function_name). Retrieval uses
a deterministic term-frequency embedding over a vocabulary built from
the loaded library, cosine similarity, an elbow cutoff on the sorted
score list, and goal-conflict filtering. Everything is reproducible:
same query, goal and library give byte-identical results.
"""

from __future__ import annotations

import json
import math
import re
import warnings as _warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    DimensionMismatch,
    DuplicateRuleName,
    EmptyLibrary,
    EmptyScores,
    SchemaError,
)

GOALS = ("area", "power", "timing")

# Objective synonyms: "delay" and "timing" denote the same goal.
_OBJECTIVE_ALIASES = {"delay": "timing", "performance": "timing"}

_STOPWORDS = frozenset(
    "a an and are as at be by for from in into is it of on or that the to with".split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens, camelCase split; stopwords and
    pure-digit tokens are dropped."""
    spaced = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", text)
    return [
        t
        for t in _TOKEN_RE.findall(spaced.lower())
        if t not in _STOPWORDS and not t.isdigit()
    ]


@dataclass(frozen=True)
class Rule:
    name: str
    pattern: str
    rewrite: str
    category: str
    objective_improvement: str
    template_guidance: str | None = None
    function_name: str | None = None
    embedding: tuple[float, ...] = field(default=(), compare=False)

    def objectives(self) -> frozenset[str]:
        parts = [p.strip().lower() for p in self.objective_improvement.split(",")]
        return frozenset(_OBJECTIVE_ALIASES.get(p, p) for p in parts if p)

    def embedding_text(self) -> str:
        return " ".join([self.name, self.pattern, self.rewrite, self.category])

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "pattern": self.pattern,
            "rewrite": self.rewrite,
            "category": self.category,
            "objective_improvement": self.objective_improvement,
            "template_guidance": self.template_guidance,
            "function_name": self.function_name,
        }


@dataclass(frozen=True)
class ConflictEntry:
    pattern_tag: str
    goal: str
    conflicting_goal: str
    conflicting_pattern_tag: str


# "Pipelining serves timing but conflicts with area (resource sharing)";
# "clock gating serves power but conflicts with timing (retiming)".
DEFAULT_CONFLICTS = (
    ConflictEntry("pipelining", "timing", "area", "resource sharing"),
    ConflictEntry("clock gating", "power", "timing", "retiming"),
)


class ConflictTable:
    def __init__(self, entries=DEFAULT_CONFLICTS):
        self.entries = tuple(entries)

    def conflicts_with_goal(self, rule: Rule, goal: str) -> bool:
        """True when the rule's pattern serves a goal that conflicts with
        the requested one, looked up from either side of each entry."""
        text = " ".join(
            [rule.name, rule.pattern, rule.category, rule.rewrite]
        ).lower()
        text = " ".join(tokenize(text))
        for e in self.entries:
            for tag, served, conflicting in (
                (e.pattern_tag, e.goal, e.conflicting_goal),
                (e.conflicting_pattern_tag, e.conflicting_goal, e.goal),
            ):
                tag_tokens = " ".join(tokenize(tag))
                if tag_tokens and tag_tokens in text and goal == conflicting:
                    return True
        return False


# ---------------------------------------------------------------------------
# Embeddings


class Vocabulary:
    """Sorted token -> index map derived from a rule library."""

    def __init__(self, rules: list[Rule]):
        tokens: set[str] = set()
        for r in rules:
            tokens.update(tokenize(r.embedding_text()))
        self.index = {tok: i for i, tok in enumerate(sorted(tokens))}

    def __len__(self):
        return len(self.index)


def embed(text: str, vocab: Vocabulary) -> tuple[float, ...]:
    """L2-normalized term-frequency vector; OOV tokens are dropped.

    Empty or all-stopword text yields the zero vector (flagged with a
    warning).
    """
    vec = [0.0] * len(vocab)
    for tok in tokenize(text):
        idx = vocab.index.get(tok)
        if idx is not None:
            vec[idx] += 1.0
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0.0:
        _warnings.warn("embedding of empty/out-of-vocabulary text is the zero vector")
        return tuple(vec)
    return tuple(v / norm for v in vec)


def similarity(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    """Cosine similarity of unit vectors = dot product, in [0, 1]."""
    if len(a) != len(b):
        raise DimensionMismatch(f"vector dims differ: {len(a)} vs {len(b)}")
    if not any(a) or not any(b):
        _warnings.warn("similarity with a zero vector is defined as 0")
        return 0.0
    return sum(x * y for x, y in zip(a, b))


def elbow_cutoff(scores: list[float]) -> int:
    """Index i* (1-based count) of the largest consecutive gap.

    ``scores`` must be sorted non-increasing. The first i* entries are
    selected; ties break toward the smallest index; a singleton list
    selects itself.
    """
    if not scores:
        raise EmptyScores("elbow_cutoff needs at least one score")
    if any(scores[i] < scores[i + 1] for i in range(len(scores) - 1)):
        raise ValueError("scores must be sorted non-increasing")
    if len(scores) == 1:
        return 1
    best_i, best_gap = 1, -1.0
    for i in range(1, len(scores)):
        gap = scores[i - 1] - scores[i]
        if gap > best_gap:
            best_gap = gap
            best_i = i
    return best_i


def attach_embeddings(rules: list[Rule]) -> list[Rule]:
    vocab = Vocabulary(rules)
    return [replace(r, embedding=embed(r.embedding_text(), vocab)) for r in rules]


def search(
    query: str,
    goal: str,
    library: list[Rule],
    max_rules: int = 8,
    conflicts: ConflictTable | None = None,
) -> list[tuple[Rule, float]]:
    """Rank rules by cosine similarity, apply the elbow cutoff, then drop
    rules whose pattern conflicts with the goal, and truncate."""
    if not library:
        raise EmptyLibrary("cannot search an empty rule library")
    if goal not in GOALS:
        raise ValueError(f"goal must be one of {GOALS}, got {goal!r}")
    if max_rules < 1:
        raise ValueError("max_rules must be >= 1")
    conflicts = conflicts or ConflictTable()

    vocab = Vocabulary(library)
    rules = [
        r if len(r.embedding) == len(vocab) else replace(r, embedding=embed(r.embedding_text(), vocab))
        for r in library
    ]
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        qvec = embed(query, vocab)
        if not any(qvec):
            scored = [(r, 0.0) for r in rules]
        else:
            scored = [(r, similarity(qvec, r.embedding)) for r in rules]
    scored.sort(key=lambda rs: (-rs[1], rs[0].name))
    cut = elbow_cutoff([s for _, s in scored])
    selected = scored[:cut]
    # zero similarity means no shared vocabulary at all: never relevant
    selected = [(r, s) for r, s in selected if s > 0.0]
    selected = [
        (r, s) for r, s in selected if not conflicts.conflicts_with_goal(r, goal)
    ]
    return selected[:max_rules]


# ---------------------------------------------------------------------------
# Persistence

_FIELDS = (
    "name",
    "pattern",
    "rewrite",
    "category",
    "objective_improvement",
    "template_guidance",
    "function_name",
)
_NULLABLE = ("template_guidance", "function_name")


def _rule_from_record(record: dict, where: str) -> Rule:
    if not isinstance(record, dict):
        raise SchemaError(where, "rule record must be an object")
    unknown = set(record) - set(_FIELDS)
    if unknown:
        raise SchemaError(f"{where}.{sorted(unknown)[0]}", "unknown field")
    kwargs = {}
    for f in _FIELDS:
        if f not in record:
            raise SchemaError(f"{where}.{f}", "missing field")
        v = record[f]
        if f in _NULLABLE:
            if v is not None and not isinstance(v, str):
                raise SchemaError(f"{where}.{f}", "must be a string or null")
        else:
            if not isinstance(v, str) or not v:
                raise SchemaError(f"{where}.{f}", "must be a nonempty string")
        kwargs[f] = v
    return Rule(**kwargs)


def load_rules(path) -> tuple[list[Rule], ConflictTable]:
    """Load a rules file; embeddings are recomputed deterministically.

    The canonical format is a JSON array of seven-field records. An
    object form ``{"rules": [...], "conflicts": [...]}`` is also accepted
    so the conflict table can be extended.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    conflict_entries = list(DEFAULT_CONFLICTS)
    if isinstance(doc, dict):
        unknown = set(doc) - {"rules", "conflicts"}
        if unknown:
            raise SchemaError(sorted(unknown)[0], "unknown top-level key")
        records = doc.get("rules", [])
        for i, c in enumerate(doc.get("conflicts", [])):
            want = ("pattern_tag", "goal", "conflicting_goal", "conflicting_pattern_tag")
            if not isinstance(c, dict) or set(c) != set(want):
                raise SchemaError(f"conflicts[{i}]", f"must have fields {want}")
            conflict_entries.append(ConflictEntry(**c))
    elif isinstance(doc, list):
        records = doc
    else:
        raise SchemaError("$", "rules file must be a JSON array or object")

    rules = []
    names = set()
    for i, record in enumerate(records):
        rule = _rule_from_record(record, f"[{i}]")
        if rule.name in names:
            raise DuplicateRuleName(rule.name)
        names.add(rule.name)
        rules.append(rule)
    return attach_embeddings(rules), ConflictTable(conflict_entries)


def save_rules(path, rules: list[Rule]) -> None:
    names = set()
    for r in rules:
        if r.name in names:
            raise DuplicateRuleName(r.name)
        names.add(r.name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_record() for r in rules], fh, indent=2)
        fh.write("\n")


def default_rules_path() -> Path:
    return Path(__file__).parent / "data" / "rules" / "default.json"


def load_default_rules() -> tuple[list[Rule], ConflictTable]:
    return load_rules(default_rules_path())
