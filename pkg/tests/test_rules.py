import json
import math
import random
from collections import Counter

import pytest

from symrtlo.errors import (
    DimensionMismatch,
    DuplicateRuleName,
    EmptyLibrary,
    EmptyScores,
    SchemaError,
)
from symrtlo.rules import (
    Rule,
    Vocabulary,
    attach_embeddings,
    elbow_cutoff,
    embed,
    load_default_rules,
    load_rules,
    save_rules,
    search,
    similarity,
    tokenize,
)


@pytest.fixture(scope="module")
def default_library():
    rules, conflicts = load_default_rules()
    return rules, conflicts


@pytest.fixture(scope="module")
def reference_rules(default_library):
    # the three seed records: zero-multiplication, intermediate-variable
    # extraction, ripple-carry replacement
    rules, _ = default_library
    return rules[:3]


# -- embed / similarity --------------------------------------------------------


def test_embedding_is_unit_norm(default_library):
    rules, _ = default_library
    for r in rules:
        norm = math.sqrt(sum(v * v for v in r.embedding))
        assert abs(norm - 1.0) < 1e-9


def test_self_similarity_is_one(reference_rules):
    vocab = Vocabulary(reference_rules)
    v = embed("multiplication by zero", vocab)
    assert abs(similarity(v, v) - 1.0) < 1e-9


def test_similarity_orders_related_above_unrelated(reference_rules):
    vocab = Vocabulary(reference_rules)
    zm = embed("zero multiplication", vocab)
    related = embed("eliminate multiplication by zero", vocab)
    unrelated = embed("carry lookahead adder", vocab)
    assert similarity(zm, related) > similarity(zm, unrelated)
    # hand-computed on the token sets {zero, multiplication} and
    # {eliminate, multiplication, zero} ("by" is a stopword): 2/sqrt(6)
    assert abs(similarity(zm, related) - 2 / math.sqrt(6)) < 1e-9
    assert similarity(zm, unrelated) == 0.0


def test_similarity_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        similarity((1.0, 0.0), (1.0, 0.0, 0.0))


def test_similarity_zero_vector_is_zero():
    with pytest.warns(UserWarning):
        assert similarity((0.0, 0.0), (1.0, 0.0)) == 0.0


def test_similarity_symmetric_random():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(1, 6)
        a = [rng.random() for _ in range(n)]
        b = [rng.random() for _ in range(n)]
        na = math.sqrt(sum(x * x for x in a)) or 1.0
        nb = math.sqrt(sum(x * x for x in b)) or 1.0
        a = tuple(x / na for x in a)
        b = tuple(x / nb for x in b)
        assert abs(similarity(a, b) - similarity(b, a)) < 1e-12


def test_tokenize_drops_stopwords_and_digits():
    assert tokenize("Multiplication by 0 in the expression") == [
        "multiplication",
        "expression",
    ]


# -- elbow ---------------------------------------------------------------------


def test_elbow_examples():
    # gaps 0.04, 0.43, 0.15: the cut lands after the second score
    assert elbow_cutoff([0.92, 0.88, 0.45, 0.30]) == 2
    assert elbow_cutoff([0.9]) == 1
    # equal gaps break toward the smallest index
    assert elbow_cutoff([0.8, 0.5, 0.2]) == 1


def test_elbow_empty_raises():
    with pytest.raises(EmptyScores):
        elbow_cutoff([])


def test_elbow_rejects_unsorted():
    with pytest.raises(ValueError):
        elbow_cutoff([0.2, 0.9])


def test_elbow_planted_gap_recovery():
    rng = random.Random(2024)
    hits = 0
    trials = 1000
    for _ in range(trials):
        m = rng.randint(3, 12)
        k = rng.randint(1, m - 1)
        high = sorted((rng.uniform(0.8, 0.9) for _ in range(k)), reverse=True)
        low = sorted((rng.uniform(0.1, 0.3) for _ in range(m - k)), reverse=True)
        if elbow_cutoff(high + low) == k:
            hits += 1
    assert hits / trials >= 0.99


# -- search ---------------------------------------------------------------------


def test_search_finds_zero_multiplication(reference_rules):
    results = search(
        "eliminate multiplication by zero in assignments", "area", reference_rules
    )
    assert results[0][0].name == "Zero Multiplication Elimination"


def test_search_matches_independent_tf_cosine_oracle(reference_rules):
    # recompute scores with a separate Counter-based implementation
    query = "eliminate multiplication by zero in assignments"
    docs = {r.name: tokenize(r.embedding_text()) for r in reference_rules}
    vocab = sorted({t for toks in docs.values() for t in toks})
    q_counts = Counter(t for t in tokenize(query) if t in vocab)

    def unit(counts):
        norm = math.sqrt(sum(c * c for c in counts.values()))
        return {t: c / norm for t, c in counts.items()} if norm else {}

    qv = unit(q_counts)
    expected = {}
    for name, toks in docs.items():
        dv = unit(Counter(toks))
        expected[name] = sum(qv.get(t, 0) * dv.get(t, 0) for t in dv)
    results = search(query, "area", reference_rules, max_rules=3)
    for rule, score in results:
        assert abs(score - expected[rule.name]) < 1e-9


def test_search_scores_non_increasing(default_library):
    rules, conflicts = default_library
    results = search("fold constant expressions", "area", rules, conflicts=conflicts)
    scores = [s for _, s in results]
    assert scores == sorted(scores, reverse=True)


def test_search_conflict_filter_drops_pipelining_for_area(reference_rules):
    pipelining = Rule(
        name="Output Pipelining Insertion",
        pattern="Insert pipelining registers to split long combinational paths",
        rewrite="Adds pipeline stages to shorten the critical path",
        category="combinational/dataflow",
        objective_improvement="timing",
    )
    library = attach_embeddings(list(reference_rules) + [pipelining])
    hits = search("pipelining registers critical path", "area", library)
    assert all(r.name != pipelining.name for r, _ in hits)
    hits = search("pipelining registers critical path", "timing", library)
    assert hits and hits[0][0].name == pipelining.name


def test_search_conflict_filter_symmetric(reference_rules):
    sharing = Rule(
        name="Adder Resource Sharing",
        pattern="Share one adder across mutually exclusive resource sharing paths",
        rewrite="Multiplexes operands into a single shared adder",
        category="combinational/dataflow",
        objective_improvement="area",
    )
    library = attach_embeddings(list(reference_rules) + [sharing])
    hits = search("resource sharing adder", "timing", library)
    assert all(r.name != sharing.name for r, _ in hits)


def test_search_max_rules_truncates(default_library):
    rules, conflicts = default_library
    hits = search("eliminate dead code unused assignments remove", "area", rules,
                  max_rules=1, conflicts=conflicts)
    assert len(hits) <= 1


def test_search_empty_library_raises():
    with pytest.raises(EmptyLibrary):
        search("anything", "area", [])


def test_search_deterministic_bytes(default_library):
    rules, conflicts = default_library
    def run():
        hits = search("reuse common subexpressions shared terms", "power", rules,
                      conflicts=conflicts)
        return json.dumps([[r.name, s] for r, s in hits])
    assert run() == run()
    rules2, conflicts2 = load_default_rules()
    hits2 = search("reuse common subexpressions shared terms", "power", rules2,
                   conflicts=conflicts2)
    assert run() == json.dumps([[r.name, s] for r, s in hits2])


# -- persistence -----------------------------------------------------------------


def test_save_load_roundtrip(tmp_path, reference_rules):
    path = tmp_path / "rules.json"
    save_rules(path, list(reference_rules))
    loaded, _ = load_rules(path)
    assert [r.to_record() for r in loaded] == [r.to_record() for r in reference_rules]
    # embeddings recomputed deterministically
    assert [r.embedding for r in loaded] == [
        r.embedding for r in attach_embeddings(list(reference_rules))
    ]


def test_load_rejects_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([{
        "name": "X", "pattern": "p", "rewrite": "r", "category": "c",
        "template_guidance": None, "function_name": None,
    }]))
    with pytest.raises(SchemaError) as err:
        load_rules(path)
    assert "objective_improvement" in str(err.value)


def test_load_rejects_unknown_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([{
        "name": "X", "pattern": "p", "rewrite": "r", "category": "c",
        "objective_improvement": "area", "template_guidance": None,
        "function_name": None, "extra": 1,
    }]))
    with pytest.raises(SchemaError) as err:
        load_rules(path)
    assert "extra" in str(err.value)


def test_load_rejects_duplicate_names(tmp_path):
    record = {
        "name": "X", "pattern": "p", "rewrite": "r", "category": "c",
        "objective_improvement": "area", "template_guidance": None,
        "function_name": None,
    }
    path = tmp_path / "dup.json"
    path.write_text(json.dumps([record, record]))
    with pytest.raises(DuplicateRuleName):
        load_rules(path)


def test_conflicts_extensible_via_object_form(tmp_path):
    doc = {
        "rules": [{
            "name": "Gate The Clock", "pattern": "clock gating on idle registers",
            "rewrite": "wrap register enables in gated clocks", "category": "clock gating",
            "objective_improvement": "power", "template_guidance": None,
            "function_name": None,
        }],
        "conflicts": [{
            "pattern_tag": "loop unrolling", "goal": "timing",
            "conflicting_goal": "area", "conflicting_pattern_tag": "loop rolling",
        }],
    }
    path = tmp_path / "ext.json"
    path.write_text(json.dumps(doc))
    rules, conflicts = load_rules(path)
    assert len(conflicts.entries) == 3  # two defaults plus the extension
    # default table still applies: clock gating conflicts with timing goal
    assert conflicts.conflicts_with_goal(rules[0], "timing")
    assert not conflicts.conflicts_with_goal(rules[0], "power")


def test_default_library_contents(default_library):
    rules, _ = default_library
    assert len(rules) == 10
    names = [r.name for r in rules]
    assert names[0] == "Zero Multiplication Elimination"
    assert "ReplaceRippleCarryWithCarryLookahead" in names
    from symrtlo.templates import TEMPLATES

    for r in rules:
        if r.function_name is not None:
            assert r.function_name in TEMPLATES
    # abstract rule: no guidance, no template
    abstract = next(r for r in rules if r.name == "ReplaceRippleCarryWithCarryLookahead")
    assert abstract.template_guidance is None and abstract.function_name is None


def test_objective_synonyms():
    r = Rule("X", "p", "r", "c", "area, delay")
    assert r.objectives() == frozenset({"area", "timing"})


def test_repo_rules_file_matches_packaged_default():
    import pathlib

    from symrtlo.rules import default_rules_path

    repo_copy = pathlib.Path(__file__).parent.parent / "rules" / "default.json"
    assert repo_copy.read_bytes() == default_rules_path().read_bytes()
