import random

import pytest

import ltagrank as lt
from ltagrank.heuristics import (GLOBAL_BUILTINS, Heuristic, HeuristicRegistry,
                                 Predicate, RegistryError, default_registry,
                                 extract, globals_only_registry, load_weights,
                                 parse_registry, rank, save_weights, score,
                                 uniform_weights, zero_weights)
from toygrammars import MODIFIER_GRAMMAR, OFPP_GRAMMAR, PP_GRAMMAR, parses_of


def test_default_registry_contents():
    reg = default_registry()
    assert len(reg) == 11
    assert set(GLOBAL_BUILTINS) <= set(reg.names())
    assert reg.names()[0] == "disprefer_relative_clause"


def test_builtins_always_appended():
    reg = HeuristicRegistry([Heuristic("only_rule", "local_tree_type",
                                       tree_pred=Predicate("prefix", ("X",)))])
    assert set(GLOBAL_BUILTINS) <= set(reg.names())
    assert len(reg) == 4


def test_duplicate_names_rejected():
    h = Heuristic("dup", "local_tree_type", tree_pred=Predicate("prefix", ("X",)))
    with pytest.raises(RegistryError):
        HeuristicRegistry([h, h])


def test_registry_file_round_trip():
    reg = default_registry()
    again = parse_registry(reg.dumps())
    assert again.names() == reg.names()
    assert again.heuristics == reg.heuristics


def test_registry_parse_errors():
    with pytest.raises(RegistryError):
        parse_registry("lonely\n")
    with pytest.raises(RegistryError):
        parse_registry("bad local_lexical word=of\n")
    with pytest.raises(RegistryError):
        parse_registry("x global_structural builtin=unknown_builtin\n")


def test_score_arithmetic():
    assert score((2.0, 1.0, 0.0), (0.5, -1.0, 3.0)) == 0.0
    assert score((0.0, 0.0, 0.0), (5.0, -2.0, 7.0)) == 0.0
    assert score((1.0, 1.0, 1.0), (1.0, 1.0, 1.0)) == 3.0
    with pytest.raises(ValueError):
        score((1.0,), (1.0, 2.0))


def test_adjunction_count_zero_without_adjunction():
    g = lt.loads(PP_GRAMMAR)
    reg = globals_only_registry()
    parses = parses_of(g, "the/D man/N barked/V")
    assert len(parses) == 1
    vector = extract(reg, g, *parses[0])
    assert vector[reg.index("adjunction_count")] == 0.0


def test_pp_height_spec_example():
    g = lt.loads(PP_GRAMMAR)
    reg = globals_only_registry()
    pp_index = reg.index("pp_attachment_height")
    heights = {}
    for derivation, derived in parses_of(
            g, "saw/V the/D man/N with/P the/D telescope/N"):
        names = {name for name, _ in derivation.instances()}
        key = "VP" if "PP_Attaches_to_VP" in names else "NP"
        heights[key] = extract(reg, g, derivation, derived)[pp_index]
    assert heights == {"VP": 1.0, "NP": 0.0}


def test_adjective_height_direction():
    g = lt.loads(MODIFIER_GRAMMAR)
    reg = globals_only_registry()
    adj_index = reg.index("adj_attachment_height")
    heights = set()
    for derivation, derived in parses_of(g, "big/A dogs/N bark/V"):
        names = {name for name, _ in derivation.instances()}
        site = "NP" if "Adjective_NP" in names else "N"
        heights.add((site, extract(reg, g, derivation, derived)[adj_index]))
    assert heights == {("NP", 0.0), ("N", 1.0)}


def test_relative_clause_count():
    grammar = lt.loads("""
tree Noun_Phrase : initial (NP N@)
tree Rel_Cl_Stub : auxiliary (NP NP* C@)
tree Indic_Intrans : initial (S NP^ (VP V@))
lex dogs N -> Noun_Phrase
lex that C -> Rel_Cl_Stub
lex bark V -> Indic_Intrans
""")
    reg = default_registry()
    parses = parses_of(grammar, "dogs/N that/C bark/V")
    assert len(parses) == 1
    vector = extract(reg, grammar, *parses[0])
    assert vector[reg.index("disprefer_relative_clause")] == 1.0
    assert vector[reg.index("disprefer_topicalization")] == 0.0


def test_of_lexical_preference_counts():
    g = lt.loads(PP_GRAMMAR)
    reg = default_registry()
    of_index = reg.index("prefer_of_np_modifier")
    counts = {}
    for derivation, derived in parses_of(
            g, "saw/V the/D man/N of/P the/D park/N"):
        names = {name for name, _ in derivation.instances()}
        key = "VP" if "PP_Attaches_to_VP" in names else "NP"
        counts[key] = extract(reg, g, derivation, derived)[of_index]
    # dispreferred analysis (VP modifier) counts once, preferred not at all
    assert counts == {"VP": 1.0, "NP": 0.0}


def test_rank_prefers_low_np_attachment():
    g = lt.loads(PP_GRAMMAR)
    reg = default_registry()
    parses = parses_of(g, "saw/V the/D man/N with/P the/D telescope/N")
    ranked = rank(g, parses, reg, uniform_weights(reg))
    top_names = {name for name, _ in ranked[0].derivation.instances()}
    assert "PP_Attaches_to_NP" in top_names


def test_rank_zero_weights_keeps_canonical_order():
    g = lt.loads(OFPP_GRAMMAR)
    reg = default_registry()
    parses = parses_of(
        g, "the/D second/A part/N is/V the/D name/N of/P your/D personal/A computer/N")
    ranked = rank(g, parses, reg, zero_weights(reg))
    assert [rp.derivation for rp in ranked] == [d for d, _ in parses]


def test_rank_negation_reverses_strict_order():
    g = lt.loads(PP_GRAMMAR)
    reg = globals_only_registry()
    parses = parses_of(g, "saw/V the/D man/N with/P the/D telescope/N")
    weights = uniform_weights(reg)
    first = rank(g, parses, reg, weights)
    negated = rank(g, parses, reg, [-w for w in weights])
    assert first[0].penalty != first[1].penalty
    assert [rp.derivation for rp in negated] == [rp.derivation
                                                 for rp in reversed(first)]


def test_adjunction_count_direction():
    # one more adjoined modifier strictly increases the count
    g = lt.loads(MODIFIER_GRAMMAR)
    reg = globals_only_registry()
    idx = reg.index("adjunction_count")
    plain = extract(reg, g, *parses_of(g, "dogs/N bark/V")[0])
    modified = extract(reg, g, *parses_of(g, "dogs/N bark/V quickly/ADV")[0])
    assert modified[idx] == plain[idx] + 1


def test_extract_pure():
    g = lt.loads(PP_GRAMMAR)
    reg = default_registry()
    parses = parses_of(g, "saw/V the/D man/N with/P the/D telescope/N")
    for derivation, derived in parses:
        assert extract(reg, g, derivation, derived) == \
            extract(reg, g, derivation, derived)


def test_linearity_and_scaling_small():
    # integer-valued trials keep the arithmetic exact; the full 10k-trial run
    # lives in the acceptance suite
    rng = random.Random(2)
    for _ in range(500):
        n = rng.randint(1, 8)
        v = tuple(float(rng.randint(0, 6)) for _ in range(n))
        w1 = [float(rng.randint(-5, 5)) for _ in range(n)]
        w2 = [float(rng.randint(-5, 5)) for _ in range(n)]
        a, b = float(rng.randint(-4, 4)), float(rng.randint(-4, 4))
        combined = [a * x + b * y for x, y in zip(w1, w2)]
        assert score(v, combined) == a * score(v, w1) + b * score(v, w2)


def test_weights_file_round_trip(tmp_path):
    reg = default_registry()
    weights = [float(i) / 4 for i in range(len(reg))]
    path = tmp_path / "weights.tsv"
    save_weights(path, reg, weights)
    assert load_weights(path, reg) == weights
    # wrong order is rejected
    rows = path.read_text().splitlines()
    path.write_text("\n".join(reversed(rows)) + "\n")
    with pytest.raises(RegistryError):
        load_weights(path, reg)


def test_uniform_and_zero_weights():
    reg = default_registry()
    assert uniform_weights(reg) == [1.0] * 11
    assert zero_weights(reg) == [0.0] * 11
