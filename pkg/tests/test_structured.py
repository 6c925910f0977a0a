import pytest

from syngram import DataError, build_structured_grammar, enumerate_language, fixture, recognize, structured_split
from syngram.structured import FIXTURE_KEYS, Cfg, StructuredSpec, parse_spec

EXPECTED_TOTALS = {
    (3, 6): 16, (3, 13): 160, (3, 27): 1458,
    (5, 6): 24, (5, 13): 378, (5, 27): 15480,
    (10, 6): 24, (10, 13): 32, (10, 27): 52488,
}


def test_fixture_keys_cover_all_nine_settings():
    assert set(FIXTURE_KEYS) == set(EXPECTED_TOTALS)


@pytest.mark.parametrize("key", sorted(EXPECTED_TOTALS))
def test_fixture_language_sizes(key):
    spec = fixture(*key)
    g = build_structured_grammar(spec)
    assert len(enumerate_language(g)) == EXPECTED_TOTALS[key]


def test_v13l5_grammar_matches_reference_rules():
    g = build_structured_grammar(fixture(5, 13))
    rules = set(g.rules)
    assert ("TOP", ("NP", "AP")) in rules
    assert ("TOP", ("AP", "NP")) in rules
    assert ("TOP", ("NP", "VP", "NP")) in rules
    assert ("NP", ("A", "B")) in rules
    assert ("AP", ("E", "C", "D")) in rules
    assert ("VP", ("E",)) in rules
    lex = {}
    for lhs, rhs in g.rules:
        if len(rhs) == 1 and rhs[0] in set(g.terminals):
            lex.setdefault(lhs, set()).add(rhs[0])
    assert lex == {
        "A": {"0", "1", "2"}, "B": {"3", "4", "5"}, "C": {"6", "7", "8"},
        "D": {"9", "10"}, "E": {"11", "12"},
    }


def test_degenerate_singleton_language():
    spec = StructuredSpec(l=1, v=1, classes={"A": ("0",)}, templates=[("A",)])
    g = build_structured_grammar(spec)
    assert enumerate_language(g) == [("0",)]


def test_member_derivable_in_v13l5():
    g = build_structured_grammar(fixture(5, 13))
    msgs = set(enumerate_language(g))
    assert ("0", "3", "11", "6", "9") in msgs
    assert ("6", "9", "0", "3", "11") not in msgs


def test_enumeration_recognized_by_recognizer():
    cfg = build_structured_grammar(fixture(3, 6))
    g = cfg.to_pcfg()
    for msg in enumerate_language(cfg):
        assert recognize(g, list(msg))


def test_class_disjointness_no_terminal_under_two_preterminals():
    for key in EXPECTED_TOTALS:
        g = build_structured_grammar(fixture(*key))
        owner = {}
        for lhs, rhs in g.rules:
            if len(rhs) == 1 and rhs[0] in set(g.terminals):
                assert rhs[0] not in owner or owner[rhs[0]] == lhs
                owner[rhs[0]] = lhs
        assert set(owner) == set(g.terminals)


def test_split_sizes_and_caps():
    msgs = enumerate_language(build_structured_grammar(fixture(5, 13)))
    sp = structured_split(msgs, seed=0)
    assert len(sp.induction) == 302
    assert len(sp.evaluation) == 76

    msgs27 = enumerate_language(build_structured_grammar(fixture(5, 27)))
    sp27 = structured_split(msgs27, seed=0)
    assert len(sp27.induction) == 2000
    assert len(sp27.evaluation) == 500
    assert sp27.metadata["induction_truncated"]

    tiny = [(str(i),) for i in range(10)]
    sp10 = structured_split(tiny, seed=1)
    assert len(sp10.induction) == 8
    assert len(sp10.evaluation) == 2


def test_split_all_nine_match_expected_table():
    expected = {
        (3, 6): (12, 4), (3, 13): (128, 32), (3, 27): (1166, 292),
        (5, 6): (19, 5), (5, 13): (302, 76), (5, 27): (2000, 500),
        (10, 6): (19, 5), (10, 13): (25, 7), (10, 27): (2000, 500),
    }
    for key, (n_ind, n_eval) in expected.items():
        msgs = enumerate_language(build_structured_grammar(fixture(*key)))
        sp = structured_split(msgs, seed=0)
        assert (len(sp.induction), len(sp.evaluation)) == (n_ind, n_eval), key


def test_template_length_validation():
    with pytest.raises(DataError):
        StructuredSpec(l=3, v=2, classes={"A": ("0", "1")}, templates=[("A", "A")])


def test_count_check_rejects_bad_total():
    spec = StructuredSpec(l=2, v=2, classes={"A": ("0",), "B": ("1",)},
                          templates=[("A", "B")], expected_total=999)
    with pytest.raises(DataError):
        build_structured_grammar(spec)


def test_recursive_grammar_requires_cap():
    g = Cfg(start="TOP",
            rules=(("TOP", ("a", "TOP")), ("TOP", ("a",))),
            terminals=("a",))
    with pytest.raises(DataError):
        enumerate_language(g)
    capped = enumerate_language(g, cap=5)
    assert len(capped) == 5
    assert set(capped) == {("a",) * k for k in range(1, 6)}


def test_extraction_from_true_parses_recovers_fixture_grammar():
    # Viterbi under the (unambiguous) fixture grammar gives the true parse of
    # every member; reading a grammar back off those parses must reproduce
    # the rule set, with exactly uniform lexical probabilities over the full
    # enumeration.
    from syngram.pcfg import extract_grammar, viterbi_parse
    cfg = build_structured_grammar(fixture(5, 13))
    g_true = cfg.to_pcfg()
    msgs = enumerate_language(cfg)
    trees = [viterbi_parse(g_true, list(m))[0] for m in msgs]
    g_back = extract_grammar(trees)
    assert {(r.lhs, r.rhs) for r in g_back.rules} == set(cfg.rules)
    for p in g_back.preterminals:
        rules = g_back.rules_for(p)
        for r in rules:
            assert r.prob == pytest.approx(1.0 / len(rules))
    # the 302-message induction subsample still yields the same rule set
    sp = structured_split(msgs, seed=0)
    vocab = sp.induction.vocab
    sub_trees = [viterbi_parse(g_true, [vocab.symbol(t) for t in m])[0]
                 for m in sp.induction.messages()]
    g_sub = extract_grammar(sub_trees)
    assert {(r.lhs, r.rhs) for r in g_sub.rules} == set(cfg.rules)


def test_spec_config_round_trip():
    spec = fixture(5, 13)
    text = spec.serialize()
    back = parse_spec(text)
    assert back.l == spec.l and back.v == spec.v
    assert back.classes == spec.classes
    assert back.groups == spec.groups
    assert back.templates == spec.templates
    assert back.expected_total == spec.expected_total
