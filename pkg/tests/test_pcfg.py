import math
import random

import pytest

from syngram import InvariantError, Pcfg, load_corpus
from syngram.pcfg import (LabeledTree, Rule, binarize, ddl, debinarize_grammar,
                          describe, enumeration_baseline_gdl, extract_grammar,
                          gdl, inside_logprob, recognize, viterbi_parse)


def leaf(label, token):
    return LabeledTree(label=label, token=token)


def node(label, *children):
    return LabeledTree(label=label, children=tuple(children))


def trivial_l3v6():
    rules = [Rule("TOP", ("X", "X", "X"), 6, 1.0)]
    rules += [Rule("X", (str(i),), 1, 1 / 6) for i in range(6)]
    return Pcfg(rules)


# ---------------------------------------------------------------------------
# brute-force derivation oracle over the ORIGINAL (non-binarized) grammar
# ---------------------------------------------------------------------------

def all_derivation_probs(g: Pcfg, tokens, limit=100000):
    """Probabilities of every derivation of tokens from the start label,
    by exhaustive recursive splitting.  Requires an acyclic unary structure."""
    out = []

    def expand(sym, toks):
        if g.is_terminal(sym):
            if len(toks) == 1 and toks[0] == sym:
                yield 1.0
            return
        for r in g.rules_for(sym):
            yield from seq(list(r.rhs), toks, r.prob)

    def seq(rhs, toks, p):
        if len(rhs) == 1:
            for q in expand(rhs[0], toks):
                yield p * q
            return
        head, rest = rhs[0], rhs[1:]
        for cut in range(1, len(toks) - len(rest) + 1):
            for q1 in expand(head, toks[:cut]):
                for q2 in seq(rest, toks[cut:], 1.0):
                    yield p * q1 * q2

    for p in expand(g.start, list(tokens)):
        out.append(p)
        if len(out) > limit:
            raise RuntimeError("too many derivations")
    return out


def random_acyclic_grammar(rng: random.Random) -> Pcfg:
    """Random small grammar with a strict label hierarchy (hence finite)."""
    terminals = ["a", "b", "c", "d"][: rng.randint(2, 4)]
    pres = ["P1", "P2"]
    mids = ["M1", "M2"][: rng.randint(1, 2)]
    counts = {}
    for p in pres:
        for t in rng.sample(terminals, rng.randint(1, len(terminals))):
            counts[(p, (t,))] = rng.randint(1, 5)
    below = {"M1": pres, "M2": pres + ["M1"] if len(mids) > 1 else pres}
    for m in mids:
        for _ in range(rng.randint(1, 2)):
            arity = rng.randint(2, 3)
            rhs = tuple(rng.choice(below[m]) for _ in range(arity))
            counts[(m, rhs)] = counts.get((m, rhs), 0) + rng.randint(1, 4)
    for _ in range(rng.randint(1, 3)):
        arity = rng.randint(1, 3)
        rhs = tuple(rng.choice(pres + mids) for _ in range(arity))
        counts[("TOP", rhs)] = counts.get(("TOP", rhs), 0) + rng.randint(1, 4)
    totals = {}
    for (lhs, _), c in counts.items():
        totals[lhs] = totals.get(lhs, 0) + c
    rules = [Rule(lhs, rhs, c, c / totals[lhs]) for (lhs, rhs), c in sorted(counts.items())]
    return Pcfg(rules)


def random_yield(g: Pcfg, rng: random.Random, max_len=6):
    for _ in range(50):
        toks = []

        def gen(sym, depth):
            if g.is_terminal(sym):
                toks.append(sym)
                return
            rules = g.rules_for(sym)
            r = rng.choices(rules, weights=[x.prob for x in rules], k=1)[0]
            for s in r.rhs:
                gen(s, depth + 1)

        gen(g.start, 0)
        if len(toks) <= max_len:
            return toks
    return toks[:max_len]


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------

def test_extract_counts_and_probs():
    t1 = node("TOP", leaf("X", "a"), leaf("X", "b"))
    t2 = node("TOP", leaf("X", "a"), leaf("X", "a"))
    g = extract_grammar([t1, t2])
    by = {(r.lhs, r.rhs): r for r in g.rules}
    assert by[("X", ("a",))].count == 3
    assert by[("X", ("a",))].prob == pytest.approx(3 / 4)
    assert by[("X", ("b",))].prob == pytest.approx(1 / 4)
    assert by[("TOP", ("X", "X"))].count == 2
    assert by[("TOP", ("X", "X"))].prob == 1.0


def test_extract_single_tree_all_probs_one():
    t = node("TOP", leaf("P", "a"), node("N", leaf("Q", "b"), leaf("R", "c")))
    g = extract_grammar([t])
    assert all(r.prob == 1.0 for r in g.rules)


def test_extract_splits_mixed_labels():
    # N has both a lexical and a phrasal rule; extraction must split it so
    # every pre-terminal rewrites only to terminals.
    t1 = node("TOP", node("N", leaf("P", "a"), leaf("P", "b")))
    t2 = node("TOP", leaf("N", "c"))
    g = extract_grammar([t1, t2])
    assert "N@lex" in g.preterminals
    assert "N" in g.nonterminals
    for p in g.preterminals:
        for r in g.rules_for(p):
            assert len(r.rhs) == 1 and g.is_terminal(r.rhs[0])
    # likelihood preserved through the unary bridge
    assert 2 ** inside_logprob(g, ["c"]) == pytest.approx(0.5)


def test_per_lhs_normalization_validated():
    with pytest.raises(InvariantError):
        Pcfg([Rule("TOP", ("a",), 1, 0.5)])


def test_top_never_in_rhs():
    with pytest.raises(InvariantError):
        Pcfg([Rule("TOP", ("TOP", "a"), 1, 1.0)])


# ---------------------------------------------------------------------------
# description lengths
# ---------------------------------------------------------------------------

def test_gdl_trivial_l3v6_is_48_bits():
    g = trivial_l3v6()
    assert g.symbol_count == 8
    assert gdl(g) == pytest.approx(48.0)


def test_gdl_minimal_grammar_two_bits():
    g = Pcfg([Rule("TOP", ("a",), 1, 1.0)])
    assert gdl(g) == pytest.approx(2.0)


def test_enumeration_baseline_single_message():
    c = load_corpus("a b c\n")
    assert enumeration_baseline_gdl(c) == pytest.approx(8.0)


def test_enumeration_baseline_linear_in_tokens():
    c1 = load_corpus("a b\nb a\n")
    c2 = load_corpus("a b\nb a\na a\nb b\n")
    # same vocabulary: per-message cost is constant, so twice the messages
    # cost exactly twice the bits
    assert enumeration_baseline_gdl(c2) == pytest.approx(2 * enumeration_baseline_gdl(c1))


def test_ddl_trivial_uniform_constant_per_message():
    g = trivial_l3v6()
    c = load_corpus("0 1 2\n3 4 5\n5 5 5\n")
    total, avg, n_unparsed = ddl(g, c)
    assert n_unparsed == 0
    assert avg == pytest.approx(3 * math.log2(6), abs=1e-9)
    assert total == pytest.approx(9 * math.log2(6), abs=1e-9)


def test_describe_ratios_use_total_ddl():
    g = trivial_l3v6()
    c = load_corpus("0 1 2\n3 4 5\n")
    ev = load_corpus("1 1 1\n")
    d = describe(g, c, ev)
    assert d.ratio_ddl_gdl == pytest.approx(d.ddl_total_bits / d.gdl_bits)
    assert d.ratio_eval_ddl_gdl == pytest.approx((1 * 3 * math.log2(6)) / d.gdl_bits)
    assert d.eval_ddl_avg_bits == pytest.approx(3 * math.log2(6))


def test_ddl_skips_unparseable_and_counts_them():
    g = trivial_l3v6()
    c = load_corpus("0 1 2\n0 1\n")  # length-2 message is unparseable
    total, avg, n_unparsed = ddl(g, c)
    assert n_unparsed == 1
    assert avg == pytest.approx(3 * math.log2(6))


# ---------------------------------------------------------------------------
# binarization and charts
# ---------------------------------------------------------------------------

def test_binarize_synthetic_count_for_long_rhs():
    rules = [Rule("TOP", ("P", "P", "P", "P", "P"), 1, 1.0),
             Rule("P", ("a",), 1, 1.0)]
    g = Pcfg(rules)
    cnf = binarize(g)
    spine = {l for l in cnf.synthetic if not l.startswith("~t~")}
    assert len(spine) == 3  # rhs of length 5 needs 3 intermediate labels


def test_binarize_identity_on_binary_grammar():
    rules = [Rule("TOP", ("P", "Q"), 1, 1.0),
             Rule("P", ("a",), 1, 1.0), Rule("Q", ("b",), 1, 1.0)]
    cnf = binarize(Pcfg(rules))
    assert not cnf.synthetic
    assert cnf.rules_as_tuples() == [("P", ("a",), 1.0), ("Q", ("b",), 1.0),
                                     ("TOP", ("P", "Q"), 1.0)]


def test_binarize_round_trip_recovers_rules_exactly():
    rng = random.Random(11)
    for _ in range(100):
        g = random_acyclic_grammar(rng)
        back = debinarize_grammar(binarize(g))
        assert sorted((r.lhs, r.rhs, r.prob) for r in back) == \
            sorted((r.lhs, r.rhs, r.prob) for r in g.rules)


def test_inside_invariant_under_binarization_to_1e12():
    # the chart runs on the CNF form; exhaustive enumeration runs on the
    # original grammar, so agreement bounds the binarization error
    rng = random.Random(12)
    checked = 0
    for _ in range(100):
        g = random_acyclic_grammar(rng)
        toks = random_yield(g, rng)
        if not toks:
            continue
        try:
            probs = all_derivation_probs(g, toks, limit=200)
        except RuntimeError:
            continue
        if not probs:
            continue
        lp = inside_logprob(g, toks)
        assert abs(2 ** lp - sum(probs)) <= 1e-12 * sum(probs)
        checked += 1
    assert checked >= 60


def test_inside_matches_exhaustive_derivation_sum():
    rng = random.Random(20240)
    checked = 0
    for trial in range(100):
        g = random_acyclic_grammar(rng)
        toks = random_yield(g, rng)
        if not toks:
            continue
        try:
            probs = all_derivation_probs(g, toks, limit=200)
        except RuntimeError:
            continue
        lp = inside_logprob(g, toks)
        if not probs:
            assert lp is None
            continue
        assert lp is not None
        assert 2 ** lp == pytest.approx(sum(probs), rel=1e-9)
        checked += 1
    assert checked >= 60


def test_viterbi_matches_exhaustive_max_and_bounded_by_inside():
    rng = random.Random(77)
    checked = 0
    for trial in range(100):
        g = random_acyclic_grammar(rng)
        toks = random_yield(g, rng)
        if not toks:
            continue
        try:
            probs = all_derivation_probs(g, toks, limit=200)
        except RuntimeError:
            continue
        vit = viterbi_parse(g, toks)
        if not probs:
            assert vit is None
            continue
        tree, lp = vit
        assert 2 ** lp == pytest.approx(max(probs), rel=1e-9)
        assert lp <= inside_logprob(g, toks) + 1e-12
        assert tree.leaves() == toks
        checked += 1
    assert checked >= 60


def test_unary_chain_folding_exact():
    # TOP -> A (0.5) -> a, with A -> a (1.0); plus TOP -> a directly impossible
    rules = [Rule("TOP", ("A",), 1, 0.5), Rule("TOP", ("A", "A"), 1, 0.5),
             Rule("A", ("a",), 2, 1.0)]
    g = Pcfg(rules)
    assert 2 ** inside_logprob(g, ["a"]) == pytest.approx(0.5)
    assert 2 ** inside_logprob(g, ["a", "a"]) == pytest.approx(0.5)
    tree, lp = viterbi_parse(g, ["a"])
    assert tree.label == "TOP"
    assert tree.children[0].label == "A"
    assert tree.children[0].token == "a"


def test_two_derivations_sum_to_half():
    rules = [Rule("TOP", ("A", "B"), 1, 0.5), Rule("TOP", ("B", "A"), 1, 0.5),
             Rule("A", ("a",), 1, 0.5), Rule("A", ("b",), 1, 0.5),
             Rule("B", ("a",), 2, 1.0)]
    g = Pcfg(rules)
    assert 2 ** inside_logprob(g, ["a", "a"]) == pytest.approx(0.5)


def test_recognize_trivial_grammar_full_overgeneration():
    g = trivial_l3v6()
    for msg in (["0", "0", "0"], ["5", "3", "1"], ["2", "2", "4"]):
        assert recognize(g, msg)
    assert not recognize(g, ["0", "0"])
    assert not recognize(g, ["0", "0", "0", "0"])
    assert not recognize(g, ["0", "0", "z"])


def test_viterbi_unambiguous_equals_unique_derivation():
    rules = [Rule("TOP", ("P", "Q"), 1, 1.0),
             Rule("P", ("a",), 1, 1.0), Rule("Q", ("b",), 1, 1.0)]
    g = Pcfg(rules)
    tree, lp = viterbi_parse(g, ["a", "b"])
    assert lp == pytest.approx(0.0)
    assert tree.pretty() == "(TOP (P a) (Q b))"


def test_grammar_file_round_trip_bit_exact():
    rng = random.Random(5)
    for _ in range(10):
        g = random_acyclic_grammar(rng)
        g2 = Pcfg.parse(g.serialize())
        assert g2.start == g.start
        assert [(r.lhs, r.rhs, r.count) for r in g2.rules] == \
            [(r.lhs, r.rhs, r.count) for r in g.rules]
        for r, r2 in zip(g.rules, g2.rules):
            assert r.prob == r2.prob  # exact float equality via hex encoding
