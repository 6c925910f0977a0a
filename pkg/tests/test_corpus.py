import math

import pytest

from syngram import DataError, Vocabulary, load_corpus, sample_pool, split


def test_load_dedup_and_counts():
    c = load_corpus("a b\na b\nb a\n")
    assert len(c) == 2
    vocab = c.vocab
    ab = (vocab.id_of("a"), vocab.id_of("b"))
    ba = (vocab.id_of("b"), vocab.id_of("a"))
    assert c.freq(ab) == 2
    assert c.freq(ba) == 1
    assert c.total_count() == 3


def test_stop_token_stripped_before_dedup():
    c = load_corpus("0 3 EOS\n", stop_token="EOS")
    assert len(c) == 1
    (msg,) = c.messages()
    assert len(msg) == 2
    assert c.text(msg) == "0 3"
    assert "EOS" not in c.vocab.symbols


def test_stop_only_lines_dropped_with_warning():
    with pytest.warns(UserWarning):
        c = load_corpus("EOS EOS\na b\n", stop_token="EOS")
    assert len(c) == 1


def test_empty_input_rejected():
    with pytest.raises(DataError):
        load_corpus("")
    with pytest.raises(DataError):
        load_corpus("\n\n")


def test_length_cap():
    ok = load_corpus(" ".join(["a"] * 64) + "\n")
    assert ok.l_max == 64
    with pytest.raises(DataError):
        load_corpus(" ".join(["a"] * 65) + "\n")


def test_count_suffix_overrides_repetition():
    c = load_corpus("a b\t5\na b\nc\t2\n")
    vocab = c.vocab
    assert c.freq((vocab.id_of("a"), vocab.id_of("b"))) == 6
    assert c.freq((vocab.id_of("c"),)) == 2


def test_serialize_round_trip_preserves_messages_and_counts():
    c = load_corpus("b a\na b\na b\nc a b\t3\n")
    c2 = load_corpus(c.serialize())
    texts = {c.text(m): c.freq(m) for m in c.messages()}
    texts2 = {c2.text(m): c2.freq(m) for m in c2.messages()}
    assert texts == texts2


def test_split_sizes_round_half_up():
    c = load_corpus("\n".join(f"s{i} t{i}" for i in range(10)))
    sp = split(c, 0.10, seed=0)
    assert len(sp.induction) == 9
    assert len(sp.evaluation) == 1

    c378 = load_corpus("\n".join(f"m{i}" for i in range(378)))
    sp378 = split(c378, 0.20, seed=0)
    assert len(sp378.induction) == 302
    assert len(sp378.evaluation) == 76


def test_split_deterministic_and_partition():
    c = load_corpus("\n".join(f"x{i} y{i}" for i in range(50)))
    a = split(c, 0.3, seed=11)
    b = split(c, 0.3, seed=11)
    assert a.induction.messages() == b.induction.messages()
    assert a.evaluation.messages() == b.evaluation.messages()
    all_msgs = set(a.induction.messages()) | set(a.evaluation.messages())
    assert all_msgs == set(c.messages())
    assert not set(a.induction.messages()) & set(a.evaluation.messages())


def test_split_rejects_bad_fraction():
    c = load_corpus("a\nb\n")
    for frac in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(DataError):
            split(c, frac, seed=0)


def test_sample_pool_single_support():
    c = load_corpus("a b c\n")
    pool = sample_pool(c, 500, seed=0)
    assert len(pool) == 1
    assert pool.messages() == c.messages()


def test_sample_pool_subset_and_deterministic():
    c = load_corpus("\n".join(f"u{i} v{i}" for i in range(40)))
    p1 = sample_pool(c, 25, seed=5)
    p2 = sample_pool(c, 25, seed=5)
    assert p1.messages() == p2.messages()
    assert set(p1.messages()) <= set(c.messages())
    assert p1.total_count() == 25


def test_sample_pool_expected_unique_count():
    # Uniform corpus of N messages sampled n times with replacement: the
    # number of distinct draws U has a closed-form mean and variance.
    n_msgs, n_draws = 1000, 8000
    c = load_corpus("\n".join(f"w{i} z{i}" for i in range(n_msgs)))
    pool = sample_pool(c, n_draws, seed=13)
    q = 1.0 - (1.0 - 1.0 / n_msgs) ** n_draws
    q2 = 1.0 - 2.0 * (1.0 - 1.0 / n_msgs) ** n_draws \
        + (1.0 - 2.0 / n_msgs) ** n_draws
    mean = n_msgs * q
    var = n_msgs * q * (1 - q) + n_msgs * (n_msgs - 1) * (q2 - q * q)
    sigma = math.sqrt(max(var, 1e-12))
    assert abs(len(pool) - mean) <= 3.0 * sigma + 1.0


def test_vocabulary_rejects_duplicates():
    with pytest.raises(DataError):
        Vocabulary(["a", "b", "a"])
