"""Degenerate baseline languages: fully random and symbol-shuffled.

Both baselines preserve the vocabulary and message-length distribution of a
source language.  The random baseline samples symbols independently and
uniformly; the shuffled baseline applies one global permutation to the
source's token stream, so the corpus-level symbol distribution is preserved
while symbol order carries no information.
"""

from __future__ import annotations

import random

from .corpus import Corpus, Vocabulary
from .errors import DataError


class LengthDistribution:
    """Histogram of message lengths with at least one positive bin."""

    def __init__(self, histogram: dict):
        hist = {int(l): int(c) for l, c in histogram.items() if c > 0}
        if not hist:
            raise DataError("length distribution has no positive bin")
        if any(l < 1 for l in hist):
            raise DataError("message lengths must be >= 1")
        self.histogram = hist

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "LengthDistribution":
        return cls(corpus.length_histogram())

    def support(self) -> list:
        return sorted(self.histogram)

    def sample(self, rng: random.Random) -> int:
        lengths = self.support()
        weights = [self.histogram[l] for l in lengths]
        return rng.choices(lengths, weights=weights, k=1)[0]

    def n_realizable(self, v: int) -> int:
        """Number of distinct messages over a v-symbol vocabulary."""
        return sum(v ** l for l in self.support())


def gen_random_language(vocab: Vocabulary, lengths: LengthDistribution,
                        n_unique: int, seed: int) -> Corpus:
    """Generate exactly n_unique distinct messages of i.i.d. uniform symbols.

    Each draw picks a length from the distribution, then fills positions
    uniformly at random; duplicate draws are rejected and resampled.  All
    resulting message frequencies are 1.
    """
    if n_unique < 1:
        raise DataError("n_unique must be >= 1")
    v = len(vocab)
    if lengths.n_realizable(v) < n_unique:
        raise DataError(
            f"cannot generate {n_unique} distinct messages: only "
            f"{lengths.n_realizable(v)} are realizable over {v} symbols")
    rng = random.Random(seed)
    seen: set = set()
    while len(seen) < n_unique:
        length = lengths.sample(rng)
        msg = tuple(rng.randrange(v) for _ in range(length))
        seen.add(msg)
    return Corpus(vocab, {m: 1 for m in seen})


def gen_shuffled_language(source: Corpus, seed: int, max_retries: int = 20) -> Corpus:
    """Globally permute the source's token stream and re-segment it.

    The concatenated tokens of the source's unique messages (canonical order)
    are shuffled once, then cut back into the original message lengths.  A
    re-segmented message that duplicates an earlier one is re-shuffled
    internally up to max_retries times and dropped if still a duplicate, so
    the result has at most as many messages as the source and the surviving
    token multiset equals the source multiset minus dropped messages.
    """
    if max_retries < 1:
        raise DataError("max_retries must be >= 1")
    msgs = source.messages()
    stream = [t for m in msgs for t in m]
    rng = random.Random(seed)
    rng.shuffle(stream)
    out: dict = {}
    pos = 0
    for m in msgs:
        segment = stream[pos:pos + len(m)]
        pos += len(m)
        candidate = tuple(segment)
        retries = 0
        while candidate in out and retries < max_retries:
            rng.shuffle(segment)
            candidate = tuple(segment)
            retries += 1
        if candidate in out:
            continue  # dropped: still a duplicate after max_retries
        out[candidate] = 1
    if not out:
        raise DataError("all shuffled messages collided; source too degenerate")
    return Corpus(source.vocab, out)
