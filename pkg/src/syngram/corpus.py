"""Message and corpus data model.

A corpus is a deduplicated set of messages over a finite symbol vocabulary,
with an occurrence count per unique message.  Messages are tuples of integer
symbol ids.  All corpus values are immutable after construction; operations
that need randomness take an explicit integer seed and iterate messages in a
canonical (sorted) order so results do not depend on insertion order.
"""

from __future__ import annotations

import math
import random
import warnings

from .errors import DataError

# Messages longer than this are rejected at load time.
HARD_LENGTH_CAP = 64

Message = tuple  # tuple[int, ...] of symbol ids


class Vocabulary:
    """Ordered list of distinct token strings; a symbol id is a list index."""

    def __init__(self, symbols):
        self.symbols = tuple(symbols)
        if not self.symbols:
            raise DataError("vocabulary must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise DataError("vocabulary contains duplicate symbols")
        self._ids = {s: i for i, s in enumerate(self.symbols)}

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.symbols == other.symbols

    def __repr__(self):
        return f"Vocabulary({len(self)} symbols)"

    def id_of(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise DataError(f"unknown symbol {symbol!r}") from None

    def symbol(self, sid: int) -> str:
        if not 0 <= sid < len(self.symbols):
            raise DataError(f"symbol id {sid} out of range")
        return self.symbols[sid]


class Corpus:
    """Unique messages with positive occurrence counts over one vocabulary."""

    def __init__(self, vocab: Vocabulary, freq: dict):
        if not freq:
            raise DataError("corpus is empty")
        self.vocab = vocab
        v = len(vocab)
        for msg, count in freq.items():
            if not msg:
                raise DataError("corpus contains an empty message")
            if count < 1:
                raise DataError("message counts must be >= 1")
            if any(not 0 <= t < v for t in msg):
                raise DataError(f"message {msg} has a token id outside the vocabulary")
        self._freq = dict(freq)
        self.l_max = max(len(m) for m in freq)

    def __len__(self):
        """Number of unique messages."""
        return len(self._freq)

    def __contains__(self, msg):
        return tuple(msg) in self._freq

    def messages(self) -> list:
        """Unique messages in canonical (sorted by token ids) order."""
        return sorted(self._freq)

    def freq(self, msg) -> int:
        return self._freq[tuple(msg)]

    def items(self):
        """(message, count) pairs in canonical order."""
        return [(m, self._freq[m]) for m in self.messages()]

    def total_count(self) -> int:
        """Total number of message occurrences, counting repetitions."""
        return sum(self._freq.values())

    def text(self, msg) -> str:
        return " ".join(self.vocab.symbol(t) for t in msg)

    def length_histogram(self) -> dict:
        """Unique-message length -> count."""
        hist = {}
        for m in self._freq:
            hist[len(m)] = hist.get(len(m), 0) + 1
        return hist

    def token_strings(self) -> set:
        """Distinct token strings that actually occur in some message."""
        seen = {t for m in self._freq for t in m}
        return {self.vocab.symbol(t) for t in seen}

    def serialize(self) -> str:
        """One message per line, canonical order, 'TAB count' when count > 1."""
        lines = []
        for msg in self.messages():
            count = self._freq[msg]
            line = self.text(msg)
            if count > 1:
                line += f"\t{count}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def restricted_to(self, messages) -> "Corpus":
        """Sub-corpus over the given messages, keeping counts and vocabulary."""
        return Corpus(self.vocab, {m: self._freq[m] for m in messages})


class SplitCorpus:
    """Disjoint induction/evaluation partition sharing one vocabulary."""

    def __init__(self, induction: Corpus, evaluation: Corpus, metadata=None):
        if induction.vocab is not evaluation.vocab and induction.vocab != evaluation.vocab:
            raise DataError("induction and evaluation sets must share a vocabulary")
        overlap = set(induction._freq) & set(evaluation._freq)
        if overlap:
            raise DataError(f"induction and evaluation sets overlap on {len(overlap)} messages")
        self.induction = induction
        self.evaluation = evaluation
        self.metadata = dict(metadata or {})


def load_corpus(text: str, stop_token: str | None = None,
                length_cap: int = HARD_LENGTH_CAP) -> Corpus:
    """Parse a line-oriented corpus into a deduplicated Corpus.

    Each line is a whitespace-separated token sequence; repeated lines add to
    the message count.  A line may carry an explicit count after a TAB, which
    overrides repetition-based counting for that occurrence.  Occurrences of
    ``stop_token`` are stripped before deduplication; lines that are empty, or
    become empty after stripping, are dropped (with a warning for the
    stop-only case).
    """
    counts: dict = {}
    order: list = []  # token strings in first-appearance order
    seen_tokens: set = set()
    n_kept = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if "\t" in raw:
            body, _, suffix = raw.partition("\t")
            suffix = suffix.strip()
            try:
                count = int(suffix)
            except ValueError:
                raise DataError(f"line {lineno}: count suffix {suffix!r} is not an integer")
            if count < 1:
                raise DataError(f"line {lineno}: count must be >= 1")
        else:
            body, count = raw, 1
        tokens = body.split()
        if not tokens:
            continue
        if stop_token is not None:
            stripped = [t for t in tokens if t != stop_token]
            if not stripped:
                warnings.warn(f"line {lineno}: message consists only of stop tokens; dropped")
                continue
            tokens = stripped
        if len(tokens) > length_cap:
            raise DataError(f"line {lineno}: message length {len(tokens)} exceeds cap {length_cap}")
        for t in tokens:
            if t not in seen_tokens:
                seen_tokens.add(t)
                order.append(t)
        key = tuple(tokens)
        counts[key] = counts.get(key, 0) + count
        n_kept += 1
    if not counts:
        raise DataError("input contains no messages")
    vocab = Vocabulary(order)
    freq = {tuple(vocab.id_of(t) for t in msg): c for msg, c in counts.items()}
    return Corpus(vocab, freq)


def split(corpus: Corpus, eval_fraction: float, seed: int) -> SplitCorpus:
    """Partition unique messages into induction and evaluation sets.

    The evaluation set receives round(eval_fraction * N) messages (half-up),
    chosen by a seeded uniform shuffle of the canonical message order.
    """
    if not 0.0 < eval_fraction < 1.0:
        raise DataError(f"eval_fraction must be in (0, 1), got {eval_fraction}")
    msgs = corpus.messages()
    if len(msgs) < 2:
        raise DataError("need at least 2 unique messages to split")
    n_eval = int(math.floor(eval_fraction * len(msgs) + 0.5))
    n_eval = max(1, min(n_eval, len(msgs) - 1))
    rng = random.Random(seed)
    rng.shuffle(msgs)
    evaluation = corpus.restricted_to(msgs[:n_eval])
    induction = corpus.restricted_to(msgs[n_eval:])
    return SplitCorpus(induction, evaluation,
                       metadata={"eval_fraction": eval_fraction, "seed": seed})


def sample_pool(corpus: Corpus, n: int, seed: int) -> Corpus:
    """Draw n messages with replacement, proportional to frequency.

    Returns the unique messages of the draw as a corpus whose counts are the
    draw multiplicities, so the result has at most n unique messages and is
    always a subset of the source message set.
    """
    if n < 1:
        raise DataError(f"pool size must be >= 1, got {n}")
    msgs = corpus.messages()
    weights = [corpus.freq(m) for m in msgs]
    rng = random.Random(seed)
    drawn = rng.choices(msgs, weights=weights, k=n)
    freq: dict = {}
    for m in drawn:
        freq[m] = freq.get(m, 0) + 1
    return Corpus(corpus.vocab, freq)
