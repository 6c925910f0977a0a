"""Unlabeled constituency bracketing for every message in a corpus.

A bracket tree is a nested tuple whose leaves are token positions: position
``i`` is the bare int ``i``, an internal node is a tuple of child subtrees.
The root is always a tuple; a one-token message is bracketed as ``(0,)``.
A treebank maps each unique message of a corpus to its tree.

The main method is a greedy bracketer driven by smoothed pointwise mutual
information between adjacent tokens, which produces strictly binary trees.
Degenerate methods (right/left branching, balanced, random, flat) are
available as controls.
"""

from __future__ import annotations

import math
import random

from .corpus import Corpus
from .errors import DataError, InvariantError

PMI_ALPHA = 0.5

METHODS = ("pmi_greedy", "right_branching", "left_branching", "balanced",
           "random", "flat")


def tree_leaves(tree) -> list:
    """Leaf positions in in-order."""
    if isinstance(tree, int):
        return [tree]
    out = []
    for child in tree:
        out.extend(tree_leaves(child))
    return out


def validate_tree(tree, n_tokens: int):
    """Check yield and arity invariants; raises on violation."""
    if not isinstance(tree, tuple):
        raise InvariantError("tree root must be an internal node")
    if tree_leaves(tree) != list(range(n_tokens)):
        raise InvariantError("tree leaves must be positions 0..n-1 in order")

    def check(node, is_root):
        if isinstance(node, int):
            return
        if len(node) < 2 and not (is_root and len(node) == 1):
            raise InvariantError("internal nodes must have >= 2 children")
        for c in node:
            check(c, False)

    check(tree, True)


def tree_depth(tree) -> int:
    """Longest chain of internal nodes from the root; a flat tree has depth 1."""
    if isinstance(tree, int):
        return 0
    return 1 + max(tree_depth(c) for c in tree)


def tree_spans(tree) -> set:
    """Half-open (start, end) spans of all internal nodes, root included."""
    spans = set()

    def walk(node):
        if isinstance(node, int):
            return node, node + 1
        start = None
        end = None
        for c in node:
            s, e = walk(c)
            if start is None:
                start = s
            end = e
        spans.add((start, end))
        return start, end

    walk(tree)
    return spans


def right_branching_tree(n: int):
    if n == 1:
        return (0,)
    node = n - 1
    for i in range(n - 2, -1, -1):
        node = (i, node)
    return node


def left_branching_tree(n: int):
    if n == 1:
        return (0,)
    node = 0
    for i in range(1, n):
        node = (node, i)
    return node


def balanced_tree(n: int):
    def build(lo, hi):
        if hi - lo == 1:
            return lo
        mid = lo + (hi - lo + 1) // 2
        return (build(lo, mid), build(mid, hi))

    if n == 1:
        return (0,)
    return build(0, n)


def flat_tree(n: int):
    return tuple(range(n))


def random_binary_tree(n: int, rng: random.Random):
    def build(lo, hi):
        if hi - lo == 1:
            return lo
        split = rng.randrange(lo + 1, hi)
        return (build(lo, split), build(split, hi))

    if n == 1:
        return (0,)
    return build(0, n)


class PairStats:
    """Frequency-weighted adjacent-pair and unigram counts over a corpus."""

    def __init__(self, corpus: Corpus):
        pairs: dict = {}
        unigrams: dict = {}
        total_pairs = 0
        for msg, count in corpus.items():
            for t in msg:
                unigrams[t] = unigrams.get(t, 0) + count
            for x, y in zip(msg, msg[1:]):
                pairs[(x, y)] = pairs.get((x, y), 0) + count
                total_pairs += count
        self.pairs = pairs
        self.unigrams = unigrams
        # total adjacent-pair count; >= 1 keeps the smoothed PMI finite even
        # for corpora of one-token messages
        self.total = max(total_pairs, 1)

    def pmi(self, x: int, y: int) -> float:
        cxy = self.pairs.get((x, y), 0)
        cx = self.unigrams.get(x, 0)
        cy = self.unigrams.get(y, 0)
        return math.log2((cxy + PMI_ALPHA) * self.total
                         / ((cx + PMI_ALPHA) * (cy + PMI_ALPHA)))


def pmi_greedy_tree(msg, stats: PairStats):
    """Greedy bottom-up merging of the adjacent span pair with the highest
    boundary PMI, ties broken leftmost.

    The score of merging two adjacent spans depends only on the boundary
    token pair (last token of the left span, first token of the right), so
    the boundary scores are fixed up front.
    """
    n = len(msg)
    if n == 1:
        return (0,)
    spans = [i for i in range(n)]
    # score of the boundary to the right of spans[i]
    scores = [stats.pmi(msg[j - 1], msg[j]) for j in range(1, n)]
    while len(spans) > 1:
        best = 0
        for i in range(1, len(scores)):
            if scores[i] > scores[best]:
                best = i
        spans[best:best + 2] = [(spans[best], spans[best + 1])]
        del scores[best]
    return spans[0]


def induce_brackets(corpus: Corpus, method: str = "pmi_greedy", seed: int = 0) -> dict:
    """One bracket tree per unique message; returns {message: tree}."""
    if method not in METHODS:
        raise DataError(f"unknown induction method {method!r}; choose from {METHODS}")
    treebank: dict = {}
    if method == "pmi_greedy":
        stats = PairStats(corpus)
        for msg in corpus.messages():
            treebank[msg] = pmi_greedy_tree(msg, stats)
        return treebank
    for msg in corpus.messages():
        n = len(msg)
        if method == "right_branching":
            tree = right_branching_tree(n)
        elif method == "left_branching":
            tree = left_branching_tree(n)
        elif method == "balanced":
            tree = balanced_tree(n)
        elif method == "flat":
            tree = flat_tree(n)
        else:  # random, with a per-message stream independent of corpus order
            rng = random.Random(f"{seed}|{' '.join(map(str, msg))}")
            tree = random_binary_tree(n, rng)
        treebank[msg] = tree
    return treebank


def serialize_treebank(treebank: dict, corpus: Corpus) -> str:
    """One bracketed tree per line with the placeholder label T, e.g.
    ``(T a (T b c))``; messages in canonical corpus order."""
    lines = []
    for msg in sorted(treebank):
        toks = [corpus.vocab.symbol(t) for t in msg]

        def render(node):
            if isinstance(node, int):
                return toks[node]
            return "(T " + " ".join(render(c) for c in node) + ")"

        lines.append(render(treebank[msg]))
    return "\n".join(lines) + "\n"


def parse_treebank(text: str, corpus: Corpus) -> dict:
    """Inverse of serialize_treebank; leaf tokens are mapped back to positions."""
    treebank: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens, tree = _parse_tree_line(line, lineno)
        msg = tuple(corpus.vocab.id_of(t) for t in tokens)
        treebank[msg] = tree
    if not treebank:
        raise DataError("treebank file contains no trees")
    return treebank


def _parse_tree_line(line: str, lineno: int):
    pos = 0
    tokens: list = []

    def parse():
        nonlocal pos
        if pos >= len(line):
            raise DataError(f"line {lineno}: unexpected end of tree")
        if line[pos] == "(":
            pos += 1
            label_end = pos
            while label_end < len(line) and line[label_end] not in " ()":
                label_end += 1
            pos = label_end
            children = []
            while True:
                while pos < len(line) and line[pos] == " ":
                    pos += 1
                if pos >= len(line):
                    raise DataError(f"line {lineno}: unbalanced brackets")
                if line[pos] == ")":
                    pos += 1
                    if not children:
                        raise DataError(f"line {lineno}: empty constituent")
                    return tuple(children)
                children.append(parse())
        start = pos
        while pos < len(line) and line[pos] not in " ()":
            pos += 1
        if start == pos:
            raise DataError(f"line {lineno}: malformed tree")
        tokens.append(line[start:pos])
        return len(tokens) - 1

    tree = parse()
    while pos < len(line) and line[pos] == " ":
        pos += 1
    if pos != len(line):
        raise DataError(f"line {lineno}: trailing characters after tree")
    if isinstance(tree, int):
        tree = (tree,)
    return tokens, tree
