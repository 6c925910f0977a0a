"""Probabilistic context-free grammar engine.

Covers relative-frequency extraction from labeled treebanks, grammar and data
description lengths in bits, binarization to Chomsky normal form, and chart
algorithms (recognition, inside probability, Viterbi parsing) over the
binarized form.  Grammars are immutable once constructed; the CNF form is
built lazily and cached.

Unary label chains are folded into the CNF by enumerating unary paths, one
CNF rule per (path, base rule) pair, which keeps both the inside sum and the
Viterbi max exactly equal to their values on the original grammar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Corpus
from .errors import DataError, InvariantError

PROB_TOL = 1e-9


@dataclass(frozen=True)
class LabeledTree:
    """Constituency tree node; leaves carry a token and no children."""

    label: str
    children: tuple = ()
    token: str | None = None

    def __post_init__(self):
        if (self.token is None) == (len(self.children) == 0):
            raise InvariantError("a node has either children or a token")

    def is_leaf(self) -> bool:
        return self.token is not None

    def leaves(self) -> list:
        if self.is_leaf():
            return [self.token]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def depth(self) -> int:
        """Longest internal-node chain from the root; leaves have depth 0."""
        if self.is_leaf():
            return 0
        return 1 + max(c.depth() for c in self.children)

    def pretty(self) -> str:
        if self.is_leaf():
            return f"({self.label} {self.token})"
        return f"({self.label} " + " ".join(c.pretty() for c in self.children) + ")"


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple
    count: float
    prob: float


class Pcfg:
    """Rules with relative-frequency probabilities and derived inventories."""

    def __init__(self, rules, start: str = "TOP", validate: bool = True):
        self.start = start
        self.rules = tuple(rules)
        if not self.rules:
            raise DataError("grammar has no rules")
        lhs_order: list = []
        seen_lhs: set = set()
        for r in self.rules:
            if r.lhs not in seen_lhs:
                seen_lhs.add(r.lhs)
                lhs_order.append(r.lhs)
        self._lhs_set = seen_lhs
        term_order: list = []
        seen_term: set = set()
        for r in self.rules:
            for sym in r.rhs:
                if sym not in seen_lhs and sym not in seen_term:
                    seen_term.add(sym)
                    term_order.append(sym)
        self.terminals = tuple(term_order)
        self._term_set = seen_term
        by_lhs: dict = {}
        for r in self.rules:
            by_lhs.setdefault(r.lhs, []).append(r)
        self._by_lhs = by_lhs
        pre = []
        non = []
        for lhs in lhs_order:
            if all(len(r.rhs) == 1 and r.rhs[0] in seen_term for r in by_lhs[lhs]):
                pre.append(lhs)
            else:
                non.append(lhs)
        self.preterminals = tuple(pre)
        self.nonterminals = tuple(non)  # includes the start label
        self._cnf = None
        if validate:
            self._validate()

    def _validate(self):
        if self.start not in self._lhs_set:
            raise DataError(f"start label {self.start!r} has no rules")
        for r in self.rules:
            if self.start in r.rhs:
                raise InvariantError(f"start label appears in a right-hand side: "
                                     f"{r.lhs} -> {' '.join(r.rhs)}")
            if not r.rhs:
                raise DataError(f"rule {r.lhs} has an empty right-hand side")
        for lhs, rules in self._by_lhs.items():
            total_prob = sum(r.prob for r in rules)
            if abs(total_prob - 1.0) > PROB_TOL:
                raise InvariantError(f"probabilities of {lhs} sum to {total_prob!r}")
            total_count = sum(r.count for r in rules)
            for r in rules:
                if abs(r.prob - r.count / total_count) > PROB_TOL:
                    raise InvariantError(f"rule {r.lhs} -> {' '.join(r.rhs)}: "
                                         "prob does not match count normalization")

    @property
    def symbol_count(self) -> int:
        """Size of the full symbol alphabet (labels plus terminals)."""
        return len(self.nonterminals) + len(self.preterminals) + len(self.terminals)

    def rules_for(self, lhs: str) -> list:
        return list(self._by_lhs.get(lhs, ()))

    def is_terminal(self, sym: str) -> bool:
        return sym in self._term_set

    def cnf(self) -> "CnfGrammar":
        if self._cnf is None:
            self._cnf = binarize(self)
        return self._cnf

    def serialize(self) -> str:
        """Text format, bit-exact on round trip (probabilities as float hex)."""
        lines = ["# syngram pcfg v1",
                 f"# start: {self.start}",
                 f"# nonterminals: {' '.join(self.nonterminals)}",
                 f"# preterminals: {' '.join(self.preterminals)}",
                 f"# terminals: {' '.join(self.terminals)}"]
        for r in self.rules:
            count = repr(int(r.count)) if float(r.count).is_integer() else float(r.count).hex()
            lines.append(f"{r.lhs} -> {' '.join(r.rhs)} # {count} {r.prob.hex()}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "Pcfg":
        start = "TOP"
        rules = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# start:"):
                    start = line.split(":", 1)[1].strip()
                continue
            try:
                head, tail = line.split("->", 1)
                body, meta = tail.rsplit("#", 1)
                count_s, prob_s = meta.split()
                count = int(count_s) if "x" not in count_s else float.fromhex(count_s)
                prob = float.fromhex(prob_s) if "x" in prob_s else float(prob_s)
                rules.append(Rule(head.strip(), tuple(body.split()), count, prob))
            except ValueError as exc:
                raise DataError(f"grammar line {lineno}: {exc}") from exc
        return cls(rules, start=start)


def _tree_rules(node: LabeledTree):
    if node.is_leaf():
        yield node.label, (node.token,)
        return
    yield node.label, tuple(c.label for c in node.children)
    for c in node.children:
        yield from _tree_rules(c)


def extract_grammar(treebank, start: str = "TOP") -> Pcfg:
    """Read a grammar off a labeled treebank by relative-frequency estimation.

    The treebank is a dict mapping messages to LabeledTree values (or any
    iterable of trees); every tree counts once.  A label that mixes lexical
    and non-lexical rules is split into a lexical twin reached through a
    unary bridge, so that every pre-terminal rewrites only to terminals.
    """
    trees = list(treebank.values()) if isinstance(treebank, dict) else list(treebank)
    if not trees:
        raise DataError("labeled treebank is empty")
    counts: dict = {}
    labels: set = set()

    def collect_labels(node):
        labels.add(node.label)
        for c in node.children:
            collect_labels(c)

    for t in trees:
        collect_labels(t)
    for t in trees:
        for key in _tree_rules(t):
            counts[key] = counts.get(key, 0) + 1
        for token in t.leaves():
            if token in labels:
                raise InvariantError(f"token {token!r} is also used as a label")

    # split labels that mix lexical and phrasal rules
    lexical: dict = {}
    phrasal: dict = {}
    for (lhs, rhs), c in counts.items():
        if len(rhs) == 1 and rhs[0] not in labels:
            lexical.setdefault(lhs, {})[rhs] = c
        else:
            phrasal.setdefault(lhs, {})[rhs] = c
    final: dict = {}
    for lhs in labels:
        lex = lexical.get(lhs, {})
        phr = phrasal.get(lhs, {})
        if lex and phr:
            twin = f"{lhs}@lex"
            if twin in labels:
                raise InvariantError(f"label {twin!r} already exists")
            for rhs, c in lex.items():
                final[(twin, rhs)] = c
            final[(lhs, (twin,))] = sum(lex.values())
            for rhs, c in phr.items():
                final[(lhs, rhs)] = c
        else:
            for rhs, c in lex.items():
                final[(lhs, rhs)] = c
            for rhs, c in phr.items():
                final[(lhs, rhs)] = c

    totals: dict = {}
    for (lhs, _), c in final.items():
        totals[lhs] = totals.get(lhs, 0) + c
    keys = sorted(final, key=lambda k: (k[0] != start, k[0], k[1]))
    rules = [Rule(lhs, rhs, final[(lhs, rhs)], final[(lhs, rhs)] / totals[lhs])
             for lhs, rhs in keys]
    return Pcfg(rules, start=start)


def gdl(g: Pcfg) -> float:
    """Grammar description length: every rule is encoded as its left-hand
    side followed by its right-hand side under a uniform code over the full
    symbol alphabet, costing (|rhs| + 1) * log2(S) bits."""
    log_s = math.log2(g.symbol_count)
    return sum((len(r.rhs) + 1) * log_s for r in g.rules)


def enumeration_baseline_gdl(corpus: Corpus) -> float:
    """Description length of the grammar with one start rule per unique
    message; the trivial upper bound a useful grammar must beat."""
    observed = corpus.token_strings()
    log_s = math.log2(1 + len(observed))
    return sum((len(m) + 1) * log_s for m in corpus.messages())


# ---------------------------------------------------------------------------
# CNF form and chart algorithms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _CnfMeta:
    """Provenance of a CNF rule: the unary path above the base rule, the base
    rule itself, and how far along its binarized spine this rule sits."""

    chain: tuple  # Rule objects of the unary path, outermost first
    base: Rule | None  # None for synthetic terminal wrappers
    spine_pos: int = 0


class CnfGrammar:
    """Binarized grammar: lexical entries plus strictly binary rules."""

    def __init__(self, start: str, lexical: dict, binary_by_left: dict,
                 synthetic: set):
        self.start = start
        self.lexical = lexical  # token -> [(lhs, prob, meta)]
        self.binary_by_left = binary_by_left  # left -> [(right, parent, prob, meta)]
        self.synthetic = synthetic

    def rules_as_tuples(self) -> list:
        out = []
        for token in sorted(self.lexical):
            for lhs, prob, _ in self.lexical[token]:
                out.append((lhs, (token,), prob))
        for left in sorted(self.binary_by_left):
            for right, parent, prob, _ in self.binary_by_left[left]:
                out.append((parent, (left, right), prob))
        return out


def _unary_paths(g: Pcfg):
    """All unary label paths X => ... => Y, including the empty path from
    each label to itself.  Raises on unary cycles."""
    edges: dict = {}
    for r in g.rules:
        if len(r.rhs) == 1 and not g.is_terminal(r.rhs[0]):
            edges.setdefault(r.lhs, []).append(r)
    paths: dict = {}  # target label -> [(origin, chain rules, prob)]

    def walk(origin, label, chain, prob, on_path):
        paths.setdefault(label, []).append((origin, tuple(chain), prob))
        for rule in edges.get(label, ()):
            nxt = rule.rhs[0]
            if nxt in on_path:
                raise DataError("grammar has a unary rule cycle; cannot binarize")
            walk(origin, nxt, chain + [rule], prob * rule.prob, on_path | {nxt})

    for lhs in list(g._lhs_set):
        walk(lhs, lhs, [], 1.0, {lhs})
    return paths


def binarize(g: Pcfg) -> CnfGrammar:
    """Right-factored CNF with unary chains folded in.

    Synthetic spine labels carry probability 1 on continuation rules; inline
    terminals inside long rules get a probability-1 synthetic pre-terminal.
    Inside and Viterbi values are invariant under this transform.
    """
    for label in g.nonterminals + g.preterminals:
        if label.startswith("~"):
            raise DataError("labels starting with '~' are reserved for binarization")
    paths = _unary_paths(g)
    lexical: dict = {}
    binary_by_left: dict = {}
    synthetic: set = set()
    inline_terms: set = set()

    def add_lexical(token, lhs, prob, meta):
        lexical.setdefault(token, []).append((lhs, prob, meta))

    def add_binary(parent, left, right, prob, meta):
        binary_by_left.setdefault(left, []).append((right, parent, prob, meta))

    def item_label(sym, rule):
        if g.is_terminal(sym):
            wrapper = f"~t~{sym}"
            if wrapper not in inline_terms:
                inline_terms.add(wrapper)
                synthetic.add(wrapper)
                add_lexical(sym, wrapper, 1.0,
                            _CnfMeta(chain=(), base=None))
            return wrapper
        return sym

    cnf_id = 0
    for rule in g.rules:
        if len(rule.rhs) == 1 and not g.is_terminal(rule.rhs[0]):
            continue  # chain edge, folded into paths
        base_targets = paths.get(rule.lhs, [(rule.lhs, (), 1.0)])
        for origin, chain, chain_prob in base_targets:
            meta = _CnfMeta(chain=chain, base=rule)
            prob = chain_prob * rule.prob
            if len(rule.rhs) == 1:  # lexical base rule
                add_lexical(rule.rhs[0], origin, prob, meta)
                continue
            items = [item_label(sym, rule) for sym in rule.rhs]
            k = len(items)
            if k == 2:
                add_binary(origin, items[0], items[1], prob, meta)
            else:
                cnf_id += 1
                spine = [f"~{cnf_id}~{j}" for j in range(1, k - 1)]
                synthetic.update(spine)
                add_binary(origin, items[0], spine[0], prob, meta)
                for j in range(1, k - 1):
                    right = spine[j] if j < k - 2 else items[k - 1]
                    add_binary(spine[j - 1], items[j],
                               right if j == k - 2 else spine[j],
                               1.0, _CnfMeta(chain=(), base=rule, spine_pos=j))
    return CnfGrammar(g.start, lexical, binary_by_left, synthetic)


def debinarize_grammar(cnf: CnfGrammar) -> list:
    """Recover the original rule set (with exact probabilities) from a CNF
    grammar's provenance records; inverse of binarize up to rule order."""
    seen: dict = {}

    def add(rule):
        seen[(rule.lhs, rule.rhs)] = rule

    for entries in cnf.lexical.values():
        for _, _, meta in entries:
            if meta.base is None:
                continue  # synthetic inline-terminal wrapper
            add(meta.base)
            for rule in meta.chain:
                add(rule)
    for entries in cnf.binary_by_left.values():
        for _, _, _, meta in entries:
            if meta.base is None or meta.spine_pos > 0:
                continue
            add(meta.base)
            for rule in meta.chain:
                add(rule)
    return [seen[k] for k in sorted(seen)]


def _inside_chart(cnf: CnfGrammar, tokens):
    n = len(tokens)
    chart = [[None] * (n + 1) for _ in range(n)]
    for i, tok in enumerate(tokens):
        cell: dict = {}
        for lhs, prob, _ in cnf.lexical.get(tok, ()):
            cell[lhs] = cell.get(lhs, 0.0) + prob
        chart[i][i + 1] = cell
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            k = i + width
            cell = {}
            for j in range(i + 1, k):
                left_cell = chart[i][j]
                right_cell = chart[j][k]
                if not left_cell or not right_cell:
                    continue
                for left, lp in left_cell.items():
                    for right, parent, prob, _ in cnf.binary_by_left.get(left, ()):
                        rp = right_cell.get(right)
                        if rp is not None:
                            cell[parent] = cell.get(parent, 0.0) + lp * prob * rp
            chart[i][k] = cell
    return chart


def recognize(g: Pcfg, tokens) -> bool:
    """True iff the start label derives the token sequence."""
    tokens = list(tokens)
    if not tokens:
        return False
    cnf = g.cnf()
    if any(tok not in cnf.lexical for tok in tokens):
        return False
    n = len(tokens)
    chart = [[None] * (n + 1) for _ in range(n)]
    for i, tok in enumerate(tokens):
        chart[i][i + 1] = {lhs for lhs, _, _ in cnf.lexical.get(tok, ())}
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            k = i + width
            cell = set()
            for j in range(i + 1, k):
                left_cell = chart[i][j]
                right_cell = chart[j][k]
                if not left_cell or not right_cell:
                    continue
                for left in left_cell:
                    for right, parent, _, _ in cnf.binary_by_left.get(left, ()):
                        if right in right_cell:
                            cell.add(parent)
            chart[i][k] = cell
    return g.start in chart[0][n]


def inside_logprob(g: Pcfg, tokens) -> float | None:
    """log2 of the total probability of all derivations; None if unparseable."""
    tokens = list(tokens)
    if not tokens:
        return None
    cnf = g.cnf()
    if any(tok not in cnf.lexical for tok in tokens):
        return None
    chart = _inside_chart(cnf, tokens)
    p = chart[0][len(tokens)].get(g.start, 0.0)
    if p <= 0.0:
        return None
    return math.log2(p)


def viterbi_parse(g: Pcfg, tokens):
    """Most probable parse as (LabeledTree, log2 prob); None if unparseable.

    Ties are broken deterministically by preferring the first candidate in
    rule order and the lowest split point.
    """
    tokens = list(tokens)
    if not tokens:
        return None
    cnf = g.cnf()
    if any(tok not in cnf.lexical for tok in tokens):
        return None
    n = len(tokens)
    chart = [[None] * (n + 1) for _ in range(n)]
    for i, tok in enumerate(tokens):
        cell: dict = {}
        for lhs, prob, meta in cnf.lexical.get(tok, ()):
            if lhs not in cell or prob > cell[lhs][0]:
                cell[lhs] = (prob, None, None, meta, tok)
        chart[i][i + 1] = cell
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            k = i + width
            cell = {}
            for j in range(i + 1, k):
                left_cell = chart[i][j]
                right_cell = chart[j][k]
                if not left_cell or not right_cell:
                    continue
                for left, lentry in left_cell.items():
                    for right, parent, prob, meta in cnf.binary_by_left.get(left, ()):
                        rentry = right_cell.get(right)
                        if rentry is None:
                            continue
                        p = lentry[0] * prob * rentry[0]
                        if parent not in cell or p > cell[parent][0]:
                            cell[parent] = (p, j, (left, right), meta, None)
            chart[i][k] = cell
    root = chart[0][n].get(g.start)
    if root is None or root[0] <= 0.0:
        return None
    tree = _debinarize(cnf, chart, 0, n, g.start)
    return tree, math.log2(root[0])


def _debinarize(cnf: CnfGrammar, chart, i, k, label) -> LabeledTree:
    entry = chart[i][k][label]
    prob, split, pair, meta, token = entry
    if token is not None:  # lexical cell
        if meta.base is None:  # synthetic inline-terminal wrapper
            return LabeledTree(label=token, token=token)
        node = LabeledTree(label=meta.base.lhs, token=token)
        for rule in reversed(meta.chain):
            node = LabeledTree(label=rule.lhs, children=(node,))
        return node
    # collect the base rule's children across the synthetic spine
    children = []
    pos_i, pos_k, pos_label = i, k, label
    while True:
        entry = chart[pos_i][pos_k][pos_label]
        _, split, (left, right), entry_meta, _ = entry
        children.append(_debinarize(cnf, chart, pos_i, split, left))
        if right in cnf.synthetic and not right.startswith("~t~"):
            pos_i, pos_label = split, right
        else:
            children.append(_debinarize(cnf, chart, split, pos_k, right))
            break
    node = LabeledTree(label=meta.base.lhs, children=tuple(children))
    for rule in reversed(meta.chain):
        node = LabeledTree(label=rule.lhs, children=(node,))
    return node


# ---------------------------------------------------------------------------
# Data description lengths
# ---------------------------------------------------------------------------

@dataclass
class DescriptionLengths:
    """Grammar and data description lengths in bits, plus their ratios."""

    gdl_bits: float
    ddl_total_bits: float
    ddl_avg_bits: float
    eval_ddl_avg_bits: float | None
    ratio_ddl_gdl: float
    ratio_eval_ddl_gdl: float | None
    n_unparsed: int


def ddl(g: Pcfg, corpus: Corpus, weighted: bool = False):
    """(total bits, average bits per parseable unique message, n unparsed).

    The data description length of a message is the negative log2 inside
    probability.  Unparseable messages are excluded from the sum and counted
    separately; with ``weighted`` set, messages contribute once per
    occurrence instead of once per unique message.
    """
    total = 0.0
    n_parsed = 0
    n_unparsed = 0
    vocab = corpus.vocab
    for msg, count in corpus.items():
        w = count if weighted else 1
        lp = inside_logprob(g, [vocab.symbol(t) for t in msg])
        if lp is None:
            n_unparsed += w
            continue
        total += -lp * w
        n_parsed += w
    avg = total / n_parsed if n_parsed else 0.0
    return total, avg, n_unparsed


def describe(g: Pcfg, induction: Corpus, evaluation: Corpus | None = None,
             weighted: bool = False) -> DescriptionLengths:
    """Assemble the description-length report for a grammar and its corpora."""
    g_bits = gdl(g)
    total, avg, n_unparsed = ddl(g, induction, weighted=weighted)
    eval_avg = None
    eval_ratio = None
    if evaluation is not None:
        eval_total, eval_avg, _ = ddl(g, evaluation, weighted=weighted)
        eval_ratio = eval_total / g_bits if g_bits > 0 else math.inf
    return DescriptionLengths(
        gdl_bits=g_bits,
        ddl_total_bits=total,
        ddl_avg_bits=avg,
        eval_ddl_avg_bits=eval_avg,
        ratio_ddl_gdl=total / g_bits if g_bits > 0 else math.inf,
        ratio_eval_ddl_gdl=eval_ratio,
        n_unparsed=n_unparsed,
    )
