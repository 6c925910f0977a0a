"""Grammar evaluation: coverage, bracketing consistency, nature statistics,
depth distributions and significance tests."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from . import inducer as inducer_mod
from .baselines import LengthDistribution
from .bmm import BmmConfig, bmm_label
from .corpus import Corpus, Vocabulary, sample_pool
from .errors import DataError
from .pcfg import LabeledTree, Pcfg, enumeration_baseline_gdl, gdl, recognize, viterbi_parse
from .stats import student_t_two_sided_p


@dataclass
class CoverageReport:
    eval_coverage: float | None  # None when a language has no evaluation split
    overgen_coverage: float
    overgen_sample_size: int = 500


@dataclass
class GrammarNatureStats:
    n_preterminals: int
    n_terminals: int
    n_nonterminals: int
    avg_terminals_per_preterminal: float
    avg_preterminals_per_terminal: float
    n_preterminal_groups: int
    n_group_generating_nonterminals: int
    avg_groups_per_generating_nt: float
    n_recursive_rules: int
    depth_histogram: dict = field(default_factory=dict)


@dataclass
class TTestResult:
    t_statistic: float
    p_value: float
    df: int
    mean: float
    sd: float


def evaluation_coverage(g: Pcfg, evaluation: Corpus) -> float:
    """Fraction of unique evaluation messages the grammar can parse."""
    if len(evaluation) == 0:
        raise DataError("evaluation corpus is empty")
    vocab = evaluation.vocab
    n_ok = sum(1 for m in evaluation.messages()
               if recognize(g, [vocab.symbol(t) for t in m]))
    return n_ok / len(evaluation)


def overgeneration_coverage(g: Pcfg, vocab: Vocabulary, lengths: LengthDistribution,
                            language: set, n: int = 500, seed: int = 0) -> float:
    """Coverage on random messages outside the language.

    Samples up to n distinct messages (lengths drawn from the given
    distribution, symbols uniform) that are not in ``language``; when fewer
    than n such messages exist, all of them are used.  ``language`` holds
    messages as token-id tuples over ``vocab``.
    """
    v = len(vocab)
    support = lengths.support()
    n_space = sum(v ** l for l in support)
    in_language = sum(1 for m in language if len(m) in set(support))
    n_outside = n_space - in_language
    if n_outside <= 0:
        return 0.0
    samples: list = []
    if n_outside <= n or n_space <= 4 * n:
        # small space: enumerate exhaustively instead of rejection sampling
        for length in support:
            stack = [()]
            for _ in range(length):
                stack = [m + (s,) for m in stack for s in range(v)]
            samples.extend(m for m in stack if m not in language)
        samples.sort()
        if len(samples) > n:
            rng = random.Random(seed)
            samples = rng.sample(samples, n)
    else:
        rng = random.Random(seed)
        seen: set = set()
        while len(seen) < n:
            length = lengths.sample(rng)
            msg = tuple(rng.randrange(v) for _ in range(length))
            if msg in language or msg in seen:
                continue
            seen.add(msg)
        samples = sorted(seen)
    n_ok = sum(1 for m in samples
               if recognize(g, [vocab.symbol(t) for t in m]))
    return n_ok / len(samples)


def _nontrivial_spans(tree, n_tokens: int) -> set:
    """Constituent spans minus the whole-sentence span and width-1 spans."""
    spans = inducer_mod.tree_spans(tree)
    return {(s, e) for (s, e) in spans if e - s > 1 and not (s == 0 and e == n_tokens)}


def bracket_f1(a: dict, b: dict) -> float:
    """Micro-averaged F1 over constituent spans of two treebanks on the same
    messages, excluding whole-sentence and single-token spans."""
    if set(a) != set(b):
        raise DataError("treebanks cover different message sets")
    n_a = n_b = n_match = 0
    for msg in a:
        sa = _nontrivial_spans(a[msg], len(msg))
        sb = _nontrivial_spans(b[msg], len(msg))
        n_a += len(sa)
        n_b += len(sb)
        n_match += len(sa & sb)
    if n_a == 0 and n_b == 0:
        return 1.0
    if n_match == 0:
        return 0.0
    return 2.0 * n_match / (n_a + n_b)


def labeled_tree_to_bracket(tree: LabeledTree):
    """Strip labels, returning the bracket-tree structure with leaf positions."""
    counter = [0]

    def walk(node):
        if node.is_leaf():
            pos = counter[0]
            counter[0] += 1
            return pos
        return tuple(walk(c) for c in node.children)

    out = walk(tree)
    if isinstance(out, int):
        out = (out,)
    return out


def nature_stats(g: Pcfg, viterbi_parses=()) -> GrammarNatureStats:
    """Structural statistics of a grammar plus a depth histogram of parses.

    A pre-terminal group is a distinct right-hand side consisting solely of
    pre-terminals and terminals, under a lhs that is not itself a
    pre-terminal; that lhs is a group-generating non-terminal.  A rule is
    recursive when its lhs also appears in its rhs.
    """
    pre_set = set(g.preterminals)
    term_set = set(g.terminals)
    terms_per_pre: dict = {p: set() for p in g.preterminals}
    pres_per_term: dict = {}
    groups: set = set()
    generators: dict = {}
    n_recursive = 0
    for r in g.rules:
        if r.lhs in pre_set:
            terms_per_pre[r.lhs].add(r.rhs[0])
            pres_per_term.setdefault(r.rhs[0], set()).add(r.lhs)
        elif all(s in pre_set or s in term_set for s in r.rhs):
            groups.add(r.rhs)
            generators.setdefault(r.lhs, set()).add(r.rhs)
        if r.lhs in r.rhs:
            n_recursive += 1
    n_pre = len(g.preterminals)
    n_term = len(g.terminals)
    avg_tpp = (sum(len(s) for s in terms_per_pre.values()) / n_pre) if n_pre else 0.0
    avg_ppt = (sum(len(s) for s in pres_per_term.values()) / len(pres_per_term)
               if pres_per_term else 0.0)
    depth_hist: dict = {}
    for tree in viterbi_parses:
        d = tree.depth() if isinstance(tree, LabeledTree) else inducer_mod.tree_depth(tree)
        depth_hist[d] = depth_hist.get(d, 0) + 1
    return GrammarNatureStats(
        n_preterminals=n_pre,
        n_terminals=n_term,
        n_nonterminals=len(g.nonterminals),
        avg_terminals_per_preterminal=avg_tpp,
        avg_preterminals_per_terminal=avg_ppt,
        n_preterminal_groups=len(groups),
        n_group_generating_nonterminals=len(generators),
        avg_groups_per_generating_nt=(sum(len(v) for v in generators.values())
                                      / len(generators) if generators else 0.0),
        n_recursive_rules=n_recursive,
        depth_histogram=depth_hist,
    )


def is_trivial_flat(g: Pcfg) -> bool:
    """True for the degenerate grammar with a single pre-terminal covering the
    whole vocabulary and only flat all-pre-terminal start rules."""
    if len(g.preterminals) != 1:
        return False
    pre = g.preterminals[0]
    covered = {r.rhs[0] for r in g.rules_for(pre)}
    if covered != set(g.terminals):
        return False
    start_rules = g.rules_for(g.start)
    if len(g.nonterminals) != 1:  # only the start label may remain
        return False
    return all(all(s == pre for s in r.rhs) for r in start_rules)


def one_sample_ttest(samples, mu0: float) -> TTestResult:
    """Two-sided one-sample t-test of the samples against mean mu0.

    A zero sample standard deviation is degenerate: p is 1 when the sample
    mean equals mu0 exactly and 0 otherwise.
    """
    xs = [float(x) for x in samples]
    n = len(xs)
    if n < 2:
        raise DataError("t-test needs at least 2 samples")
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    sd = math.sqrt(var)
    df = n - 1
    if sd == 0.0:
        if mean == mu0:
            return TTestResult(t_statistic=0.0, p_value=1.0, df=df, mean=mean, sd=sd)
        t = math.inf if mean > mu0 else -math.inf
        return TTestResult(t_statistic=t, p_value=0.0, df=df, mean=mean, sd=sd)
    t = (mean - mu0) / (sd / math.sqrt(n))
    p = student_t_two_sided_p(t, df)
    return TTestResult(t_statistic=t, p_value=p, df=df, mean=mean, sd=sd)


@dataclass
class ConsistencyCell:
    size: int
    repeat: int
    seed: int
    n_unique: int
    gdl_bits: float
    baseline_gdl_bits: float
    eval_coverage: float


@dataclass
class ConsistencyResult:
    cells: list
    f1: dict  # ((size_i, rep_i), (size_j, rep_j)) -> pairwise bracket F1
    pool_sizes: list
    repeats: int

    def mean_f1(self, size_a: int, size_b: int) -> float:
        vals = [v for (ka, kb), v in self.f1.items()
                if {ka[0], kb[0]} == {size_a, size_b} or
                (size_a == size_b and ka[0] == kb[0] == size_a)]
        return sum(vals) / len(vals) if vals else float("nan")


def _cell_seed(seed: int, size: int, repeat: int) -> int:
    return seed ^ (size * 1000003 + repeat * 7919)


def consistency_experiment(source: Corpus, pool_sizes, repeats: int = 3,
                           inducer_method: str = "pmi_greedy",
                           test: Corpus | None = None, seed: int = 0,
                           bmm_config: BmmConfig | None = None) -> ConsistencyResult:
    """Induce one grammar per (pool size, repeat) cell and compare them.

    Each cell samples a pool with replacement by frequency, runs the full
    induction pipeline on its unique messages, and Viterbi-parses the test
    corpus.  Pairwise bracket F1 between cells is computed on the messages
    both grammars can parse.  Per-cell grammar description lengths (with the
    enumeration baseline) and evaluation coverage on the test set are
    reported alongside.
    """
    if test is None:
        raise DataError("consistency experiment requires a test corpus")
    cells = []
    parses = {}
    vocab = source.vocab
    for size in pool_sizes:
        for rep in range(repeats):
            cell_seed = _cell_seed(seed, size, rep)
            pool = sample_pool(source, size, cell_seed)
            tb = inducer_mod.induce_brackets(pool, method=inducer_method, seed=cell_seed)
            result = bmm_label(tb, vocab, bmm_config)
            grammar = result.grammar
            cell_parses = {}
            for msg in test.messages():
                parsed = viterbi_parse(grammar, [vocab.symbol(t) for t in msg])
                if parsed is not None:
                    cell_parses[msg] = labeled_tree_to_bracket(parsed[0])
            parses[(size, rep)] = cell_parses
            cells.append(ConsistencyCell(
                size=size, repeat=rep, seed=cell_seed, n_unique=len(pool),
                gdl_bits=gdl(grammar),
                baseline_gdl_bits=enumeration_baseline_gdl(pool),
                eval_coverage=len(cell_parses) / len(test)))
    keys = sorted(parses)
    f1: dict = {}
    for i, ka in enumerate(keys):
        for kb in keys[i:]:
            common = set(parses[ka]) & set(parses[kb])
            if not common:
                f1[(ka, kb)] = 0.0
                continue
            f1[(ka, kb)] = bracket_f1({m: parses[ka][m] for m in common},
                                      {m: parses[kb][m] for m in common})
    return ConsistencyResult(cells=cells, f1=f1,
                             pool_sizes=list(pool_sizes), repeats=repeats)
