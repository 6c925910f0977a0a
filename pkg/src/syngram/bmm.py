"""Label induction over fixed bracketings by greedy label merging.

Starting from one label per distinct terminal (pre-terminals) and one label
per distinct ordered child-label signature (non-terminals, hash-consed bottom
up), labels of the same kind are merged greedily whenever doing so lowers the
joint description length of the grammar read off the treebank and the
treebank's derivations under that grammar:

  GDL = (total rule symbols) * log2(S) with S the full symbol alphabet size,
  DDL = sum over rule applications of -log2(rule probability),

with rule probabilities given by relative frequency.  Merge effects are
computed incrementally from rule-count sufficient statistics; the treebank is
never re-parsed.

The search keeps a lazy priority queue of candidate pairs.  Cached merge
deltas are invalidated exactly when a rule mentioning either label changes,
so every applied merge uses an exact, freshly validated delta and termination
is decided on exact values only.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .corpus import Vocabulary
from .errors import DataError, InvariantError
from .pcfg import LabeledTree, Pcfg, extract_grammar

TOP = 0
PRETERMINAL = "pre"
NONTERMINAL = "non"

_NEG_INF = float("-inf")


def _tcode(tid: int) -> int:
    """Terminals live in the negative id space so they never collide with labels."""
    return -(tid + 1)


def _xlgx(c) -> float:
    return c * math.log2(c) if c > 0 else 0.0


@dataclass
class BmmConfig:
    lookahead_depth: int = 1
    min_gain_bits: float = 0.0
    max_merges: int | None = None
    candidate_threshold: int = 512  # above this label count, prune candidates

    def __post_init__(self):
        if not 0 <= self.lookahead_depth <= 3:
            raise DataError("lookahead_depth must be between 0 and 3")
        if self.min_gain_bits < 0:
            raise DataError("min_gain_bits must be non-negative")


class MergeState:
    """Rule-count table plus cached description-length statistics.

    Rule keys are (lhs, rhs) over integer symbols: non-negative ids are
    labels, negative ids encode terminals.  The cached GDL/DDL values always
    match recomputation from the rule counts; ``audit`` checks this.
    """

    def __init__(self):
        self.rules: dict = {}         # (lhs, rhs) -> count
        self.label_rules: dict = {}   # label -> set of rule keys mentioning it
        self.lhs_rhs: dict = {}       # label -> set of its own rhs tuples
        self.parent_lhs: dict = {}    # label -> {lhs of rules whose rhs mentions it: refcount}
        self.group_total: dict = {}   # lhs -> total count
        self.group_elog: dict = {}    # lhs -> sum of c*log2(c)
        self.kind: dict = {}          # label -> PRETERMINAL | NONTERMINAL
        self.alive: set = set()       # mergeable labels (TOP excluded)
        self.n_terminals = 0
        self.total_symbols = 0
        self.ddl_bits = 0.0
        self.parent_of: dict = {}     # union-find over initial labels
        self.pre_map: dict = {}       # terminal id -> initial pre-terminal label
        self.sig_map: dict = {}       # child-label signature -> initial label
        self.n_merges = 0

    # -- construction -------------------------------------------------------

    @classmethod
    def from_treebank(cls, treebank: dict, vocab: Vocabulary) -> "MergeState":
        if not treebank:
            raise DataError("treebank is empty")
        state = cls()
        tids = sorted({t for msg in treebank for t in msg})
        next_label = 1
        for t in tids:
            state.pre_map[t] = next_label
            state.kind[next_label] = PRETERMINAL
            next_label += 1
        state.n_terminals = len(tids)

        counts = state.rules

        def walk(node, msg, is_root):
            if isinstance(node, int):
                lab = state.pre_map[msg[node]]
                key = (lab, (_tcode(msg[node]),))
                counts[key] = counts.get(key, 0) + 1
                return lab
            child_labels = tuple(walk(c, msg, False) for c in node)
            if is_root:
                key = (TOP, child_labels)
                counts[key] = counts.get(key, 0) + 1
                return TOP
            lab = state.sig_map.get(child_labels)
            if lab is None:
                nonlocal_next = len(state.pre_map) + len(state.sig_map) + 1
                lab = nonlocal_next
                state.sig_map[child_labels] = lab
                state.kind[lab] = NONTERMINAL
            key = (lab, child_labels)
            counts[key] = counts.get(key, 0) + 1
            return lab

        for msg in sorted(treebank):
            walk(treebank[msg], msg, True)

        state.alive = set(state.kind)
        for lab in list(state.kind) + [TOP]:
            state.parent_of[lab] = lab
        state._rebuild_indexes()
        return state

    def _rebuild_indexes(self):
        self.label_rules = {}
        self.lhs_rhs = {}
        self.parent_lhs = {}
        self.group_total = {}
        self.group_elog = {}
        self.total_symbols = 0
        for key, c in self.rules.items():
            self._index_rule(key, c)
        self.ddl_bits = self._ddl_from_groups()

    def _index_rule(self, key, c):
        lhs, rhs = key
        self.total_symbols += len(rhs) + 1
        self.group_total[lhs] = self.group_total.get(lhs, 0) + c
        self.group_elog[lhs] = self.group_elog.get(lhs, 0.0) + _xlgx(c)
        self.label_rules.setdefault(lhs, set()).add(key)
        self.lhs_rhs.setdefault(lhs, set()).add(rhs)
        for s in rhs:
            if s >= 0:
                self.label_rules.setdefault(s, set()).add(key)
                parents = self.parent_lhs.setdefault(s, {})
                parents[lhs] = parents.get(lhs, 0) + 1

    def _unindex_rule(self, key, c):
        lhs, rhs = key
        self.total_symbols -= len(rhs) + 1
        self.group_total[lhs] -= c
        self.group_elog[lhs] -= _xlgx(c)
        self.label_rules[lhs].discard(key)
        self.lhs_rhs[lhs].discard(rhs)
        for s in rhs:
            if s >= 0:
                self.label_rules[s].discard(key)
                parents = self.parent_lhs[s]
                parents[lhs] -= 1
                if parents[lhs] == 0:
                    del parents[lhs]

    def _ddl_from_groups(self) -> float:
        return sum(_xlgx(self.group_total[lhs]) - self.group_elog[lhs]
                   for lhs in self.group_total)

    # -- description lengths ------------------------------------------------

    @property
    def n_labels(self) -> int:
        """Labels including TOP."""
        return len(self.alive) + 1

    @property
    def symbol_count(self) -> int:
        return self.n_labels + self.n_terminals

    def gdl(self) -> float:
        return self.total_symbols * math.log2(self.symbol_count)

    def ddl(self) -> float:
        return self.ddl_bits

    def total_dl(self) -> float:
        return self.gdl() + self.ddl_bits

    def find(self, label: int) -> int:
        root = label
        while self.parent_of[root] != root:
            root = self.parent_of[root]
        while self.parent_of[label] != root:
            self.parent_of[label], label = root, self.parent_of[label]
        return root

    # -- merge deltas --------------------------------------------------------

    def _check_pair(self, a: int, b: int):
        if a == b:
            raise InvariantError("cannot merge a label with itself")
        if a == TOP or b == TOP:
            raise InvariantError("the start label cannot be merged")
        if a not in self.alive or b not in self.alive:
            raise InvariantError(f"labels {a}, {b} are not both alive")
        if self.kind[a] != self.kind[b]:
            raise InvariantError("can only merge labels of the same kind")

    def delta_parts(self, a: int, b: int):
        """(collapsed symbols, DDL change) for merging a and b; exact."""
        log2 = math.log2
        m = a if a < b else b
        ca, cb = self.group_total[a], self.group_total[b]
        if self._pooling_only(a, b):
            cm = ca + cb
            return 0, cm * log2(cm) - ca * log2(ca) - cb * log2(cb)
        rules = self.rules
        old_t = 0
        old_e: dict = {}
        new_counts: dict = {}
        old_e_get = old_e.get
        new_get = new_counts.get
        for key in self.label_rules[a] | self.label_rules[b]:
            lhs, rhs = key
            c = rules[key]
            old_t += len(rhs) + 1
            old_e[lhs] = old_e_get(lhs, 0.0) + c * log2(c)
            nl = m if (lhs == a or lhs == b) else lhs
            nr = tuple(m if (s == a or s == b) else s for s in rhs)
            nk = (nl, nr)
            new_counts[nk] = new_get(nk, 0) + c
        new_t = 0
        new_e: dict = {}
        new_e_get = new_e.get
        for (nl, nr), c in new_counts.items():
            new_t += len(nr) + 1
            new_e[nl] = new_e_get(nl, 0.0) + c * log2(c)
        kappa = old_t - new_t
        cm = ca + cb
        dddl = (cm * log2(cm) - new_e.get(m, 0.0)) \
            - (ca * log2(ca) - old_e.get(a, 0.0)) \
            - (cb * log2(cb) - old_e.get(b, 0.0))
        for lhs, e_old in old_e.items():
            if lhs == a or lhs == b:
                continue
            dddl -= new_e.get(lhs, 0.0) - e_old
        return kappa, dddl

    def _pooling_only(self, a: int, b: int) -> bool:
        """True when the merge can only pool the two groups: no rule collapse
        anywhere, so the delta has a closed form."""
        if not self.parent_lhs.get(a, {}).keys().isdisjoint(self.parent_lhs.get(b, {})):
            return False
        rhs_a = self.lhs_rhs[a]
        rhs_b = self.lhs_rhs[b]
        for rhs in rhs_a:
            if a in rhs or b in rhs:
                return False
        for rhs in rhs_b:
            if a in rhs or b in rhs:
                return False
        return rhs_a.isdisjoint(rhs_b)

    def merge_score(self, kappa: int, dddl: float) -> float:
        """Alphabet-size-independent part of the merge delta, used for ranking."""
        return dddl - kappa * math.log2(self.symbol_count - 1)

    def score_to_delta(self, score: float) -> float:
        s = self.symbol_count
        return score + self.total_symbols * (math.log2(s - 1) - math.log2(s))

    def merge_delta(self, a: int, b: int) -> float:
        """Exact change of GDL + DDL in bits if a and b were merged."""
        self._check_pair(a, b)
        kappa, dddl = self.delta_parts(a, b)
        return self.score_to_delta(self.merge_score(kappa, dddl))

    # -- applying merges ------------------------------------------------------

    def apply_merge(self, a: int, b: int):
        """Merge b into min(a, b); returns (removed keys, added keys, labels touched)."""
        self._check_pair(a, b)
        m, dead = (a, b) if a < b else (b, a)
        pair = (a, b)
        affected = list(self.label_rules[a] | self.label_rules[b])
        lhs_affected = {key[0] for key in affected}
        old_contrib = sum(_xlgx(self.group_total[g]) - self.group_elog[g]
                          for g in lhs_affected)
        touched: set = set()
        new_counts: dict = {}
        for key in affected:
            lhs, rhs = key
            touched.add(lhs)
            for s in rhs:
                if s >= 0:
                    touched.add(s)
            c = self.rules.pop(key)
            self._unindex_rule(key, c)
            nl = m if lhs in pair else lhs
            nr = tuple(m if s in pair else s for s in rhs)
            nk = (nl, nr)
            new_counts[nk] = new_counts.get(nk, 0) + c
        for nk, c in new_counts.items():
            self.rules[nk] = c
            self._index_rule(nk, c)
        new_lhs = {m if g in pair else g for g in lhs_affected}
        new_contrib = sum(_xlgx(self.group_total[g]) - self.group_elog[g]
                          for g in new_lhs if g in self.group_total)
        self.ddl_bits += new_contrib - old_contrib
        # drop empty bookkeeping for the dead label
        for table in (self.group_total, self.group_elog):
            if dead in table and not self.label_rules.get(dead):
                table.pop(dead, None)
        for table in (self.label_rules, self.lhs_rhs, self.parent_lhs):
            if dead in table and not table[dead]:
                table.pop(dead, None)
        self.alive.discard(dead)
        self.kind.pop(dead, None)
        self.parent_of[dead] = m
        self.n_merges += 1
        touched.add(m)
        return affected, list(new_counts), touched

    def clone(self) -> "MergeState":
        other = MergeState()
        other.rules = dict(self.rules)
        other.kind = dict(self.kind)
        other.alive = set(self.alive)
        other.n_terminals = self.n_terminals
        other.parent_of = dict(self.parent_of)
        other.pre_map = dict(self.pre_map)
        other.sig_map = dict(self.sig_map)
        other.n_merges = self.n_merges
        other._rebuild_indexes()
        return other

    def audit(self) -> float:
        """Recompute DDL from scratch; returns the absolute drift in bits."""
        fresh_total: dict = {}
        fresh_elog: dict = {}
        n_sym = 0
        for (lhs, rhs), c in self.rules.items():
            fresh_total[lhs] = fresh_total.get(lhs, 0) + c
            fresh_elog[lhs] = fresh_elog.get(lhs, 0.0) + _xlgx(c)
            n_sym += len(rhs) + 1
        if n_sym != self.total_symbols:
            raise InvariantError("cached total symbol count is stale")
        fresh_ddl = sum(_xlgx(fresh_total[l]) - fresh_elog[l] for l in fresh_total)
        drift = abs(fresh_ddl - self.ddl_bits)
        self.group_total = fresh_total
        self.group_elog = fresh_elog
        self.ddl_bits = fresh_ddl
        return drift


def merge_delta(state: MergeState, a: int, b: int) -> float:
    """Exact (GDL + DDL) change for merging labels a and b, in bits."""
    return state.merge_delta(a, b)


# ---------------------------------------------------------------------------
# Greedy search
# ---------------------------------------------------------------------------

_HOLE = None


class _Search:
    """Candidate bookkeeping and lazy best-merge selection for one state."""

    def __init__(self, state: MergeState, threshold: int):
        self.state = state
        self.threshold = threshold
        self.pruned = len(state.alive) > threshold
        self.candidates: set = set()
        self.by_label: dict = {}
        self.cache: dict = {}
        self.dirty: set = set()
        self.heap: list = []
        self.ctx_members: dict = {}  # context -> {label: refcount}
        if self.pruned:
            for key in state.rules:
                self._ctx_add(key)
        else:
            self._all_pairs()

    # -- candidate management ------------------------------------------------

    def _add_pair(self, x: int, y: int):
        if x == y:
            return
        pair = (x, y) if x < y else (y, x)
        if pair in self.candidates:
            return
        self.candidates.add(pair)
        self.by_label.setdefault(pair[0], set()).add(pair)
        self.by_label.setdefault(pair[1], set()).add(pair)
        self.dirty.add(pair)
        heapq.heappush(self.heap, (_NEG_INF, pair[0], pair[1]))

    def _current_score(self, pair) -> float:
        kappa, dddl = self.cache[pair]
        return dddl - kappa * math.log2(self.state.symbol_count - 1)

    def _all_pairs(self):
        state = self.state
        pres = sorted(l for l in state.alive if state.kind[l] == PRETERMINAL)
        nons = sorted(l for l in state.alive if state.kind[l] == NONTERMINAL)
        for group in (pres, nons):
            for i, x in enumerate(group):
                for y in group[i + 1:]:
                    self._add_pair(x, y)

    def _contexts(self, key):
        lhs, rhs = key
        for pos, s in enumerate(rhs):
            if s >= 0:
                yield (lhs, rhs[:pos] + (_HOLE,) + rhs[pos + 1:]), s

    def _ctx_add(self, key):
        state = self.state
        for ctx, label in self._contexts(key):
            members = self.ctx_members.setdefault(ctx, {})
            if label not in members:
                kind = state.kind.get(label)
                for other in members:
                    if state.kind.get(other) == kind:
                        self._add_pair(label, other)
            members[label] = members.get(label, 0) + 1

    def _ctx_remove(self, key):
        for ctx, label in self._contexts(key):
            members = self.ctx_members.get(ctx)
            if not members:
                continue
            n = members.get(label, 0) - 1
            if n <= 0:
                members.pop(label, None)
                if not members:
                    self.ctx_members.pop(ctx, None)
            else:
                members[label] = n

    def _drop_label(self, label: int):
        for pair in self.by_label.pop(label, set()):
            self.candidates.discard(pair)
            self.dirty.discard(pair)
            self.cache.pop(pair, None)
            other = pair[0] if pair[1] == label else pair[1]
            peers = self.by_label.get(other)
            if peers:
                peers.discard(pair)

    def _mark_dirty(self, labels):
        dirty = self.dirty
        by_label = self.by_label
        for lab in labels:
            pairs = by_label.get(lab)
            if pairs:
                dirty.update(pairs)

    # -- selection -------------------------------------------------------------

    def _drain(self):
        """Recompute every invalidated delta so all cached scores are exact."""
        state = self.state
        for pair in sorted(self.dirty):
            if pair not in self.candidates:
                continue
            self.cache[pair] = state.delta_parts(*pair)
            heapq.heappush(self.heap, (self._current_score(pair),) + pair)
        self.dirty.clear()

    def best(self, accept_score: float = _NEG_INF):
        """Candidate with an exact, freshly validated delta as (score, a, b).

        Returns an improving candidate (score <= accept_score) as soon as one
        surfaces; stale entries are refreshed lazily.  When no improving
        candidate surfaces, every pending invalidation is recomputed before
        the exact global minimum is returned, so termination decisions only
        ever see exact values.
        """
        state = self.state
        while True:
            if not self.heap:
                if self.dirty:
                    self._drain()
                    continue
                return None
            key, a, b = heapq.heappop(self.heap)
            pair = (a, b)
            if pair not in self.candidates:
                continue
            if pair in self.dirty:
                self.cache[pair] = state.delta_parts(a, b)
                self.dirty.discard(pair)
                heapq.heappush(self.heap, (self._current_score(pair), a, b))
                continue
            score = self._current_score(pair)
            if key < score - 1e-12:
                heapq.heappush(self.heap, (score, a, b))
                continue
            heapq.heappush(self.heap, (score, a, b))
            if score <= accept_score or not self.dirty:
                return score, a, b
            self._drain()  # stale entries may hide a better merge

    def apply(self, a: int, b: int):
        removed, added, touched = self.state.apply_merge(a, b)
        dead = max(a, b)
        self._drop_label(dead)
        if self.pruned:
            for key in removed:
                self._ctx_remove(key)
            for key in added:
                self._ctx_add(key)
            if len(self.state.alive) <= self.threshold:
                self.pruned = False
                self.ctx_members = {}
                self._all_pairs()
        self._mark_dirty(touched)
        if len(self.heap) > 4 * len(self.candidates) + 1024:
            self._compact()

    def _compact(self):
        entries = []
        for pair in self.candidates:
            if pair not in self.cache:
                entries.append((_NEG_INF, pair[0], pair[1]))
            else:
                # stale scores are fine as keys; pops refresh dirty pairs
                entries.append((self._current_score(pair), pair[0], pair[1]))
        heapq.heapify(entries)
        self.heap = entries


@dataclass
class BmmResult:
    treebank: dict        # message -> LabeledTree with final labels
    grammar: Pcfg
    merge_log: list       # one entry per accepted merge
    initial_dl_bits: float
    final_dl_bits: float
    state: MergeState = field(repr=False, default=None)


def init_labels(treebank: dict, vocab: Vocabulary) -> dict:
    """Labeled treebank with the initial (pre-merge) label assignment."""
    state = MergeState.from_treebank(treebank, vocab)
    return _materialize(state, treebank, vocab)


def _label_names(state: MergeState) -> dict:
    names = {TOP: "TOP"}
    pres = sorted(l for l in state.alive if state.kind[l] == PRETERMINAL)
    nons = sorted(l for l in state.alive if state.kind[l] == NONTERMINAL)
    for i, l in enumerate(pres):
        names[l] = f"P{i}"
    for i, l in enumerate(nons):
        names[l] = f"N{i}"
    return names


def _materialize(state: MergeState, treebank: dict, vocab: Vocabulary) -> dict:
    names = _label_names(state)

    def initial_label(node, msg):
        if isinstance(node, int):
            return state.pre_map[msg[node]]
        return state.sig_map[tuple(initial_label(c, msg) for c in node)]

    def build(node, msg, is_root):
        if isinstance(node, int):
            lab = names[state.find(state.pre_map[msg[node]])]
            return LabeledTree(label=lab, token=vocab.symbol(msg[node]))
        children = tuple(build(c, msg, False) for c in node)
        if is_root:
            return LabeledTree(label="TOP", children=children)
        lab = names[state.find(initial_label(node, msg))]
        return LabeledTree(label=lab, children=children)

    return {msg: build(treebank[msg], msg, True) for msg in sorted(treebank)}


def bmm_label(treebank: dict, vocab: Vocabulary,
              config: BmmConfig | None = None) -> BmmResult:
    """Merge labels greedily until no merge lowers the joint description
    length by more than ``min_gain_bits``; returns the relabeled treebank and
    the grammar read off it.

    With lookahead depth d, a non-improving best merge is still accepted when
    a greedy chain of up to d further merges achieves a net improvement.
    """
    config = config or BmmConfig()
    state = MergeState.from_treebank(treebank, vocab)
    search = _Search(state, config.candidate_threshold)
    initial_dl = state.total_dl()
    log: list = []
    max_merges = len(state.alive) - 1  # keeps at least one label per kind in use
    if config.max_merges is not None:
        max_merges = min(max_merges, config.max_merges)

    def accept_and_log(a, b, delta):
        search.apply(a, b)
        log.append({
            "merged": (a, b),
            "survivor": min(a, b),
            "delta_bits": delta,
            "gdl_bits": state.gdl(),
            "ddl_bits": state.ddl(),
        })
        if state.n_merges % 512 == 0:
            state.audit()  # kills float drift on long runs

    while state.n_merges < max_merges:
        s = state.symbol_count
        accept = (-config.min_gain_bits
                  - state.total_symbols * (math.log2(s - 1) - math.log2(s)))
        found = search.best(accept_score=accept)
        if found is None:
            break
        score, a, b = found
        delta = state.score_to_delta(score)
        if delta >= -config.min_gain_bits:
            chain = (None if config.lookahead_depth == 0 else
                     _lookahead_chain(state, (a, b), delta, config))
            if chain is None:
                break
            # commit the valley merge together with the continuation that
            # justified it, so the dip always recovers within the chain
            accept_and_log(a, b, delta)
            for x, y in chain:
                if state.n_merges >= max_merges:
                    break
                step = state.merge_delta(x, y)
                accept_and_log(x, y, step)
            continue
        accept_and_log(a, b, delta)

    labeled = _materialize(state, treebank, vocab)
    grammar = extract_grammar(labeled)
    return BmmResult(treebank=labeled, grammar=grammar, merge_log=log,
                     initial_dl_bits=initial_dl, final_dl_bits=state.total_dl(),
                     state=state)


def _lookahead_chain(state: MergeState, pair, delta: float,
                     config: BmmConfig):
    """Greedy continuation search: the chain of up to lookahead_depth best
    merges after `pair` that achieves a net improvement, or None."""
    net = delta
    trial = state.clone()
    a, b = pair
    trial.apply_merge(a, b)
    chain: list = []
    for _ in range(config.lookahead_depth):
        sub = _Search(trial, config.candidate_threshold)
        found = sub.best()
        if found is None:
            return None
        score, x, y = found
        net += trial.score_to_delta(score)
        chain.append((x, y))
        if net < -config.min_gain_bits:
            return chain
        trial.apply_merge(x, y)
    return None
