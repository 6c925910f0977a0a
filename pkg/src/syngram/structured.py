"""Structured baseline grammars and their languages.

A structured language is generated by a small context-free grammar built from
a spec with three parts: word classes (disjoint symbol sets, one pre-terminal
each), optional named groups (short class sequences such as a two-class
"noun phrase" that may sit at either end of a message), and templates (one
start rule each).  Nine fixture specs are shipped, one per (message length,
vocabulary size) configuration; each is checked against its expected language
size at load time.
"""

from __future__ import annotations

import configparser
import math
import random
from dataclasses import dataclass, field

from .corpus import Corpus, SplitCorpus, Vocabulary
from .errors import DataError

INDUCTION_CAP = 2000
EVALUATION_CAP = 500


@dataclass(frozen=True)
class Cfg:
    """Plain context-free grammar: start label, rules, terminal inventory."""

    start: str
    rules: tuple  # of (lhs, rhs tuple); rhs entries are labels or terminals
    terminals: tuple

    def __post_init__(self):
        lhs_set = {lhs for lhs, _ in self.rules}
        if self.start not in lhs_set:
            raise DataError(f"start symbol {self.start!r} has no rule")
        term_set = set(self.terminals)
        for lhs, rhs in self.rules:
            if not rhs:
                raise DataError(f"rule {lhs} has an empty right-hand side")
            for sym in rhs:
                if sym not in term_set and sym not in lhs_set:
                    raise DataError(f"rule {lhs} -> {' '.join(rhs)}: {sym!r} is "
                                    "neither a terminal nor expandable")

    def rules_for(self, label: str) -> list:
        return [(lhs, rhs) for lhs, rhs in self.rules if lhs == label]

    def to_pcfg(self):
        """Probabilistic view with uniform weights within each left-hand side."""
        from .pcfg import Pcfg, Rule
        n_per_lhs: dict = {}
        for lhs, _ in self.rules:
            n_per_lhs[lhs] = n_per_lhs.get(lhs, 0) + 1
        return Pcfg([Rule(lhs, rhs, 1, 1.0 / n_per_lhs[lhs])
                     for lhs, rhs in self.rules], start=self.start)

    def is_recursive(self) -> bool:
        """True if some label can derive a string containing itself."""
        children: dict = {}
        term_set = set(self.terminals)
        for lhs, rhs in self.rules:
            children.setdefault(lhs, set()).update(s for s in rhs if s not in term_set)
        # iterative DFS with colouring
        WHITE, GREY, BLACK = 0, 1, 2
        colour = {l: WHITE for l in children}
        for root in children:
            if colour[root] != WHITE:
                continue
            stack = [(root, iter(children.get(root, ())))]
            colour[root] = GREY
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if colour.get(nxt, BLACK) == GREY:
                        return True
                    if colour.get(nxt, BLACK) == WHITE:
                        colour[nxt] = GREY
                        stack.append((nxt, iter(children.get(nxt, ()))))
                        advanced = True
                        break
                if not advanced:
                    colour[node] = BLACK
                    stack.pop()
        return False

    def serialize(self) -> str:
        """One rule per line, alternatives joined with '|' per left-hand side."""
        by_lhs: dict = {}
        order: list = []
        for lhs, rhs in self.rules:
            if lhs not in by_lhs:
                by_lhs[lhs] = []
                order.append(lhs)
            by_lhs[lhs].append(" ".join(rhs))
        lines = [f"{lhs} -> {' | '.join(by_lhs[lhs])}" for lhs in order]
        return "\n".join(lines) + "\n"


@dataclass
class StructuredSpec:
    """Word classes, groups and templates for one structured language."""

    l: int
    v: int
    classes: dict  # class name -> tuple of symbol strings
    templates: list  # each a tuple of class/group names
    groups: dict = field(default_factory=dict)  # group name -> tuple of class names
    expected_total: int | None = None

    def __post_init__(self):
        all_syms: list = []
        for name, syms in self.classes.items():
            if not syms:
                raise DataError(f"class {name} is empty")
            all_syms.extend(syms)
        if len(set(all_syms)) != len(all_syms):
            raise DataError("word classes are not disjoint")
        if len(all_syms) != self.v:
            raise DataError(f"classes cover {len(all_syms)} symbols, expected {self.v}")
        for gname, members in self.groups.items():
            if gname in self.classes:
                raise DataError(f"group {gname} clashes with a class name")
            for c in members:
                if c not in self.classes:
                    raise DataError(f"group {gname} references unknown class {c}")
        for tpl in self.templates:
            length = 0
            for element in tpl:
                if element in self.groups:
                    length += len(self.groups[element])
                elif element in self.classes:
                    length += 1
                else:
                    raise DataError(f"template references unknown element {element}")
            if length != self.l:
                raise DataError(f"template {' '.join(tpl)} has total length {length}, "
                                f"expected {self.l}")
        if not self.templates:
            raise DataError("spec has no templates")

    def serialize(self) -> str:
        lines = ["[spec]", f"l = {self.l}", f"v = {self.v}"]
        if self.expected_total is not None:
            lines.append(f"total = {self.expected_total}")
        lines.append("")
        lines.append("[classes]")
        for name, syms in self.classes.items():
            lines.append(f"{name} = {' '.join(syms)}")
        if self.groups:
            lines.append("")
            lines.append("[groups]")
            for name, members in self.groups.items():
                lines.append(f"{name} = {' '.join(members)}")
        lines.append("")
        lines.append("[templates]")
        for i, tpl in enumerate(self.templates, start=1):
            lines.append(f"t{i} = {' '.join(tpl)}")
        return "\n".join(lines) + "\n"


def parse_spec(text: str) -> StructuredSpec:
    """Parse the plain-text spec format (sections: spec, classes, groups, templates)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep case of class/group names
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise DataError(f"bad structured spec: {exc}") from exc
    for section in ("spec", "classes", "templates"):
        if section not in parser:
            raise DataError(f"structured spec is missing the [{section}] section")
    spec_sec = parser["spec"]
    try:
        l = int(spec_sec["l"])
        v = int(spec_sec["v"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"bad [spec] section: {exc}") from exc
    total = int(spec_sec["total"]) if "total" in spec_sec else None
    classes = {name: tuple(val.split()) for name, val in parser["classes"].items()}
    groups = {}
    if "groups" in parser:
        groups = {name: tuple(val.split()) for name, val in parser["groups"].items()}
    templates = [tuple(val.split()) for _, val in parser["templates"].items()]
    return StructuredSpec(l=l, v=v, classes=classes, templates=templates,
                          groups=groups, expected_total=total)


def build_structured_grammar(spec: StructuredSpec, check_total: bool = True) -> Cfg:
    """Emit the grammar: one start rule per template, one rule per group, one
    pre-terminal rule per class symbol.

    When the spec declares an expected language size, the enumerated size is
    verified and a mismatching spec is rejected.
    """
    rules: list = []
    for tpl in spec.templates:
        rules.append(("TOP", tuple(tpl)))
    for gname, members in spec.groups.items():
        rules.append((gname, tuple(members)))
    terminals: list = []
    for cname, syms in spec.classes.items():
        for s in syms:
            rules.append((cname, (s,)))
            terminals.append(s)
    cfg = Cfg(start="TOP", rules=tuple(rules), terminals=tuple(terminals))
    if check_total and spec.expected_total is not None:
        n = len(enumerate_language(cfg))
        if n != spec.expected_total:
            raise DataError(f"structured spec generates {n} messages, "
                            f"expected {spec.expected_total}")
    return cfg


def enumerate_language(g: Cfg, cap: int | None = None) -> list:
    """All distinct yields of the grammar, in depth-first derivation order.

    Rules are expanded in listed order and class symbols in listed order, so
    the output order is reproducible.  A recursive grammar requires a cap
    (enumeration would not terminate otherwise) and is explored by iterative
    deepening on derivation height so that left recursion cannot diverge.
    """
    recursive = g.is_recursive()
    if recursive and cap is None:
        raise DataError("grammar is recursive; enumeration is unbounded without a cap")
    term_set = set(g.terminals)
    by_lhs: dict = {}
    for lhs, rhs in g.rules:
        by_lhs.setdefault(lhs, []).append(rhs)

    if not recursive:
        def expand(symbol):
            if symbol in term_set:
                yield (symbol,)
                return
            for rhs in by_lhs[symbol]:
                yield from expand_seq(rhs, 0)

        def expand_seq(rhs, i):
            if i == len(rhs) - 1:
                yield from expand(rhs[i])
                return
            for head in expand(rhs[i]):
                for tail in expand_seq(rhs, i + 1):
                    yield head + tail

        out: list = []
        seen: set = set()
        for msg in expand(g.start):
            if msg in seen:
                continue
            seen.add(msg)
            out.append(msg)
            if cap is not None and len(out) >= cap:
                break
        return out

    # recursive grammar: yields of derivations with height <= d, deepening d
    out = []
    seen = set()
    prev_count = -1
    depth = 1
    while len(out) < cap and len(seen) != prev_count:
        prev_count = len(seen)
        memo: dict = {}

        def bounded(symbol, budget):
            if symbol in term_set:
                return [(symbol,)]
            if budget == 0:
                return []
            key = (symbol, budget)
            if key in memo:
                return memo[key]
            results: list = []
            local_seen: set = set()
            for rhs in by_lhs[symbol]:
                partial = [()]
                for s in rhs:
                    partial = [p + tail for p in partial for tail in bounded(s, budget - 1)]
                    if not partial:
                        break
                for msg in partial:
                    if msg not in local_seen:
                        local_seen.add(msg)
                        results.append(msg)
            memo[key] = results
            return results

        for msg in bounded(g.start, depth):
            if msg not in seen:
                seen.add(msg)
                out.append(msg)
                if len(out) >= cap:
                    break
        depth += 1
    return out


def structured_split(messages: list, seed: int, vocab: Vocabulary | None = None,
                     induction_cap: int = INDUCTION_CAP,
                     evaluation_cap: int = EVALUATION_CAP) -> SplitCorpus:
    """80/20 split of an enumerated language with hard caps on both sets.

    The induction set keeps at most ``induction_cap`` messages and the
    evaluation set at most ``evaluation_cap``; the applied caps are recorded
    in the split metadata.  Messages are token-string tuples.
    """
    if len(messages) < 2:
        raise DataError("need at least 2 messages to split")
    if vocab is None:
        order: list = []
        seen: set = set()
        for m in messages:
            for t in m:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
        vocab = Vocabulary(order)
    id_msgs = [tuple(vocab.id_of(t) for t in m) for m in messages]
    rng = random.Random(seed)
    rng.shuffle(id_msgs)
    n_induct = int(math.floor(0.8 * len(id_msgs)))
    n_induct = max(1, min(n_induct, len(id_msgs) - 1))
    induct = id_msgs[:n_induct][:induction_cap]
    evaluation = id_msgs[n_induct:][:evaluation_cap]
    meta = {
        "seed": seed,
        "total": len(messages),
        "induction_cap": induction_cap,
        "evaluation_cap": evaluation_cap,
        "induction_truncated": n_induct > induction_cap,
        "evaluation_truncated": len(id_msgs) - n_induct > evaluation_cap,
    }
    return SplitCorpus(Corpus(vocab, {m: 1 for m in induct}),
                       Corpus(vocab, {m: 1 for m in evaluation}),
                       metadata=meta)


def _symbols(*ranges) -> tuple:
    out = []
    for lo, hi in ranges:
        out.extend(str(i) for i in range(lo, hi))
    return tuple(out)


def _fixture_specs() -> dict:
    specs = {}
    # L=3: three classes, a two-class group placed at either end.
    specs[(3, 6)] = StructuredSpec(
        l=3, v=6, expected_total=16,
        classes={"A": _symbols((0, 2)), "B": _symbols((2, 4)), "C": _symbols((4, 6))},
        groups={"NP": ("A", "B")},
        templates=[("NP", "C"), ("C", "NP")])
    specs[(3, 13)] = StructuredSpec(
        l=3, v=13, expected_total=160,
        classes={"A": _symbols((0, 5)), "B": _symbols((5, 9)), "C": _symbols((9, 13))},
        groups={"NP": ("A", "B")},
        templates=[("NP", "C"), ("C", "NP")])
    specs[(3, 27)] = StructuredSpec(
        l=3, v=27, expected_total=1458,
        classes={"A": _symbols((0, 9)), "B": _symbols((9, 18)), "C": _symbols((18, 27))},
        groups={"NP": ("A", "B")},
        templates=[("NP", "C"), ("C", "NP")])
    # L=5, V=6: small classes with repetition to keep the language non-trivial.
    specs[(5, 6)] = StructuredSpec(
        l=5, v=6, expected_total=24,
        classes={"A": _symbols((0, 3)), "B": _symbols((3, 5)), "C": _symbols((5, 6))},
        groups={"NP": ("A", "B"), "VP": ("B", "C", "C")},
        templates=[("NP", "VP"), ("VP", "NP")])
    # L=5, V=13: the canonical example grammar.
    specs[(5, 13)] = StructuredSpec(
        l=5, v=13, expected_total=378,
        classes={"A": _symbols((0, 3)), "B": _symbols((3, 6)), "C": _symbols((6, 9)),
                 "D": _symbols((9, 11)), "E": _symbols((11, 13))},
        groups={"NP": ("A", "B"), "AP": ("E", "C", "D"), "VP": ("E",)},
        templates=[("NP", "AP"), ("AP", "NP"), ("NP", "VP", "NP")])
    # L=5, V=27: two large templates plus one rare pattern.
    specs[(5, 27)] = StructuredSpec(
        l=5, v=27, expected_total=15480,
        classes={"O": _symbols((0, 8)), "B": _symbols((8, 14)), "A": _symbols((14, 19)),
                 "C": _symbols((19, 23)), "D": _symbols((23, 26)), "E": _symbols((26, 27))},
        templates=[("O", "O", "B", "A", "C"), ("C", "A", "B", "O", "O"),
                   ("O", "A", "D", "E", "E")])
    # L=10, V=6 and V=13: single templates; small vocabularies force class reuse.
    specs[(10, 6)] = StructuredSpec(
        l=10, v=6, expected_total=24,
        classes={"A": _symbols((0, 3)), "B": _symbols((3, 5)), "C": _symbols((5, 6))},
        templates=[("A", "B", "B", "B", "C", "C", "C", "C", "C", "C")])
    specs[(10, 13)] = StructuredSpec(
        l=10, v=13, expected_total=32,
        classes={"A": _symbols((0, 2)), "B": _symbols((2, 4)), "C": _symbols((4, 6)),
                 "D": _symbols((6, 8)), "E": _symbols((8, 10)),
                 "F": _symbols((10, 11)), "G": _symbols((11, 12)), "H": _symbols((12, 13))},
        templates=[("A", "B", "C", "D", "E", "F", "G", "H", "F", "G")])
    # L=10, V=27: three two-symbol classes moving around seven three-symbol ones.
    b_classes = {f"B{i + 1}": _symbols((6 + 3 * i, 9 + 3 * i)) for i in range(7)}
    specs[(10, 27)] = StructuredSpec(
        l=10, v=27, expected_total=52488,
        classes={"A1": _symbols((0, 2)), "A2": _symbols((2, 4)), "A3": _symbols((4, 6)),
                 **b_classes},
        templates=[("A1", "A2", "A3", "B1", "B2", "B3", "B4", "B5", "B6", "B7"),
                   ("B1", "B2", "B3", "B4", "B5", "B6", "B7", "A1", "A2", "A3"),
                   ("A1", "A2", "B1", "B2", "B3", "B4", "B5", "B6", "B7", "A3")])
    return specs


_FIXTURES = _fixture_specs()

FIXTURE_KEYS = sorted(_FIXTURES)


def fixture(l: int, v: int) -> StructuredSpec:
    """The shipped spec for one (message length, vocabulary size) setting."""
    try:
        return _FIXTURES[(l, v)]
    except KeyError:
        raise DataError(f"no structured fixture for L={l}, V={v}; "
                        f"available: {FIXTURE_KEYS}") from None
