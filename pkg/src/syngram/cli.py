"""Command-line pipeline: corpus -> brackets -> labels -> grammar -> report.

Subcommands: analyze, induce, label, grammar-stats, baseline, structured,
consistency.  All randomness is controlled by explicit seeds, and a fixed
configuration produces byte-identical artifacts (the report timestamp is the
only exception, and it lives in a single JSON field).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
invariant violation.  Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .baselines import LengthDistribution, gen_random_language, gen_shuffled_language
from .bmm import BmmConfig, bmm_label
from .corpus import Corpus, Vocabulary, load_corpus, split
from .errors import ConfigError, DataError, InvariantError, SyngramError
from .inducer import METHODS, induce_brackets, serialize_treebank, parse_treebank
from .metrics import (CoverageReport, consistency_experiment, evaluation_coverage,
                      is_trivial_flat, nature_stats, one_sample_ttest,
                      overgeneration_coverage)
from .pcfg import Pcfg, describe, enumeration_baseline_gdl, viterbi_parse
from .structured import (build_structured_grammar, enumerate_language, fixture,
                         parse_spec, structured_split)

BASELINE_KINDS = ("random", "shuffled", "structured")

TTEST_METRICS = (
    "gdl_bits", "ddl_avg_bits", "eval_ddl_avg_bits", "eval_coverage",
    "overgen_coverage", "n_preterminals", "n_terminals",
    "n_preterminal_groups", "n_group_generating_nonterminals",
    "avg_terminals_per_preterminal",
)


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)  # corpus paths
    structured: str | None = None               # spec path or "fixture:L,V"
    inducer: str = "pmi_greedy"
    seed: int = 0
    eval_fraction: float = 0.1
    lookahead: int = 1
    min_gain_bits: float = 0.0
    overgen_n: int = 500
    baselines: list = field(default_factory=list)
    stop_token: str | None = None
    threads: int = 1
    out: str = "syngram-out"

    def validate(self):
        if bool(self.inputs) == bool(self.structured):
            raise ConfigError("exactly one input source required: "
                              "--input corpus file(s) or --structured spec")
        if self.structured and self.baselines:
            raise ConfigError("baseline languages are generated from corpus "
                              "inputs; drop --baselines for structured specs")
        if self.inducer not in METHODS:
            raise ConfigError(f"unknown inducer {self.inducer!r}; choose from {METHODS}")
        if not 0.0 < self.eval_fraction < 1.0:
            raise ConfigError("eval-fraction must be in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.overgen_n < 1:
            raise ConfigError("overgen-n must be >= 1")
        for b in self.baselines:
            if b not in BASELINE_KINDS:
                raise ConfigError(f"unknown baseline {b!r}; choose from {BASELINE_KINDS}")

    def bmm_config(self) -> BmmConfig:
        return BmmConfig(lookahead_depth=self.lookahead,
                         min_gain_bits=self.min_gain_bits)

    def as_dict(self) -> dict:
        return {
            "inputs": list(self.inputs), "structured": self.structured,
            "inducer": self.inducer, "seed": self.seed,
            "eval_fraction": self.eval_fraction, "lookahead": self.lookahead,
            "min_gain_bits": self.min_gain_bits, "overgen_n": self.overgen_n,
            "baselines": list(self.baselines), "stop_token": self.stop_token,
            "threads": self.threads, "out": self.out,
        }


def load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "run" not in parser:
        raise ConfigError("config file needs a [run] section")
    sec = parser["run"]
    out: dict = {}
    if "input" in sec:
        out["inputs"] = sec["input"].split()
    for name in ("structured", "inducer", "stop_token", "out"):
        if name in sec:
            out[name] = sec[name]
    for name in ("seed", "lookahead", "overgen_n", "threads"):
        if name in sec:
            out[name] = int(sec[name])
    for name in ("eval_fraction", "min_gain_bits"):
        if name in sec:
            out[name] = float(sec[name])
    if "baselines" in sec:
        out["baselines"] = sec["baselines"].split()
    return out


# ---------------------------------------------------------------------------
# per-language pipeline
# ---------------------------------------------------------------------------

@dataclass
class LanguageJob:
    name: str
    induction: Corpus
    evaluation: Corpus | None
    language: set           # full known language as id tuples, for overgen
    seed: int


def _run_language(job: LanguageJob, cfg: RunConfig) -> dict:
    vocab = job.induction.vocab
    treebank = induce_brackets(job.induction, method=cfg.inducer, seed=job.seed)
    result = bmm_label(treebank, vocab, cfg.bmm_config())
    grammar = result.grammar
    dl = describe(grammar, job.induction, job.evaluation)
    lengths = LengthDistribution.from_corpus(job.induction)
    coverage = CoverageReport(
        eval_coverage=(evaluation_coverage(grammar, job.evaluation)
                       if job.evaluation is not None else None),
        overgen_coverage=overgeneration_coverage(grammar, vocab, lengths,
                                                 job.language,
                                                 n=cfg.overgen_n, seed=job.seed),
        overgen_sample_size=cfg.overgen_n)
    parse_corpus = job.evaluation if job.evaluation is not None else job.induction
    parses = []
    parse_lines = []
    for msg in parse_corpus.messages():
        parsed = viterbi_parse(grammar, [vocab.symbol(t) for t in msg])
        if parsed is None:
            continue
        parses.append(parsed[0])
        parse_lines.append(parsed[0].pretty())
    stats = nature_stats(grammar, parses)
    return {
        "name": job.name,
        "n_induction": len(job.induction),
        "n_evaluation": len(job.evaluation) if job.evaluation is not None else 0,
        "description_lengths": {
            "gdl_bits": dl.gdl_bits,
            "ddl_total_bits": dl.ddl_total_bits,
            "ddl_avg_bits": dl.ddl_avg_bits,
            "eval_ddl_avg_bits": dl.eval_ddl_avg_bits,
            "ratio_ddl_gdl": dl.ratio_ddl_gdl,
            "ratio_eval_ddl_gdl": dl.ratio_eval_ddl_gdl,
            "n_unparsed": dl.n_unparsed,
            "enumeration_baseline_gdl_bits": enumeration_baseline_gdl(job.induction),
        },
        "coverage": {
            "eval_coverage": coverage.eval_coverage,
            "overgen_coverage": coverage.overgen_coverage,
            "overgen_sample_size": coverage.overgen_sample_size,
        },
        "nature": {
            "n_preterminals": stats.n_preterminals,
            "n_terminals": stats.n_terminals,
            "n_nonterminals": stats.n_nonterminals,
            "avg_terminals_per_preterminal": stats.avg_terminals_per_preterminal,
            "avg_preterminals_per_terminal": stats.avg_preterminals_per_terminal,
            "n_preterminal_groups": stats.n_preterminal_groups,
            "n_group_generating_nonterminals": stats.n_group_generating_nonterminals,
            "avg_groups_per_generating_nt": stats.avg_groups_per_generating_nt,
            "n_recursive_rules": stats.n_recursive_rules,
        },
        "depth_histogram": {str(k): v for k, v in sorted(stats.depth_histogram.items())},
        "trivial_flat": is_trivial_flat(grammar),
        "bmm": {
            "n_merges": len(result.merge_log),
            "initial_dl_bits": result.initial_dl_bits,
            "final_dl_bits": result.final_dl_bits,
        },
        "_artifacts": {
            "grammar": grammar.serialize(),
            "treebank": serialize_treebank(treebank, job.induction),
            "merge_log": _merge_log_text(result.merge_log),
            "parses": "\n".join(parse_lines) + ("\n" if parse_lines else ""),
        },
    }


def _merge_log_text(log: list) -> str:
    lines = ["a\tb\tdelta_bits\tgdl_bits\tddl_bits"]
    for entry in log:
        a, b = entry["merged"]
        lines.append(f"{a}\t{b}\t{entry['delta_bits']:.6f}"
                     f"\t{entry['gdl_bits']:.6f}\t{entry['ddl_bits']:.6f}")
    return "\n".join(lines) + "\n"


def _language_ids(corpus: Corpus) -> set:
    return set(corpus.messages())


def _structured_source(spec_arg: str):
    if spec_arg.startswith("fixture:"):
        try:
            l, v = (int(x) for x in spec_arg.split(":", 1)[1].split(","))
        except ValueError:
            raise ConfigError("fixture spec must look like fixture:L,V")
        return fixture(l, v)
    with open(spec_arg, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def cmd_analyze(cfg: RunConfig) -> dict:
    cfg.validate()
    jobs: list = []
    report_langs: dict = {}
    structured_spec = None
    if cfg.structured:
        structured_spec = _structured_source(cfg.structured)
        grammar_true = build_structured_grammar(structured_spec)
        msgs = enumerate_language(grammar_true)
        vocab = Vocabulary(grammar_true.terminals)
        sp = structured_split(msgs, seed=cfg.seed, vocab=vocab)
        language = {tuple(vocab.id_of(t) for t in m) for m in msgs}
        jobs.append(LanguageJob("structured", sp.induction, sp.evaluation,
                                language, cfg.seed))
    else:
        first_induction = None
        for i, path in enumerate(sorted(cfg.inputs)):
            with open(path, encoding="utf-8") as fh:
                corpus = load_corpus(fh.read(), stop_token=cfg.stop_token)
            sp = split(corpus, cfg.eval_fraction, cfg.seed)
            name = os.path.splitext(os.path.basename(path))[0] or f"emergent{i}"
            jobs.append(LanguageJob(f"emergent:{name}", sp.induction, sp.evaluation,
                                    _language_ids(corpus), cfg.seed))
            if first_induction is None:
                first_induction = sp.induction
        if "random" in cfg.baselines:
            lengths = LengthDistribution.from_corpus(first_induction)
            lang = gen_random_language(first_induction.vocab, lengths,
                                       len(first_induction), seed=cfg.seed)
            jobs.append(LanguageJob("random", lang, None,
                                    _language_ids(lang), cfg.seed))
        if "shuffled" in cfg.baselines:
            lang = gen_shuffled_language(first_induction, seed=cfg.seed)
            jobs.append(LanguageJob("shuffled", lang, None,
                                    _language_ids(lang), cfg.seed))
        if "structured" in cfg.baselines:
            l_max = first_induction.l_max
            v = len(first_induction.vocab)
            spec = fixture(l_max, v)
            g_true = build_structured_grammar(spec)
            msgs = enumerate_language(g_true)
            vocab = Vocabulary(g_true.terminals)
            sp = structured_split(msgs, seed=cfg.seed, vocab=vocab)
            language = {tuple(vocab.id_of(t) for t in m) for m in msgs}
            jobs.append(LanguageJob("structured", sp.induction, sp.evaluation,
                                    language, cfg.seed))

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda j: _run_language(j, cfg), jobs))
    else:
        results = [_run_language(j, cfg) for j in jobs]
    for res in results:
        report_langs[res["name"]] = res

    ttests = _ttest_block(report_langs)
    report = {
        "meta": {
            "tool": "syngram",
            "version": __version__,
            "config_hash": hashlib.sha256(
                json.dumps(cfg.as_dict(), sort_keys=True).encode()).hexdigest()[:16],
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
        "config": cfg.as_dict(),
        "languages": {name: {k: v for k, v in res.items() if k != "_artifacts"}
                      for name, res in sorted(report_langs.items())},
        "ttests": ttests,
    }
    _write_analysis(cfg.out, report, report_langs)
    return report


def _metric_value(res: dict, metric: str):
    for section in ("description_lengths", "coverage", "nature"):
        if metric in res[section]:
            return res[section][metric]
    return None


def _ttest_block(report_langs: dict) -> list:
    emergent = [res for name, res in sorted(report_langs.items())
                if name.startswith("emergent:")]
    baselines = {name: res for name, res in report_langs.items()
                 if not name.startswith("emergent:")}
    out = []
    if len(emergent) < 2:
        return out
    for metric in TTEST_METRICS:
        samples = [_metric_value(res, metric) for res in emergent]
        if any(s is None for s in samples):
            continue
        for bname in sorted(baselines):
            mu0 = _metric_value(baselines[bname], metric)
            if mu0 is None:
                continue
            r = one_sample_ttest(samples, mu0)
            out.append({
                "metric": metric, "baseline": bname, "baseline_value": mu0,
                "mean": r.mean, "sd": r.sd, "t": r.t_statistic,
                "p": r.p_value, "df": r.df, "significant": r.p_value < 0.05,
            })
    return out


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def _write(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6f}"
    return x


def _write_analysis(out_dir: str, report: dict, report_langs: dict):
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "report.json"),
           json.dumps(report, sort_keys=True, indent=2) + "\n")
    names = sorted(report_langs)

    dl_rows = []
    cov_rows = []
    nature_rows = []
    group_rows = []
    wc_rows = []
    depth_rows = []
    for name in names:
        res = report_langs[name]
        d = res["description_lengths"]
        dl_rows.append([name] + [_fmt(d[k]) for k in (
            "gdl_bits", "ddl_total_bits", "ddl_avg_bits", "eval_ddl_avg_bits",
            "ratio_ddl_gdl", "ratio_eval_ddl_gdl",
            "enumeration_baseline_gdl_bits", "n_unparsed")])
        c = res["coverage"]
        cov_rows.append([name, _fmt(c["eval_coverage"]), _fmt(c["overgen_coverage"]),
                         c["overgen_sample_size"]])
        n = res["nature"]
        nature_rows.append([name] + [_fmt(n[k]) for k in (
            "n_preterminals", "n_terminals", "n_nonterminals",
            "avg_terminals_per_preterminal", "avg_preterminals_per_terminal",
            "n_recursive_rules")] + [res["trivial_flat"]])
        group_rows.append([name, n["n_preterminal_groups"],
                           n["n_group_generating_nonterminals"],
                           _fmt(n["avg_groups_per_generating_nt"])])
        wc_rows.append([name, _fmt(n["avg_terminals_per_preterminal"]),
                        _fmt(n["avg_preterminals_per_terminal"])])
        for depth, count in sorted(res["depth_histogram"].items(), key=lambda kv: int(kv[0])):
            depth_rows.append([name, depth, count])

    _write(os.path.join(out_dir, "description_lengths.csv"), _csv_text(
        ["language", "gdl_bits", "ddl_total_bits", "ddl_avg_bits",
         "eval_ddl_avg_bits", "ratio_ddl_gdl", "ratio_eval_ddl_gdl",
         "enumeration_baseline_gdl_bits", "n_unparsed"], dl_rows))
    _write(os.path.join(out_dir, "coverage.csv"), _csv_text(
        ["language", "eval_coverage", "overgen_coverage", "overgen_sample_size"],
        cov_rows))
    _write(os.path.join(out_dir, "nature.csv"), _csv_text(
        ["language", "n_preterminals", "n_terminals", "n_nonterminals",
         "avg_terminals_per_preterminal", "avg_preterminals_per_terminal",
         "n_recursive_rules", "trivial_flat"], nature_rows))
    _write(os.path.join(out_dir, "preterminal_groups.csv"), _csv_text(
        ["language", "n_preterminal_groups", "n_group_generating_nonterminals",
         "avg_groups_per_generating_nt"], group_rows))
    _write(os.path.join(out_dir, "word_classes.csv"), _csv_text(
        ["language", "avg_terminals_per_preterminal",
         "avg_preterminals_per_terminal"], wc_rows))
    _write(os.path.join(out_dir, "depth_histogram.csv"), _csv_text(
        ["language", "depth", "count"], depth_rows))

    tt_rows = [[t["metric"], t["baseline"], _fmt(t["baseline_value"]),
                _fmt(t["mean"]), _fmt(t["sd"]), _fmt(t["t"]), _fmt(t["p"]),
                "*" if t["significant"] else ""] for t in report["ttests"]]
    _write(os.path.join(out_dir, "ttests.csv"), _csv_text(
        ["metric", "baseline", "baseline_value", "mean", "sd", "t", "p",
         "significant"], tt_rows))

    for name in names:
        res = report_langs[name]
        safe = name.replace(":", "_").replace("/", "_")
        lang_dir = os.path.join(out_dir, safe)
        art = res["_artifacts"]
        _write(os.path.join(lang_dir, "grammar.pcfg"), art["grammar"])
        _write(os.path.join(lang_dir, "treebank.txt"), art["treebank"])
        _write(os.path.join(lang_dir, "merge_log.tsv"), art["merge_log"])
        _write(os.path.join(lang_dir, "parses.txt"), art["parses"])


# ---------------------------------------------------------------------------
# other subcommands
# ---------------------------------------------------------------------------

def cmd_induce(args) -> dict:
    with open(args.input, encoding="utf-8") as fh:
        corpus = load_corpus(fh.read(), stop_token=args.stop_token)
    tb = induce_brackets(corpus, method=args.inducer, seed=args.seed)
    _write(args.out, serialize_treebank(tb, corpus))
    return {"messages": len(corpus), "out": args.out}


def cmd_label(args) -> dict:
    with open(args.input, encoding="utf-8") as fh:
        corpus = load_corpus(fh.read(), stop_token=args.stop_token)
    if args.treebank:
        with open(args.treebank, encoding="utf-8") as fh:
            tb = parse_treebank(fh.read(), corpus)
    else:
        tb = induce_brackets(corpus, method=args.inducer, seed=args.seed)
    result = bmm_label(tb, corpus.vocab,
                       BmmConfig(lookahead_depth=args.lookahead,
                                 min_gain_bits=args.min_gain_bits))
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "grammar.pcfg"), result.grammar.serialize())
    _write(os.path.join(args.out, "merge_log.tsv"), _merge_log_text(result.merge_log))
    labeled_lines = [result.treebank[m].pretty() for m in sorted(result.treebank)]
    _write(os.path.join(args.out, "labeled_trees.txt"), "\n".join(labeled_lines) + "\n")
    return {"merges": len(result.merge_log),
            "gdl_bits": result.final_dl_bits, "out": args.out}


def cmd_grammar_stats(args) -> dict:
    with open(args.grammar, encoding="utf-8") as fh:
        grammar = Pcfg.parse(fh.read())
    parses = []
    if args.corpus:
        with open(args.corpus, encoding="utf-8") as fh:
            corpus = load_corpus(fh.read(), stop_token=args.stop_token)
        for msg in corpus.messages():
            parsed = viterbi_parse(grammar, [corpus.vocab.symbol(t) for t in msg])
            if parsed is not None:
                parses.append(parsed[0])
    stats = nature_stats(grammar, parses)
    out = {
        "n_preterminals": stats.n_preterminals,
        "n_terminals": stats.n_terminals,
        "n_nonterminals": stats.n_nonterminals,
        "n_preterminal_groups": stats.n_preterminal_groups,
        "n_group_generating_nonterminals": stats.n_group_generating_nonterminals,
        "avg_groups_per_generating_nt": stats.avg_groups_per_generating_nt,
        "avg_terminals_per_preterminal": stats.avg_terminals_per_preterminal,
        "avg_preterminals_per_terminal": stats.avg_preterminals_per_terminal,
        "n_recursive_rules": stats.n_recursive_rules,
        "depth_histogram": {str(k): v for k, v in sorted(stats.depth_histogram.items())},
        "trivial_flat": is_trivial_flat(grammar),
    }
    return out


def cmd_baseline(args) -> dict:
    with open(args.lengths_from, encoding="utf-8") as fh:
        source = load_corpus(fh.read(), stop_token=args.stop_token)
    if args.kind == "random":
        n = args.n if args.n is not None else len(source)
        lang = gen_random_language(source.vocab,
                                   LengthDistribution.from_corpus(source),
                                   n, seed=args.seed)
    else:
        lang = gen_shuffled_language(source, seed=args.seed)
    _write(args.out, lang.serialize())
    return {"kind": args.kind, "messages": len(lang), "out": args.out}


def cmd_structured(args) -> dict:
    spec = _structured_source(args.spec)
    grammar = build_structured_grammar(spec)
    msgs = enumerate_language(grammar)
    vocab = Vocabulary(grammar.terminals)
    sp = structured_split(msgs, seed=args.seed, vocab=vocab)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "spec.cfg"), spec.serialize())
    _write(os.path.join(args.out, "rules.txt"), grammar.serialize())
    _write(os.path.join(args.out, "grammar.pcfg"), grammar.to_pcfg().serialize())
    lines = [" ".join(m) for m in msgs]
    _write(os.path.join(args.out, "messages.txt"), "\n".join(lines) + "\n")
    _write(os.path.join(args.out, "induction.txt"), sp.induction.serialize())
    _write(os.path.join(args.out, "evaluation.txt"), sp.evaluation.serialize())
    return {"total": len(msgs), "induction": len(sp.induction),
            "evaluation": len(sp.evaluation), "out": args.out}


def cmd_consistency(args) -> dict:
    with open(args.input, encoding="utf-8") as fh:
        corpus = load_corpus(fh.read(), stop_token=args.stop_token)
    sp = split(corpus, args.eval_fraction, args.seed)
    sizes = [int(x) for x in args.pool_sizes.split(",")]
    result = consistency_experiment(sp.induction, sizes, repeats=args.repeats,
                                    inducer_method=args.inducer,
                                    test=sp.evaluation, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    cell_rows = [[c.size, c.repeat, c.seed, c.n_unique, _fmt(c.gdl_bits),
                  _fmt(c.baseline_gdl_bits), _fmt(c.eval_coverage)]
                 for c in result.cells]
    _write(os.path.join(args.out, "consistency_cells.csv"), _csv_text(
        ["pool_size", "repeat", "seed", "n_unique", "gdl_bits",
         "baseline_gdl_bits", "eval_coverage"], cell_rows))
    f1_rows = [[ka[0], ka[1], kb[0], kb[1], _fmt(v)]
               for (ka, kb), v in sorted(result.f1.items())]
    _write(os.path.join(args.out, "consistency_f1.csv"), _csv_text(
        ["size_a", "repeat_a", "size_b", "repeat_b", "f1"], f1_rows))
    return {"cells": len(result.cells), "out": args.out}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syngram",
        description="grammar induction and description-length analysis "
                    "for discrete-symbol languages")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stop-token", dest="stop_token", default=None)

    p = sub.add_parser("analyze", help="full pipeline with baselines and report")
    p.add_argument("--config", default=None, help="key/value config file ([run] section)")
    p.add_argument("--input", action="append", default=None, help="corpus file; repeatable")
    p.add_argument("--structured", default=None,
                   help="structured spec file or fixture:L,V")
    p.add_argument("--inducer", default=None, choices=METHODS)
    p.add_argument("--eval-fraction", dest="eval_fraction", type=float, default=None)
    p.add_argument("--lookahead", type=int, default=None)
    p.add_argument("--min-gain-bits", dest="min_gain_bits", type=float, default=None)
    p.add_argument("--overgen-n", dest="overgen_n", type=int, default=None)
    p.add_argument("--baselines", default=None,
                   help="comma-separated subset of random,shuffled,structured")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stop-token", dest="stop_token", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("induce", help="bracket every message of a corpus")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--inducer", default="pmi_greedy", choices=METHODS)
    p.add_argument("--out", required=True)

    p = sub.add_parser("label", help="label a treebank and read off the grammar")
    common(p)
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--treebank", default=None, help="bracketed trees; induced if omitted")
    p.add_argument("--inducer", default="pmi_greedy", choices=METHODS)
    p.add_argument("--lookahead", type=int, default=1)
    p.add_argument("--min-gain-bits", dest="min_gain_bits", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("grammar-stats", help="nature statistics of a grammar file")
    common(p)
    p.add_argument("--grammar", required=True)
    p.add_argument("--corpus", default=None)

    p = sub.add_parser("baseline", help="generate a degenerate baseline language")
    p.add_argument("kind", choices=["random", "shuffled"])
    common(p)
    p.add_argument("--lengths-from", dest="lengths_from", required=True,
                   help="source corpus providing vocabulary and lengths")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("structured", help="build a structured language and splits")
    common(p)
    p.add_argument("--spec", required=True, help="spec file or fixture:L,V")
    p.add_argument("--out", required=True)

    p = sub.add_parser("consistency", help="pool-size consistency experiment")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--pool-sizes", dest="pool_sizes", required=True,
                   help="comma-separated pool sizes")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--inducer", default="pmi_greedy", choices=METHODS)
    p.add_argument("--eval-fraction", dest="eval_fraction", type=float, default=0.1)
    p.add_argument("--out", required=True)
    return parser


def _analyze_config(args) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    overrides = {
        "inputs": args.input, "structured": args.structured,
        "inducer": args.inducer, "seed": args.seed,
        "eval_fraction": args.eval_fraction, "lookahead": args.lookahead,
        "min_gain_bits": args.min_gain_bits, "overgen_n": args.overgen_n,
        "baselines": args.baselines.split(",") if args.baselines else None,
        "stop_token": args.stop_token, "threads": args.threads, "out": args.out,
    }
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            report = cmd_analyze(_analyze_config(args))
            summary = {name: {"trivial_flat": lang["trivial_flat"],
                              "n_preterminals": lang["nature"]["n_preterminals"]}
                       for name, lang in report["languages"].items()}
            print(json.dumps({"out": report["config"]["out"],
                              "languages": summary}, sort_keys=True, indent=2))
        elif args.command == "induce":
            print(json.dumps(cmd_induce(args), sort_keys=True))
        elif args.command == "label":
            print(json.dumps(cmd_label(args), sort_keys=True))
        elif args.command == "grammar-stats":
            print(json.dumps(cmd_grammar_stats(args), sort_keys=True, indent=2))
        elif args.command == "baseline":
            print(json.dumps(cmd_baseline(args), sort_keys=True))
        elif args.command == "structured":
            print(json.dumps(cmd_structured(args), sort_keys=True))
        elif args.command == "consistency":
            print(json.dumps(cmd_consistency(args), sort_keys=True))
        return 0
    except ConfigError as exc:
        _emit_error("config", exc)
        return 2
    except DataError as exc:
        _emit_error("data", exc)
        return 3
    except InvariantError as exc:
        _emit_error("invariant", exc)
        return 4
    except SyngramError as exc:
        _emit_error("error", exc)
        return 3
    except OSError as exc:
        _emit_error("io", exc)
        return 3


def _emit_error(kind: str, exc: Exception):
    sys.stderr.write(json.dumps(
        {"error": {"type": kind, "message": str(exc)}}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
