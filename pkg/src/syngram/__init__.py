"""Syntactic analysis of discrete-symbol languages via grammar induction.

Pipeline: load a corpus, bracket every message, label the bracketings by
greedy description-length merging, read off a probabilistic grammar, and
score it with coverage, compressibility and grammar-nature metrics against
random, shuffled and structured baseline languages.
"""

from .baselines import LengthDistribution, gen_random_language, gen_shuffled_language
from .bmm import BmmConfig, BmmResult, MergeState, bmm_label, init_labels, merge_delta
from .corpus import (Corpus, Message, SplitCorpus, Vocabulary, load_corpus,
                     sample_pool, split)
from .errors import ConfigError, DataError, InvariantError, SyngramError
from .inducer import induce_brackets, tree_depth
from .metrics import (CoverageReport, GrammarNatureStats, TTestResult,
                      bracket_f1, consistency_experiment, evaluation_coverage,
                      nature_stats, one_sample_ttest, overgeneration_coverage)
from .pcfg import (CnfGrammar, DescriptionLengths, LabeledTree, Pcfg, Rule,
                   binarize, ddl, describe, enumeration_baseline_gdl,
                   extract_grammar, gdl, inside_logprob, recognize,
                   viterbi_parse)
from .structured import (Cfg, StructuredSpec, build_structured_grammar,
                         enumerate_language, fixture, parse_spec,
                         structured_split)

__version__ = "0.1.0"
