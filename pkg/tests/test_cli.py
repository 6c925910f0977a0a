import json
import os
import subprocess
import sys

from syngram.cli import main


def run_cli(args):
    return main(list(args))


def _gen_corpus(path, v=6, length=3, n=60, seed=0):
    import random
    rng = random.Random(seed)
    seen = set()
    while len(seen) < n:
        seen.add(tuple(str(rng.randrange(v)) for _ in range(length)))
    with open(path, "w") as fh:
        for msg in sorted(seen):
            fh.write(" ".join(msg) + "\n")
    return path


def _read_tree(out_dir, drop_timestamp=True):
    trees = {}
    for root, _, files in os.walk(out_dir):
        for name in sorted(files):
            path = os.path.join(root, name)
            rel = os.path.relpath(path, out_dir)
            with open(path, "rb") as fh:
                data = fh.read()
            if drop_timestamp and name == "report.json":
                obj = json.loads(data)
                obj["meta"].pop("timestamp", None)
                data = json.dumps(obj, sort_keys=True).encode()
            trees[rel] = data
    return trees


def test_structured_subcommand_writes_language(tmp_path, capsys):
    out = tmp_path / "sx"
    assert run_cli(["structured", "--spec", "fixture:5,13", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["total"] == 378
    assert info["induction"] == 302
    assert info["evaluation"] == 76
    messages = (out / "messages.txt").read_text().splitlines()
    assert len(messages) == 378
    assert (out / "grammar.pcfg").exists()
    assert (out / "rules.txt").read_text().startswith("TOP ->")


def test_grammar_stats_on_fixture(tmp_path, capsys):
    out = tmp_path / "sx"
    run_cli(["structured", "--spec", "fixture:5,13", "--out", str(out)])
    capsys.readouterr()
    assert run_cli(["grammar-stats", "--grammar", str(out / "grammar.pcfg")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["n_preterminals"] == 5
    assert stats["n_terminals"] == 13
    assert stats["n_preterminal_groups"] == 3


def test_baseline_subcommands(tmp_path, capsys):
    src = _gen_corpus(str(tmp_path / "src.txt"), n=40)
    rand_out = tmp_path / "rand.txt"
    assert run_cli(["baseline", "random", "--lengths-from", src,
                    "--n", "40", "--seed", "3", "--out", str(rand_out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["messages"] == 40
    shuf_out = tmp_path / "shuf.txt"
    assert run_cli(["baseline", "shuffled", "--lengths-from", src,
                    "--seed", "3", "--out", str(shuf_out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert 1 <= info["messages"] <= 40
    assert rand_out.read_text().strip()


def test_induce_then_label_round_trip(tmp_path, capsys):
    src = _gen_corpus(str(tmp_path / "c.txt"), n=30)
    tb_path = tmp_path / "trees.txt"
    assert run_cli(["induce", "--input", src, "--inducer", "right_branching",
                    "--out", str(tb_path)]) == 0
    capsys.readouterr()
    out_dir = tmp_path / "labeled"
    assert run_cli(["label", "--input", src, "--treebank", str(tb_path),
                    "--out", str(out_dir)]) == 0
    assert (out_dir / "grammar.pcfg").exists()
    assert (out_dir / "merge_log.tsv").exists()
    assert (out_dir / "labeled_trees.txt").exists()


def test_analyze_trivial_flagging_on_random_l3(tmp_path, capsys):
    src = _gen_corpus(str(tmp_path / "r.txt"), v=6, length=3, n=150, seed=7)
    out = tmp_path / "out"
    assert run_cli(["analyze", "--input", src, "--inducer", "flat",
                    "--seed", "1", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    (lang,) = report["languages"].values()
    assert lang["trivial_flat"] is True
    assert lang["nature"]["n_preterminals"] == 1
    assert lang["coverage"]["eval_coverage"] == 1.0
    assert lang["coverage"]["overgen_coverage"] == 1.0


def test_analyze_with_baselines_and_ttests(tmp_path):
    paths = [_gen_corpus(str(tmp_path / f"lang{i}.txt"), n=50, seed=i)
             for i in range(3)]
    out = tmp_path / "out"
    code = run_cli(["analyze"] + [x for p in paths for x in ("--input", p)]
                   + ["--baselines", "random,shuffled", "--seed", "5",
                      "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    names = set(report["languages"])
    assert {"random", "shuffled"} <= names
    assert sum(1 for n in names if n.startswith("emergent:")) == 3
    assert report["ttests"], "expected t-tests with 3 emergent samples"
    for row in report["ttests"]:
        assert 0.0 <= row["p"] <= 1.0
    for csv_name in ("description_lengths.csv", "coverage.csv", "nature.csv",
                     "preterminal_groups.csv", "word_classes.csv",
                     "depth_histogram.csv", "ttests.csv"):
        assert (out / csv_name).exists(), csv_name


def test_analyze_deterministic_across_thread_counts(tmp_path):
    import shutil
    paths = [_gen_corpus(str(tmp_path / f"l{i}.txt"), n=40, seed=10 + i)
             for i in range(2)]
    out = tmp_path / "out"
    outs = []
    for threads in (1, 8, 1):
        if out.exists():
            shutil.rmtree(out)
        code = run_cli(["analyze"] + [x for p in paths for x in ("--input", p)]
                       + ["--baselines", "random", "--seed", "2",
                          "--threads", str(threads), "--out", str(out)])
        assert code == 0
        outs.append(_read_tree(out))
    # thread count must not change a single byte (timestamp excluded)
    base = outs[0]
    for other in outs[1:]:
        assert set(other) == set(base)
        for rel in base:
            if rel == "report.json":
                # the thread count is configuration and may differ in the
                # config block; everything else must match exactly
                a = json.loads(base[rel])
                b = json.loads(other[rel])
                a["config"].pop("threads")
                b["config"].pop("threads")
                a["meta"].pop("config_hash")
                b["meta"].pop("config_hash")
                assert a == b
            else:
                assert other[rel] == base[rel], f"{rel} differs between runs"


def test_analyze_config_file(tmp_path):
    src = _gen_corpus(str(tmp_path / "c.txt"), n=30)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"[run]\ninput = {src}\nseed = 4\ninducer = balanced\n"
                   f"out = {tmp_path / 'cfg_out'}\n")
    assert run_cli(["analyze", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "cfg_out" / "report.json").read_text())
    assert report["config"]["inducer"] == "balanced"
    assert report["config"]["seed"] == 4


def test_exit_codes():
    # config error: no input source
    assert run_cli(["analyze", "--out", "/tmp/never"]) == 2
    # data error: missing corpus file propagates as I/O failure
    assert run_cli(["induce", "--input", "/nonexistent/x.txt",
                    "--out", "/tmp/never.txt"]) == 3


def test_error_json_on_stderr(tmp_path, capsys):
    run_cli(["analyze", "--out", str(tmp_path / "x")])
    err = capsys.readouterr().err
    obj = json.loads(err)
    assert obj["error"]["type"] == "config"


def test_console_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "syngram.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "analyze" in proc.stdout


def test_consistency_subcommand(tmp_path, capsys):
    src = _gen_corpus(str(tmp_path / "c.txt"), v=6, length=3, n=80, seed=3)
    out = tmp_path / "cons"
    assert run_cli(["consistency", "--input", src, "--pool-sizes", "20,40",
                    "--repeats", "2", "--seed", "6", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["cells"] == 4
    cells = (out / "consistency_cells.csv").read_text().splitlines()
    assert len(cells) == 5  # header + 4 cells
    f1 = (out / "consistency_f1.csv").read_text().splitlines()
    assert len(f1) == 1 + 4 * 5 // 2  # header + upper triangle incl diagonal
