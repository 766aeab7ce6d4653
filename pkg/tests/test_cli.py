import json
import stat

import pytest

from conftest import CALC_SH
from mrrefine.cli import main
from mrrefine.fuzz import read_corpus
from mrrefine.harness import loads_log
from mrrefine.refine import TestSuiteManifest, loads_final_rules


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for var in ("SEED", "JOBS", "MIN_SUPPORT", "MIN_CONFIDENCE", "FEATURES", "ATYPICAL", "CASES_PER_RULE"):
        monkeypatch.delenv(f"MRREFINE_{var}", raising=False)
    return tmp_path


def _pipeline(*, decisions=None):
    assert main(["fuzz", "--mode", "exhaustive", "--out", "corpus.csv"]) == 0
    assert main(["run", "--corpus", "corpus.csv", "--k", "5", "--out", "log.csv"]) == 0
    assert main(["analyze", "--log", "log.csv", "--report", "summary.json"]) == 0
    extra = ["--decisions", decisions] if decisions else []
    assert main(["review", "--report", "summary.json", "--out", "rules.txt", *extra]) == 0


def test_fuzz_exhaustive(work):
    assert main(["fuzz", "--mode", "exhaustive", "--out", "c.csv"]) == 0
    assert len(read_corpus("c.csv")) == 100
    side = json.loads((work / "c.csv.manifest.json").read_text())
    assert side["mode"] == "exhaustive" and side["rng"]


def test_fuzz_deterministic(work):
    main(["fuzz", "--seed", "11", "--out", "a.csv"])
    main(["fuzz", "--seed", "11", "--out", "b.csv"])
    main(["fuzz", "--seed", "12", "--out", "c.csv"])
    assert (work / "a.csv").read_bytes() == (work / "b.csv").read_bytes()
    assert (work / "a.csv").read_bytes() != (work / "c.csv").read_bytes()


def test_fuzz_bad_domain(work, capsys):
    assert main(["fuzz", "--min", "9", "--max", "0"]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_error_exit_1(work):
    assert main(["frobnicate"]) == 1
    assert main(["run"]) == 1


def test_run_builtin(work):
    main(["fuzz", "--mode", "exhaustive", "--out", "corpus.csv"])
    assert main(["run", "--corpus", "corpus.csv", "--k", "5", "--out", "log.csv"]) == 0
    records, ids = loads_log((work / "log.csv").read_text())
    assert len(records) == 300 and ids == ["MR1", "MR2", "MR3", "MR4"]


def test_run_draws_k_from_seed(work):
    main(["fuzz", "--count", "5", "--seed", "3", "--out", "corpus.csv"])
    main(["run", "--corpus", "corpus.csv", "--out", "log.csv"])
    k = json.loads((work / "log.csv.manifest.json").read_text())["k"]
    assert 2 <= k <= 9


def test_run_missing_corpus(work, capsys):
    assert main(["run", "--corpus", "nope.csv"]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_run_external_matches_builtin(work):
    main(["fuzz", "--mode", "exhaustive", "--max", "4", "--out", "corpus.csv"])
    main(["run", "--corpus", "corpus.csv", "--k", "5", "--out", "a.csv"])
    assert main(["run", "--corpus", "corpus.csv", "--k", "5", "--sut", f"cmd:{CALC_SH}", "--out", "b.csv"]) == 0
    assert (work / "a.csv").read_bytes() == (work / "b.csv").read_bytes()


def test_run_sut_failure(work, capsys):
    sut = work / "broken.sh"
    sut.write_text('#!/bin/sh\nif [ "$2" = "2" ]; then exit 1; fi\necho $(( $2 + $3 ))\n')
    sut.chmod(sut.stat().st_mode | stat.S_IEXEC)
    main(["fuzz", "--mode", "exhaustive", "--max", "3", "--out", "corpus.csv"])
    code = main(["run", "--corpus", "corpus.csv", "--k", "5", "--functions", "add", "--sut", f"cmd:{sut}",
                 "--out", "log.csv"])
    assert code == 2
    # datum 2 is (0, 2); its permuted follow-up add(2, 0) is the first failing call
    assert "input id 2" in capsys.readouterr().err
    text = (work / "log.csv").read_text()
    assert text.splitlines()[-1].startswith("#PARTIAL")
    records, _ = loads_log(text, allow_partial=True)
    assert [r.id for r in records] == [0, 1]


def test_analyze_twelve_cells(work, capsys):
    _pipeline()
    doc = json.loads((work / "summary.json").read_text())
    assert sum(len(v) for v in doc["cells"].values()) == 12
    assert doc["cells"]["sub"]["MR2"]["classification"] == "Mixed"
    assert "55.0% M" in capsys.readouterr().out


def test_analyze_writes_rules_and_csv(work):
    _pipeline()
    assert main(["analyze", "--log", "log.csv", "--report", "s2.json", "--rules", "mined.txt",
                 "--csv", "cells.csv", "--features", "rel"]) == 0
    mined = (work / "mined.txt").read_text()
    assert "func=SUB,rel=lt | MR2=Violated | 0.450 | 1.000 | 1.818" in mined
    assert len((work / "cells.csv").read_text().splitlines()) == 13


def test_mine_subcommand(work):
    _pipeline()
    assert main(["mine", "--log", "log.csv", "--min-support", "0.1", "--out", "m.txt"]) == 0
    assert "a_zero=true,func=MUL | MR2=Violated" in (work / "m.txt").read_text()


def test_bad_ratio_flag(work):
    _pipeline()
    assert main(["analyze", "--log", "log.csv", "--min-support", "1.5"]) == 1
    assert main(["analyze", "--log", "log.csv", "--min-support", "abc"]) == 1


def test_gen_suite_default(work):
    _pipeline()
    assert main(["gen-suite", "--rules", "rules.txt", "--corpus", "corpus.csv", "--out", "suite.json",
                 "--render", "suite.txt"]) == 0
    suite = TestSuiteManifest.loads((work / "suite.json").read_text())
    assert suite.tests and all(len(t["concrete_inputs"]) <= 5 for t in suite.tests)
    assert suite.campaign["manifest"]["k"] == 5
    assert "assert" in (work / "suite.txt").read_text()


def test_review_fault_blocks_gen_suite(work, capsys):
    (work / "dec.json").write_text(json.dumps({"decisions": {"mul.MR2": {"classification": "Fault"}}}))
    _pipeline(decisions="dec.json")
    _, blocked = loads_final_rules((work / "rules.txt").read_text())
    assert blocked == ["mul.MR2"]
    code = main(["gen-suite", "--rules", "rules.txt", "--corpus", "corpus.csv"])
    assert code == 3
    assert "blocked" in capsys.readouterr().err
    assert not (work / "suite.json").exists()


def test_review_bad_decisions(work):
    _pipeline()
    (work / "dec.json").write_text("{not json")
    assert main(["review", "--report", "summary.json", "--decisions", "dec.json"]) == 1
    (work / "dec.json").write_text(json.dumps({"add.MR1": {"classification": "NoMatch"}}))
    assert main(["review", "--report", "summary.json", "--decisions", "dec.json"]) == 1


def test_review_accepts_99_percent(work):
    (work / "dec.json").write_text(json.dumps({"add.MR2": {"include_as": "PositiveTest"}}))
    _pipeline(decisions="dec.json")
    text = (work / "rules.txt").read_text()
    assert "func=ADD & !(a_zero=true,b_zero=true,both_zero=true,rel=eq) | MR2=NotViolated" in text


def test_env_overrides(work, monkeypatch):
    _pipeline()
    monkeypatch.setenv("MRREFINE_CASES_PER_RULE", "2")
    monkeypatch.setenv("MRREFINE_MIN_SUPPORT", "0.1")
    main(["gen-suite", "--rules", "rules.txt", "--corpus", "corpus.csv", "--out", "suite.json"])
    suite = TestSuiteManifest.loads((work / "suite.json").read_text())
    assert max(len(t["concrete_inputs"]) for t in suite.tests) == 2
    main(["analyze", "--log", "log.csv", "--report", "s.json"])
    assert json.loads((work / "s.json").read_text())["manifest"]["min_support"] == "0.100"


def test_env_seed(work, monkeypatch):
    monkeypatch.setenv("MRREFINE_SEED", "11")
    main(["fuzz", "--out", "a.csv"])
    monkeypatch.delenv("MRREFINE_SEED")
    main(["fuzz", "--seed", "11", "--out", "b.csv"])
    assert (work / "a.csv").read_bytes() == (work / "b.csv").read_bytes()
