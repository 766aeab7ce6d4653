"""``mrrefine`` command line: fuzz -> run -> analyze -> review -> (mine) -> gen-suite.

Exit codes: 0 success, 1 usage or input error, 2 SUT execution failure,
3 campaign blocked by a Fault decision.

Defaults can be overridden through environment variables:
MRREFINE_SEED, MRREFINE_JOBS, MRREFINE_MIN_SUPPORT, MRREFINE_MIN_CONFIDENCE,
MRREFINE_FEATURES, MRREFINE_ATYPICAL, MRREFINE_CASES_PER_RULE.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from mrrefine import analyser, fuzz, harness, refine, relations, report
from mrrefine.arm import as_ratio, dumps_rules, render_ratio
from mrrefine.errors import BlockedCampaignError, CampaignAborted, ConfigError, MRRefineError
from mrrefine.manifest import manifest_hash, new_manifest, read_sidecar, write_sidecar

log = logging.getLogger("mrrefine")

K_POLICY = "one k shared by every MR that needs it"
PAIRING_POLICY = "every function runs on every corpus datum"


class UsageError(MRRefineError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which is reserved for SUT failures
        raise UsageError(f"{self.prog}: {message}")


def _env(name: str, default: str) -> str:
    return os.environ.get(f"MRREFINE_{name}", default)


def _ratio_arg(text: str) -> Fraction:
    try:
        value = as_ratio(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a ratio: {text!r}") from None
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1]: {text}")
    return value


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _load_manifest(*artifacts: Optional[str]) -> dict[str, Any]:
    for a in artifacts:
        if a:
            m = read_sidecar(a)
            if m is not None:
                return m
    return new_manifest()


def _mrs_from(manifest: dict[str, Any], mrs_arg: Optional[str], k: Optional[int]) -> list[relations.MRSpec]:
    if mrs_arg and mrs_arg != "default":
        return relations.load_mr_set(mrs_arg, k)
    if "mr_set" in manifest and not mrs_arg:
        return relations.mr_set_from_dict(manifest["mr_set"])
    if k is None:
        k = manifest.get("k")
    if k is None:
        raise ConfigError("no MR set recorded for this log; pass --mrs and --k")
    return relations.default_mr_set(k)


# -- subcommands -------------------------------------------------------------

def cmd_fuzz(args) -> int:
    config = fuzz.FuzzConfig(args.count, args.min, args.max, args.seed, mode=args.mode)
    corpus = fuzz.generate(config)
    fuzz.write_corpus(corpus, args.out)
    m = new_manifest()
    m.update({
        "seed": config.seed,
        "domain": [config.domain_min, config.domain_max],
        "mode": config.mode.value,
        "count": len(corpus),
        "distribution": config.distribution,
        "rng": fuzz.RNG_ALGORITHM,
    })
    write_sidecar(args.out, m, "corpus")
    print(f"wrote {len(corpus)} test data to {args.out}")
    return 0


def cmd_run(args) -> int:
    corpus = fuzz.read_corpus(args.corpus)
    m = _load_manifest(args.corpus)
    k = args.k
    if k is None:
        k = fuzz.draw_constant_k(m.get("seed", args.seed), args.k_min, args.k_max)
    mrs = (relations.default_mr_set(k) if args.mrs == "default" else relations.load_mr_set(args.mrs, k))
    adapter = harness.SutAdapter.parse(args.sut, args.functions.split(","))
    mr_ids = [mr.id for mr in mrs]
    m.update({
        "k": k,
        "k_policy": K_POLICY,
        "mr_set": relations.mr_set_to_dict(mrs),
        "mr_set_sha256": relations.mr_set_hash(mrs),
        "sut": adapter.describe(),
        "functions": list(adapter.functions),
        "pairing_policy": PAIRING_POLICY,
    })
    try:
        records = harness.run_campaign(corpus, mrs, adapter, jobs=args.jobs)
    except CampaignAborted as exc:
        harness.write_log(exc.records, mr_ids, args.out, partial=str(exc.cause))
        raise
    harness.write_log(records, mr_ids, args.out)
    write_sidecar(args.out, m, "log")
    print(f"wrote {len(records)} execution records to {args.out} (k={k})")
    return 0


def _clean_from(args, m) -> tuple[analyser.CleanLog, list[relations.MRSpec]]:
    records, mr_ids = harness.read_log(args.log)
    mrs = _mrs_from(m, args.mrs, args.k)
    if [mr.id for mr in mrs] != mr_ids:
        raise ConfigError(f"log MR columns {mr_ids} do not match MR set {[mr.id for mr in mrs]}")
    return analyser.preprocess(records, mrs), mrs


def cmd_analyze(args) -> int:
    m = _load_manifest(args.log)
    clean, mrs = _clean_from(args, m)
    summary = analyser.summarize(clean, args.samples, m.get("seed", 0))
    decisions = analyser.classify(summary, args.atypical)
    encoder = refine.FeatureEncoder.parse(args.features)
    mined = refine.mine_all(clean, mrs, encoder, args.min_support, args.min_confidence, decisions)
    profiles = refine.cell_profiles(clean, encoder)
    m.update({
        "min_support": render_ratio(args.min_support),
        "min_confidence": render_ratio(args.min_confidence),
        "atypical_threshold": render_ratio(args.atypical),
        "features": encoder.describe(),
        "samples_per_cell": args.samples,
    })
    doc = report.build_report(clean, summary, decisions, profiles, mined, m)
    _write(args.report, report.dumps_report(doc))
    write_sidecar(args.report, m, "report")
    if args.rules:
        _write(args.rules, dumps_rules(mined, [f"manifest {manifest_hash(m)}"]))
        write_sidecar(args.rules, m, "mined_rules")
    if args.csv:
        _write(args.csv, analyser.cells_csv(summary))
    print(f"{len(clean.records)} records kept, {clean.dropped_duplicates} duplicates and "
          f"{clean.dropped_inconsistent} inconsistent rows dropped")
    print(analyser.render_table(summary, decisions))
    print(f"{len(mined)} rules mined from Mixed cells")
    return 0


def cmd_mine(args) -> int:
    m = _load_manifest(args.log)
    clean, mrs = _clean_from(args, m)
    encoder = refine.FeatureEncoder.parse(args.features)
    mined = refine.mine_all(clean, mrs, encoder, args.min_support, args.min_confidence)
    m.update({"min_support": render_ratio(args.min_support),
              "min_confidence": render_ratio(args.min_confidence),
              "features": encoder.describe()})
    _write(args.out, dumps_rules(mined, [f"manifest {manifest_hash(m)}"]))
    write_sidecar(args.out, m, "mined_rules")
    print(f"wrote {len(mined)} rules to {args.out}")
    return 0


def cmd_review(args) -> int:
    doc = report.loads_report(Path(args.report).read_text())
    m = dict(doc.get("manifest") or new_manifest())
    decisions = report.decisions_from_report(doc)
    if args.decisions:
        try:
            overrides = json.loads(Path(args.decisions).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.decisions}: not valid JSON ({exc})") from None
        decisions = analyser.apply_feedback(decisions, overrides)
        m["decisions"] = {d.cell: {"classification": d.classification.value,
                                   "include_as": d.include_as.value if d.include_as else None}
                          for d in decisions if d.overridden}
    print(analyser.render_table(report.summary_from_report(doc), decisions))
    blocked = analyser.fault_cells(decisions)
    if blocked:
        m["blocked"] = blocked
        _write(args.out, refine.dumps_final_rules([], [f"manifest {manifest_hash(m)}"], blocked))
        write_sidecar(args.out, m, "rules")
        print(f"campaign BLOCKED by Fault on {', '.join(blocked)}: fix the SUT and repeat phase I")
        return 0
    rules = refine.finalize_rules(report.mined_from_report(doc), decisions, report.profiles_from_report(doc))
    _write(args.out, refine.dumps_final_rules(rules, [f"manifest {manifest_hash(m)}"]))
    write_sidecar(args.out, m, "rules")
    print(f"wrote {len(rules)} refined rules to {args.out}")
    return 0


def cmd_gensuite(args) -> int:
    rules, blocked = refine.loads_final_rules(Path(args.rules).read_text())
    if blocked:
        raise BlockedCampaignError(f"campaign blocked by Fault decision on {', '.join(blocked)}; "
                                   "repeat phase I before generating a suite")
    corpus = fuzz.read_corpus(args.corpus)
    m = _load_manifest(args.rules)
    mrs = _mrs_from(m, args.mrs, args.k)
    domain = tuple(m["domain"]) if "domain" in m else None
    m["cases_per_rule"] = args.cases_per_rule
    suite = refine.generate_suite(rules, corpus, mrs, args.cases_per_rule, campaign={
        "manifest": m, "manifest_sha256": manifest_hash(m)}, domain=domain,
        include_advisory=args.include_advisory)
    _write(args.out, suite.dumps())
    if args.render:
        _write(args.render, refine.render_suite_text(suite))
    print(f"wrote {len(suite.tests)} tests to {args.out}")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mrrefine", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fuzz", help="generate the test-data corpus")
    f.add_argument("--count", type=int, default=100)
    f.add_argument("--min", type=int, default=0)
    f.add_argument("--max", type=int, default=9)
    f.add_argument("--seed", type=int, default=int(_env("SEED", "0")))
    f.add_argument("--mode", choices=[m.value for m in fuzz.Mode], default="random")
    f.add_argument("--out", default="corpus.csv")
    f.set_defaults(func=cmd_fuzz)

    r = sub.add_parser("run", help="execute the MR set against the SUT")
    r.add_argument("--corpus", required=True)
    r.add_argument("--sut", default="builtin:calculator", help="builtin:calculator or cmd:<template>")
    r.add_argument("--functions", default="add,sub,mul")
    r.add_argument("--k", type=int, default=None, help="shared MR constant (default: drawn from the seed)")
    r.add_argument("--k-min", type=int, default=2)
    r.add_argument("--k-max", type=int, default=9)
    r.add_argument("--seed", type=int, default=int(_env("SEED", "0")),
                   help="used for k only when the corpus has no manifest")
    r.add_argument("--mrs", default="default", help="'default' or a JSON MR document")
    r.add_argument("--jobs", type=int, default=int(_env("JOBS", str(harness.default_jobs()))))
    r.add_argument("--out", default="log.csv")
    r.set_defaults(func=cmd_run)

    def mining_flags(sp):
        sp.add_argument("--log", required=True)
        sp.add_argument("--mrs", default=None, help="MR document (default: the one recorded by run)")
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--min-support", type=_ratio_arg, default=_ratio_arg(_env("MIN_SUPPORT", "0.2")))
        sp.add_argument("--min-confidence", type=_ratio_arg,
                        default=_ratio_arg(_env("MIN_CONFIDENCE", "1.0")))
        sp.add_argument("--features", default=_env("FEATURES", "PairRelation,ZeroFlags"))

    a = sub.add_parser("analyze", help="clean the log, summarise, classify and mine Mixed cells")
    mining_flags(a)
    a.add_argument("--atypical", type=_ratio_arg, default=_ratio_arg(_env("ATYPICAL", "0.1")))
    a.add_argument("--samples", type=int, default=analyser.DEFAULT_SAMPLE_SIZE)
    a.add_argument("--report", default="summary.json")
    a.add_argument("--rules", default=None, help="also write the mined rules file")
    a.add_argument("--csv", default=None, help="per-cell CSV for external plotting")
    a.set_defaults(func=cmd_analyze)

    mi = sub.add_parser("mine", help="mine rules for every Mixed cell of a log")
    mining_flags(mi)
    mi.add_argument("--out", default="mined_rules.txt")
    mi.set_defaults(func=cmd_mine)

    rv = sub.add_parser("review", help="print the summary, apply tester decisions, write final rules")
    rv.add_argument("--report", required=True)
    rv.add_argument("--decisions", default=None)
    rv.add_argument("--out", default="rules.txt")
    rv.set_defaults(func=cmd_review)

    g = sub.add_parser("gen-suite", help="emit the regression suite manifest")
    g.add_argument("--rules", required=True)
    g.add_argument("--corpus", required=True)
    g.add_argument("--mrs", default=None)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--out", default="suite.json")
    g.add_argument("--cases-per-rule", type=int,
                   default=int(_env("CASES_PER_RULE", str(refine.DEFAULT_CASES_PER_RULE))))
    g.add_argument("--render", default=None, help="also write assertion pseudocode here")
    g.add_argument("--include-advisory", action="store_true")
    g.set_defaults(func=cmd_gensuite)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except MRRefineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
