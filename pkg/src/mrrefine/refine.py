"""Feature encoding, per-cell mining, final rule set and the regression suite."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

from mrrefine.analyser import Classification, CleanLog, FeedbackDecision, IncludeAs, fault_cells
from mrrefine.arm import (
    AssociationRule,
    Item,
    Transaction,
    apriori_frequent,
    derive_rules,
    format_itemset,
    parse_itemset,
    render_ratio,
)
from mrrefine.errors import BlockedCampaignError, ConfigError, FormatError, UnsatisfiableConditionError
from mrrefine.fuzz import TestDatum
from mrrefine.harness import SutAdapter, execute_sut
from mrrefine.relations import (
    MRSpec,
    OutputRelation,
    TransformKind,
    Value,
    Verdict,
    check_mr,
    mr_set_from_dict,
    transform_inputs,
)

log = logging.getLogger(__name__)

FUNC_KEY = "func"
DEFAULT_CASES_PER_RULE = 5


class Feature(str, enum.Enum):
    PAIR_RELATION = "PairRelation"
    ZERO_FLAGS = "ZeroFlags"


def _bool(v: bool) -> str:
    return "true" if v else "false"


def pair_relation(a: Value, b: Value) -> str:
    return "lt" if a < b else "gt" if a > b else "eq"


def all_features(a: Value, b: Value) -> dict[str, str]:
    return {
        "rel": pair_relation(a, b),
        "a_zero": _bool(a == 0),
        "b_zero": _bool(b == 0),
        "both_zero": _bool(a == 0 and b == 0),
    }


_FEATURE_KEYS = {
    Feature.PAIR_RELATION: ("rel",),
    Feature.ZERO_FLAGS: ("a_zero", "b_zero", "both_zero"),
}


@dataclass(frozen=True)
class FeatureEncoder:
    enabled: frozenset = frozenset({Feature.PAIR_RELATION, Feature.ZERO_FLAGS})

    def __post_init__(self) -> None:
        object.__setattr__(self, "enabled", frozenset(Feature(f) for f in self.enabled))

    @classmethod
    def parse(cls, text: str) -> "FeatureEncoder":
        """``"PairRelation,ZeroFlags"`` (case-insensitive; ``rel``/``zero`` also work)."""
        aliases = {"pairrelation": Feature.PAIR_RELATION, "rel": Feature.PAIR_RELATION,
                   "zeroflags": Feature.ZERO_FLAGS, "zero": Feature.ZERO_FLAGS}
        names = [t.strip().lower() for t in text.split(",") if t.strip()]
        try:
            return cls(frozenset(aliases[n] for n in names))
        except KeyError as exc:
            raise ConfigError(f"unknown feature {exc.args[0]!r}") from None

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(k for f in (Feature.PAIR_RELATION, Feature.ZERO_FLAGS) if f in self.enabled
                     for k in _FEATURE_KEYS[f])

    def features(self, a: Value, b: Value) -> frozenset:
        feats = all_features(a, b)
        return frozenset(Item(k, feats[k]) for k in self.keys)

    def describe(self) -> str:
        return ",".join(sorted(f.value for f in self.enabled))


def func_item(function: str) -> Item:
    return Item(FUNC_KEY, function.upper())


def encode(
    clean: CleanLog, mr: str, encoder: FeatureEncoder, function: Optional[str] = None
) -> list[Transaction]:
    """One transaction per record: features, the function item and the verdict item.

    ``function`` restricts the database to one function's records.
    """
    out = []
    for r in clean.records:
        if function is not None and r.function != function:
            continue
        verdict = r.verdicts[mr]
        items = encoder.features(r.a, r.b) | {func_item(r.function), Item(mr, verdict.value)}
        out.append(Transaction(items))
    return out


def mixed_cells(clean: CleanLog) -> list[tuple[str, str]]:
    counts: dict[tuple[str, str], list[int]] = {}
    for r in clean.records:
        for m in clean.mr_ids:
            c = counts.setdefault((r.function, m), [0, 0])
            c[0] += r.verdicts[m] is Verdict.VIOLATED
            c[1] += 1
    return [cell for cell, (v, t) in counts.items() if 0 < v < t]


def mine_all(
    clean: CleanLog,
    mrs: Sequence[MRSpec],
    encoder: FeatureEncoder,
    min_support,
    min_confidence,
    decisions: Optional[Sequence[FeedbackDecision]] = None,
) -> list[AssociationRule]:
    """Mine every Mixed (function, MR) cell on its own transaction database.

    Without ``decisions`` the Mixed cells are read straight off the log.
    Rules always name the function on their left-hand side.
    """
    if decisions is None:
        cells = set(mixed_cells(clean))
    else:
        cells = {(d.function, d.mr) for d in decisions
                 if d.classification is Classification.MIXED and d.include_as is not IncludeAs.EXCLUDE}
    rules: list[AssociationRule] = []
    for mr in mrs:
        for function in clean.functions:
            if (function, mr.id) not in cells:
                continue
            db = encode(clean, mr.id, encoder, function)
            frequent = apriori_frequent(db, min_support)
            rules.extend(derive_rules(frequent, min_confidence, {mr.id}, lhs_required={FUNC_KEY}))
    return rules


@dataclass(frozen=True)
class PatternCount:
    features: frozenset
    violated: int
    total: int


def cell_profiles(clean: CleanLog, encoder: FeatureEncoder) -> dict[tuple[str, str], list[PatternCount]]:
    """Per cell, how often each distinct feature pattern violated the MR."""
    acc: dict[tuple[str, str], dict[frozenset, list[int]]] = {}
    for r in clean.records:
        feats = encoder.features(r.a, r.b)
        for m in clean.mr_ids:
            c = acc.setdefault((r.function, m), {}).setdefault(feats, [0, 0])
            c[0] += r.verdicts[m] is Verdict.VIOLATED
            c[1] += 1
    return {
        cell: [PatternCount(f, v, t) for f, (v, t) in sorted(pats.items(), key=lambda kv: sorted(kv[0]))]
        for cell, pats in acc.items()
    }


class Provenance(str, enum.Enum):
    MINED = "mined"
    FEEDBACK = "feedback"


@dataclass(frozen=True)
class RefinedRule:
    condition: frozenset
    mr: str
    polarity: IncludeAs
    provenance: Provenance
    exclusions: tuple = ()
    metrics: Optional[tuple[str, str, str]] = None  # rendered support, confidence, lift
    advisory: bool = False

    @property
    def function(self) -> str:
        for it in self.condition:
            if it.key == FUNC_KEY:
                return it.value.lower()
        raise ConfigError(f"rule condition {format_itemset(self.condition)} names no function")

    @property
    def verdict(self) -> Verdict:
        return Verdict.NOT_VIOLATED if self.polarity is IncludeAs.POSITIVE_TEST else Verdict.VIOLATED

    @property
    def identity(self) -> tuple:
        return (format_itemset(self.condition), self.exclusions_text(), self.mr, self.polarity.value)

    def exclusions_text(self) -> str:
        return " & ".join(f"!({format_itemset(e)})" for e in self.exclusions)

    def condition_text(self) -> str:
        text = format_itemset(self.condition)
        return f"{text} & {self.exclusions_text()}" if self.exclusions else text

    def sort_key(self) -> tuple:
        return (self.function, self.mr, self.provenance is Provenance.MINED, self.polarity.value,
                self.condition_text())

    def matches(self, function: str, a: Value, b: Value) -> bool:
        return condition_holds(self.condition, self.exclusions, function, a, b)


def _itemset_holds(items: Iterable[Item], function: str, feats: Mapping[str, str]) -> bool:
    for it in items:
        if it.key == FUNC_KEY:
            if it.value != function.upper():
                return False
        elif it.key not in feats:
            raise ConfigError(f"unknown condition attribute {it.key!r}")
        elif feats[it.key] != it.value:
            return False
    return True


def condition_holds(condition: Iterable[Item], exclusions: Iterable, function: str, a: Value, b: Value) -> bool:
    feats = all_features(a, b)
    if not _itemset_holds(condition, function, feats):
        return False
    return not any(_itemset_holds(e, function, feats) for e in exclusions)


def _rank(rule: RefinedRule) -> tuple:
    # feedback beats mined; then exact beats advisory; then support, confidence
    if rule.provenance is Provenance.FEEDBACK:
        return (2, 0, "", "")
    sup, conf, _ = rule.metrics or ("0", "0", "0")
    return (1, 0 if rule.advisory else 1, conf, sup)


def finalize_rules(
    mined: Sequence[AssociationRule],
    decisions: Sequence[FeedbackDecision],
    profiles: Optional[Mapping[tuple[str, str], Sequence[PatternCount]]] = None,
) -> list[RefinedRule]:
    """Merge tester decisions and mined rules into the final rule set.

    FullMatch / NoMatch cells become unconditional positive / negative rules.
    A Mixed cell the tester routed to PositiveTest (or NegativeTest) becomes a
    rule guarded by the feature patterns that disagree, plus opposite-polarity
    rules for patterns that disagree on every record; ``profiles`` supplies
    those patterns.
    """
    blocked = fault_cells(decisions)
    if blocked:
        raise BlockedCampaignError(f"campaign blocked by Fault decision on {', '.join(blocked)}")

    by_func = {d.function.upper(): d.function for d in decisions}
    excluded = {(d.function, d.mr) for d in decisions if d.include_as is IncludeAs.EXCLUDE}
    out: list[RefinedRule] = []

    for d in decisions:
        cond = frozenset([func_item(d.function)])
        if d.include_as is None or d.include_as is IncludeAs.EXCLUDE:
            continue
        if d.classification in (Classification.FULL_MATCH, Classification.NO_MATCH):
            out.append(RefinedRule(cond, d.mr, d.include_as, Provenance.FEEDBACK))
            continue
        # Mixed cell resolved by the tester
        if profiles is None or (d.function, d.mr) not in profiles:
            raise ConfigError(f"{d.cell}: a feature profile is needed to guard a Mixed cell")
        want_violated = d.include_as is IncludeAs.NEGATIVE_TEST
        opposite = IncludeAs.POSITIVE_TEST if want_violated else IncludeAs.NEGATIVE_TEST
        guards = []
        for p in profiles[(d.function, d.mr)]:
            agreeing = p.violated if want_violated else p.total - p.violated
            if agreeing == p.total:
                continue
            guards.append(p.features)
            if agreeing == 0:
                out.append(RefinedRule(cond | p.features, d.mr, opposite, Provenance.FEEDBACK))
            else:
                log.warning("%s: pattern %s is itself mixed; excluded without a counter-rule",
                            d.cell, format_itemset(p.features))
        guards.sort(key=sorted)
        out.append(RefinedRule(cond, d.mr, d.include_as, Provenance.FEEDBACK, tuple(guards)))

    for r in mined:
        (verdict_item,) = r.rhs
        funcs = [i.value for i in r.lhs if i.key == FUNC_KEY]
        if len(funcs) != 1 or funcs[0] not in by_func:
            raise ConfigError(f"mined rule {r.render()} does not name a known function")
        if (by_func[funcs[0]], verdict_item.key) in excluded:
            continue
        verdict = Verdict(verdict_item.value)
        polarity = IncludeAs.POSITIVE_TEST if verdict is Verdict.NOT_VIOLATED else IncludeAs.NEGATIVE_TEST
        metrics = (render_ratio(r.support), render_ratio(r.confidence), render_ratio(r.lift))
        out.append(RefinedRule(r.lhs, verdict_item.key, polarity, Provenance.MINED,
                               metrics=metrics, advisory=r.confidence < 1))

    merged: dict[tuple, RefinedRule] = {}
    for rule in sorted(out, key=RefinedRule.sort_key):
        prev = merged.get(rule.identity)
        if prev is None or _rank(rule) > _rank(prev):
            merged[rule.identity] = rule
    return sorted(merged.values(), key=RefinedRule.sort_key)


# -- rules file --------------------------------------------------------------

FINAL_RULES_HEADER = "# condition | rhs | support | confidence | lift | provenance"
BLOCKED_MARKER = "#BLOCKED"


def dumps_final_rules(rules: Iterable[RefinedRule], comments: Sequence[str] = (),
                      blocked: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    if blocked:
        lines.append(f"{BLOCKED_MARKER} {','.join(blocked)}")
    lines.append(FINAL_RULES_HEADER)
    for r in rules:
        sup, conf, lift = r.metrics or ("-", "-", "-")
        prov = r.provenance.value + (":advisory" if r.advisory else "")
        lines.append(" | ".join([r.condition_text(), f"{r.mr}={r.verdict.value}", sup, conf, lift, prov]))
    return "\n".join(lines) + "\n"


def loads_final_rules(text: str) -> tuple[list[RefinedRule], list[str]]:
    """Returns ``(rules, blocked_cells)``."""
    rules, blocked = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith(BLOCKED_MARKER):
            blocked.extend(c for c in line[len(BLOCKED_MARKER):].strip().split(",") if c)
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 6:
            raise FormatError(f"rules line {lineno}: expected 6 fields, got {len(parts)}")
        cond_text, rhs, sup, conf, lift, prov = parts
        try:
            chunks = [c.strip() for c in cond_text.split("&")]
            condition = parse_itemset(chunks[0])
            exclusions = []
            for c in chunks[1:]:
                if not (c.startswith("!(") and c.endswith(")")):
                    raise ValueError(f"bad exclusion {c!r}")
                exclusions.append(parse_itemset(c[2:-1]))
            (verdict_item,) = parse_itemset(rhs)
            verdict = Verdict(verdict_item.value)
            provenance, _, flag = prov.partition(":")
            rules.append(RefinedRule(
                condition, verdict_item.key,
                IncludeAs.POSITIVE_TEST if verdict is Verdict.NOT_VIOLATED else IncludeAs.NEGATIVE_TEST,
                Provenance(provenance), tuple(exclusions),
                None if sup == "-" else (sup, conf, lift),
                advisory=flag == "advisory",
            ))
        except ValueError as exc:
            raise FormatError(f"rules line {lineno}: {exc}") from None
    return rules, blocked


# -- suite -------------------------------------------------------------------

def _predicate(mr: MRSpec, function: str, a: str = "a", b: str = "b") -> str:
    t = mr.transformation
    if t.kind is TransformKind.PERMUTE:
        follow = f"{function}({b}, {a})"
    else:
        op = {TransformKind.MULTIPLY_EACH_BY_K: "*", TransformKind.ADD_K_TO_EACH: "+",
              TransformKind.SUBTRACT_K_FROM_EACH: "-"}[t.kind]
        follow = f"{function}({a} {op} {t.k}, {b} {op} {t.k})"
    rel = "==" if mr.expected is OutputRelation.REMAIN_EQUAL else "<"
    return f"{function}({a}, {b}) {rel} {follow}"


def _synthetic_inputs(rule: RefinedRule, domain: tuple[int, int], limit: int) -> list[tuple[int, int]]:
    lo, hi = domain
    mid = (lo + hi) // 2
    pool = sorted({v for v in (mid, mid + 1, lo, hi, 0, 1, lo + 1, hi - 1) if lo <= v <= hi})
    found = [(x, y) for x in pool for y in pool if rule.matches(rule.function, x, y)]
    if not found:
        raise UnsatisfiableConditionError(
            f"no input in [{lo}, {hi}]^2 satisfies {rule.condition_text()}")
    # midpoint-first, so rel=eq yields (mid, mid)
    found.sort(key=lambda p: (abs(p[0] - mid) + abs(p[1] - mid), p))
    return found[:limit]


def _test_name(rule: RefinedRule) -> str:
    parts = [i for i in sorted(rule.condition) if i.key != FUNC_KEY]
    cond = "_".join(f"{i.key}-{i.value}" for i in parts) or "all"
    if rule.exclusions:
        cond += f"_guarded{len(rule.exclusions)}"
    kind = "positive" if rule.polarity is IncludeAs.POSITIVE_TEST else "negative"
    return f"test_{rule.function}_{rule.mr}_{kind}_{cond}"


@dataclass
class TestSuiteManifest:
    __test__ = False

    suite_id: str
    campaign: dict[str, Any]
    mrs: list[dict[str, Any]]
    tests: list[dict[str, Any]]
    selection_policy: str = "corpus inputs satisfying the condition, lowest id first, repeated pairs skipped"
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "campaign": self.campaign,
            "mrs": self.mrs,
            "selection_policy": self.selection_policy,
            "suite_id": self.suite_id,
            "tests": self.tests,
            "warnings": self.warnings,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "TestSuiteManifest":
        try:
            return cls(doc["suite_id"], dict(doc["campaign"]), list(doc["mrs"]), list(doc["tests"]),
                       doc["selection_policy"], list(doc.get("warnings", [])))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed suite manifest: {exc}") from None

    @classmethod
    def loads(cls, text: str) -> "TestSuiteManifest":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FormatError(f"suite manifest is not JSON: {exc}") from None

    def mr_specs(self) -> dict[str, MRSpec]:
        return {m.id: m for m in mr_set_from_dict({"mrs": self.mrs})}


def generate_suite(
    rules: Sequence[RefinedRule],
    corpus: Sequence[TestDatum],
    mrs: Sequence[MRSpec],
    per_rule_cases: int = DEFAULT_CASES_PER_RULE,
    *,
    campaign: Optional[Mapping[str, Any]] = None,
    domain: Optional[tuple[int, int]] = None,
    include_advisory: bool = False,
) -> TestSuiteManifest:
    """Turn each rule into a regression test backed by concrete corpus inputs.

    Advisory (confidence below 1) rules are skipped unless ``include_advisory``.
    When the corpus has no input for a rule, synthetic inputs from ``domain``
    (default: the corpus range) are used and a warning recorded.
    """
    if not rules:
        raise ConfigError("no rules to build a suite from")
    if per_rule_cases < 0:
        raise ConfigError("per_rule_cases must be >= 0")
    by_id = {m.id: m for m in mrs}
    if domain is None and corpus:
        values = [v for d in corpus for v in (d.a, d.b)]
        domain = (min(values), max(values))
    warnings = []
    tests = []
    for rule in rules:
        if rule.advisory and not include_advisory:
            continue
        if rule.mr not in by_id:
            raise ConfigError(f"rule refers to unknown MR {rule.mr!r}")
        mr, function = by_id[rule.mr], rule.function
        inputs: list[tuple[int, int]] = []
        if per_rule_cases:
            seen = set()
            for d in corpus:
                if len(inputs) == per_rule_cases:
                    break
                if (d.a, d.b) not in seen and rule.matches(function, d.a, d.b):
                    seen.add((d.a, d.b))
                    inputs.append((d.a, d.b))
            if not inputs:
                if domain is None:
                    raise UnsatisfiableConditionError(f"no corpus and no domain for {rule.condition_text()}")
                inputs = _synthetic_inputs(rule, domain, per_rule_cases)
                msg = f"{_test_name(rule)}: no corpus input matches; using synthetic inputs {inputs}"
                log.warning(msg)
                warnings.append(msg)
        positive = rule.polarity is IncludeAs.POSITIVE_TEST
        tests.append({
            "name": _test_name(rule),
            "function": function,
            "mr": rule.mr,
            "polarity": rule.polarity.value,
            "input_condition": rule.condition_text(),
            "concrete_inputs": [list(p) for p in inputs],
            "expected_check": {
                "predicate": _predicate(mr, function),
                "expect": "holds" if positive else "fails",
                "relation": mr.expected.value,
                "transformation": mr.transformation.kind.value,
                "k": mr.transformation.k,
            },
            "provenance": {
                "source": rule.provenance.value,
                "support": rule.metrics[0] if rule.metrics else None,
                "confidence": rule.metrics[1] if rule.metrics else None,
                "lift": rule.metrics[2] if rule.metrics else None,
                "advisory": rule.advisory,
            },
        })
    seen_names: dict[str, int] = {}
    for t in tests:
        n = seen_names.get(t["name"], 0)
        seen_names[t["name"]] = n + 1
        if n:
            t["name"] += f"_{n + 1}"
    digest = hashlib.sha256(json.dumps(tests, sort_keys=True).encode()).hexdigest()[:16]
    return TestSuiteManifest(
        suite_id=f"suite-{digest}",
        campaign=dict(campaign or {}),
        mrs=[m.to_dict() for m in mrs if m.id in {t["mr"] for t in tests}],
        tests=tests,
        warnings=warnings,
    )


def render_suite_text(manifest: TestSuiteManifest) -> str:
    """Assertion pseudocode, one block per test."""
    lines = [f"# regression suite {manifest.suite_id}"]
    for t in manifest.tests:
        lines.append("")
        lines.append(f"{t['name']}:  # {t['polarity']}, {t['provenance']['source']}")
        lines.append(f"  given {t['input_condition']}")
        pred = t["expected_check"]["predicate"]
        check = pred if t["expected_check"]["expect"] == "holds" else f"not ({pred})"
        if t["concrete_inputs"]:
            pairs = ", ".join(f"({a}, {b})" for a, b in t["concrete_inputs"])
            lines.append(f"  for (a, b) in [{pairs}]:")
            lines.append(f"    assert {check}")
        else:
            lines.append(f"  assert {check}  # no concrete inputs selected")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Counterexample:
    test: str
    a: Value
    b: Value
    verdict: Verdict


def verify_suite(
    manifest: TestSuiteManifest,
    adapter: SutAdapter,
    corpus: Sequence[TestDatum] = (),
) -> list[Counterexample]:
    """Re-run each test on its concrete inputs and every matching corpus input.

    Returns the inputs whose verdict disagrees with the test's polarity.
    """
    mrs = manifest.mr_specs()
    bad = []
    for t in manifest.tests:
        mr = mrs[t["mr"]]
        rule_like = _test_condition(t)
        inputs = [tuple(p) for p in t["concrete_inputs"]]
        inputs += [(d.a, d.b) for d in corpus if condition_holds(*rule_like, t["function"], d.a, d.b)]
        want = Verdict.NOT_VIOLATED if t["polarity"] == IncludeAs.POSITIVE_TEST.value else Verdict.VIOLATED
        for a, b in inputs:
            src = execute_sut(adapter, t["function"], a, b)
            fa, fb = transform_inputs(mr.transformation, a, b, mr_id=mr.id)
            got = check_mr(mr.expected, src, execute_sut(adapter, t["function"], fa, fb))
            if got is not want:
                bad.append(Counterexample(t["name"], a, b, got))
    return bad


def _test_condition(test: Mapping[str, Any]) -> tuple[frozenset, tuple]:
    chunks = [c.strip() for c in test["input_condition"].split("&")]
    return parse_itemset(chunks[0]), tuple(parse_itemset(c[2:-1]) for c in chunks[1:])
