"""Summary report document: counts, default decisions, feature profiles and mined rules.

Ratios are stored as exact ``"num/den"`` strings next to their rendered form.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence

from mrrefine.analyser import (
    CellSummary,
    CleanLog,
    Classification,
    FeedbackDecision,
    IncludeAs,
    VerdictSummary,
    pct_display,
    sample_rows,
)
from mrrefine.arm import AssociationRule, format_itemset, parse_itemset
from mrrefine.errors import FormatError
from mrrefine.manifest import manifest_hash
from mrrefine.refine import PatternCount


def _ratio(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def rule_to_dict(r: AssociationRule) -> dict[str, str]:
    return {
        "lhs": format_itemset(r.lhs),
        "rhs": format_itemset(r.rhs),
        "support": _ratio(r.support),
        "confidence": _ratio(r.confidence),
        "lift": _ratio(r.lift),
        "rendered": r.render(),
    }


def rule_from_dict(d: Mapping[str, str]) -> AssociationRule:
    return AssociationRule(parse_itemset(d["lhs"]), parse_itemset(d["rhs"]), Fraction(d["support"]),
                           Fraction(d["confidence"]), Fraction(d["lift"]))


def build_report(
    clean: CleanLog,
    summary: VerdictSummary,
    decisions: Sequence[FeedbackDecision],
    profiles: Mapping[tuple[str, str], Sequence[PatternCount]],
    mined: Sequence[AssociationRule],
    manifest: Optional[dict[str, Any]] = None,
) -> dict[str, Any]:
    by_cell = {(d.function, d.mr): d for d in decisions}
    cells: dict[str, dict[str, Any]] = {}
    for c in summary:
        d = by_cell[(c.function, c.mr)]
        cells.setdefault(c.function, {})[c.mr] = {
            "total": c.total,
            "violated": c.violated,
            "nonviolated": c.nonviolated,
            "violated_pct": _ratio(c.violated_pct),
            "violated_pct_display": pct_display(c.violated, c.total),
            "classification": d.classification.value,
            "include_as": d.include_as.value if d.include_as else None,
            "atypical": d.atypical,
            "sample_violating": sample_rows(c.sample_violating),
            "sample_nonviolating": sample_rows(c.sample_nonviolating),
            "profile": [
                {"features": format_itemset(p.features), "violated": p.violated, "total": p.total}
                for p in profiles.get((c.function, c.mr), [])
            ],
        }
    doc: dict[str, Any] = {
        "cleaning": {
            "records": len(clean.records),
            "dropped_duplicates": clean.dropped_duplicates,
            "dropped_inconsistent": clean.dropped_inconsistent,
        },
        "functions": list(summary.functions),
        "mrs": list(summary.mr_ids),
        "cells": cells,
        "mined_rules": [rule_to_dict(r) for r in mined],
    }
    if manifest is not None:
        doc["manifest"] = manifest
        doc["manifest_sha256"] = manifest_hash(manifest)
    return doc


def dumps_report(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def loads_report(text: str) -> dict[str, Any]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"report is not JSON: {exc}") from None
    for key in ("functions", "mrs", "cells", "mined_rules"):
        if key not in doc:
            raise FormatError(f"report lacks {key!r}")
    return doc


def decisions_from_report(doc: Mapping[str, Any]) -> list[FeedbackDecision]:
    out = []
    for f in doc["functions"]:
        for m in doc["mrs"]:
            c = doc["cells"][f][m]
            out.append(FeedbackDecision(
                f, m, Classification(c["classification"]),
                IncludeAs(c["include_as"]) if c["include_as"] else None,
                c["violated"], c["total"], atypical=c["atypical"],
            ))
    return out


def profiles_from_report(doc: Mapping[str, Any]) -> dict[tuple[str, str], list[PatternCount]]:
    return {
        (f, m): [PatternCount(parse_itemset(p["features"]), p["violated"], p["total"])
                 for p in doc["cells"][f][m]["profile"]]
        for f in doc["functions"] for m in doc["mrs"]
    }


def mined_from_report(doc: Mapping[str, Any]) -> list[AssociationRule]:
    return [rule_from_dict(d) for d in doc["mined_rules"]]


def summary_from_report(doc: Mapping[str, Any]) -> VerdictSummary:
    cells = {}
    for f in doc["functions"]:
        for m in doc["mrs"]:
            c = doc["cells"][f][m]
            cells[(f, m)] = CellSummary(f, m, c["total"], c["violated"])
    return VerdictSummary(list(doc["functions"]), list(doc["mrs"]), cells)

