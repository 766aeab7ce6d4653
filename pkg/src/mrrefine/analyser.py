"""Log pre-processing, violation summary, default classification and tester feedback."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from mrrefine.arm import render_ratio
from mrrefine.errors import ConfigError, EmptyLogError
from mrrefine.harness import ExecutionRecord, format_value
from mrrefine.relations import MRSpec, Verdict, check_mr

DEFAULT_ATYPICAL_THRESHOLD = Fraction(1, 10)
DEFAULT_SAMPLE_SIZE = 5


class Classification(str, enum.Enum):
    FULL_MATCH = "FullMatch"
    NO_MATCH = "NoMatch"
    MIXED = "Mixed"
    FAULT = "Fault"


class IncludeAs(str, enum.Enum):
    POSITIVE_TEST = "PositiveTest"
    NEGATIVE_TEST = "NegativeTest"
    EXCLUDE = "Exclude"


@dataclass
class CleanLog:
    records: list[ExecutionRecord]
    dropped_duplicates: int = 0
    dropped_inconsistent: int = 0
    mr_ids: list[str] = field(default_factory=list)
    functions: list[str] = field(default_factory=list)


def _is_consistent(rec: ExecutionRecord, mrs: Sequence[MRSpec]) -> bool:
    if None in (rec.a, rec.b, rec.function, rec.source_out):
        return False
    for mr in mrs:
        out, verdict = rec.followup_outs.get(mr.id), rec.verdicts.get(mr.id)
        if out is None or verdict is None:
            return False
        if check_mr(mr.expected, rec.source_out, out) is not verdict:
            return False
    return True


def preprocess(log: Sequence[ExecutionRecord], mrs: Sequence[MRSpec]) -> CleanLog:
    """Drop repeated ``(id, function)`` rows (first wins), then rows that are
    incomplete or whose verdicts do not re-derive from their stored outputs."""
    if not log:
        raise EmptyLogError("log is empty")
    seen: set = set()
    unique = []
    for rec in log:
        if rec.key in seen:
            continue
        seen.add(rec.key)
        unique.append(rec)
    kept = [r for r in unique if _is_consistent(r, mrs)]
    if not kept:
        raise EmptyLogError("log is empty after cleaning")
    functions: list[str] = []
    for r in kept:
        if r.function not in functions:
            functions.append(r.function)
    return CleanLog(
        records=kept,
        dropped_duplicates=len(log) - len(unique),
        dropped_inconsistent=len(unique) - len(kept),
        mr_ids=[m.id for m in mrs],
        functions=functions,
    )


@dataclass(frozen=True)
class CellSummary:
    function: str
    mr: str
    total: int
    violated: int
    sample_violating: tuple = ()
    sample_nonviolating: tuple = ()

    @property
    def nonviolated(self) -> int:
        return self.total - self.violated

    @property
    def violated_pct(self) -> Fraction:
        return Fraction(self.violated, self.total)


@dataclass
class VerdictSummary:
    functions: list[str]
    mr_ids: list[str]
    cells: dict[tuple[str, str], CellSummary]

    def __getitem__(self, key: tuple[str, str]) -> CellSummary:
        return self.cells[key]

    def __iter__(self):
        for f in self.functions:
            for m in self.mr_ids:
                yield self.cells[(f, m)]


def _sample(rows: list[tuple], s: int, rng: np.random.Generator) -> tuple:
    if len(rows) <= s:
        return tuple(rows)
    picked = rng.choice(len(rows), size=s, replace=False)
    return tuple(rows[i] for i in sorted(picked))


def summarize(clean: CleanLog, sample_size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> VerdictSummary:
    if not clean.records:
        raise EmptyLogError("nothing to summarise")
    rows: dict[tuple[str, str], tuple[list, list]] = {
        (f, m): ([], []) for f in clean.functions for m in clean.mr_ids
    }
    for r in clean.records:
        for m in clean.mr_ids:
            bucket = rows[(r.function, m)][0 if r.verdicts[m] is Verdict.VIOLATED else 1]
            bucket.append((r.id, r.a, r.b))
    cells = {}
    root = np.random.SeedSequence(seed & (2**64 - 1))
    for n, (key, (bad, good)) in enumerate(rows.items()):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(root.entropy, spawn_key=(n,))))
        cells[key] = CellSummary(
            key[0], key[1], len(bad) + len(good), len(bad),
            _sample(bad, sample_size, rng), _sample(good, sample_size, rng),
        )
    return VerdictSummary(list(clean.functions), list(clean.mr_ids), cells)


@dataclass(frozen=True)
class FeedbackDecision:
    function: str
    mr: str
    classification: Classification
    include_as: Optional[IncludeAs]
    violated: int
    total: int
    atypical: bool = False
    overridden: bool = False

    @property
    def cell(self) -> str:
        return f"{self.function}.{self.mr}"


_DEFAULT_INCLUDE = {
    Classification.FULL_MATCH: IncludeAs.POSITIVE_TEST,
    Classification.NO_MATCH: IncludeAs.NEGATIVE_TEST,
    Classification.MIXED: None,
    Classification.FAULT: None,
}


def is_atypical(violated: int, total: int, threshold: Fraction) -> bool:
    pct = Fraction(violated, total)
    return (0 < pct <= threshold) or (1 - threshold <= pct < 1)


def classify(summary: VerdictSummary, atypical_threshold=DEFAULT_ATYPICAL_THRESHOLD) -> list[FeedbackDecision]:
    threshold = Fraction(str(atypical_threshold)) if isinstance(atypical_threshold, float) else Fraction(atypical_threshold)
    out = []
    for cell in summary:
        if cell.violated == 0:
            cls = Classification.FULL_MATCH
        elif cell.violated == cell.total:
            cls = Classification.NO_MATCH
        else:
            cls = Classification.MIXED
        out.append(FeedbackDecision(
            cell.function, cell.mr, cls, _DEFAULT_INCLUDE[cls], cell.violated, cell.total,
            atypical=is_atypical(cell.violated, cell.total, threshold),
        ))
    return out


_ALLOWED_INCLUDE = {
    Classification.FULL_MATCH: {IncludeAs.POSITIVE_TEST, IncludeAs.EXCLUDE},
    Classification.NO_MATCH: {IncludeAs.NEGATIVE_TEST, IncludeAs.EXCLUDE},
    Classification.MIXED: {None, IncludeAs.POSITIVE_TEST, IncludeAs.NEGATIVE_TEST, IncludeAs.EXCLUDE},
    Classification.FAULT: {None},
}


def _check_decision(d: FeedbackDecision) -> None:
    if d.classification is Classification.FULL_MATCH and d.violated != 0:
        raise ConfigError(f"{d.cell}: FullMatch needs 0% violations, cell has {d.violated}/{d.total}")
    if d.classification is Classification.NO_MATCH and d.violated != d.total:
        raise ConfigError(f"{d.cell}: NoMatch needs 100% violations, cell has {d.violated}/{d.total}")
    if d.classification is Classification.MIXED and d.violated in (0, d.total):
        raise ConfigError(f"{d.cell}: Mixed needs a violation rate strictly between 0 and 1")
    if d.include_as not in _ALLOWED_INCLUDE[d.classification]:
        raise ConfigError(f"{d.cell}: include_as {d.include_as} not allowed for {d.classification.value}")


def apply_feedback(defaults: Sequence[FeedbackDecision], overrides: Mapping[str, Any]) -> list[FeedbackDecision]:
    """Apply a cell-addressed decisions document on top of the defaults.

    Accepted shapes: ``{"decisions": {"mul.MR2": {...}}}`` or the inner mapping
    alone. Each entry may set ``classification`` and/or ``include_as``
    (``null`` clears it).
    """
    if not isinstance(overrides, Mapping):
        raise ConfigError("decisions document must be an object")
    entries = overrides.get("decisions", overrides)
    if not isinstance(entries, Mapping):
        raise ConfigError("'decisions' must map 'function.MR' to an object")
    by_cell = {d.cell: d for d in defaults}
    unknown = sorted(set(entries) - set(by_cell))
    if unknown:
        raise ConfigError(f"decisions reference unknown cells: {', '.join(unknown)}")

    result = []
    for d in defaults:
        entry = entries.get(d.cell)
        if entry is None:
            result.append(d)
            continue
        if not isinstance(entry, Mapping) or set(entry) - {"classification", "include_as", "note"}:
            raise ConfigError(f"{d.cell}: malformed decision {entry!r}")
        try:
            cls = Classification(entry["classification"]) if "classification" in entry else d.classification
            if "include_as" in entry:
                inc = IncludeAs(entry["include_as"]) if entry["include_as"] is not None else None
            elif cls is d.classification:
                inc = d.include_as
            else:
                inc = _DEFAULT_INCLUDE[cls]
        except ValueError as exc:
            raise ConfigError(f"{d.cell}: {exc}") from None
        new = replace(d, classification=cls, include_as=inc, overridden=True)
        _check_decision(new)
        result.append(new)
    return result


def fault_cells(decisions: Iterable[FeedbackDecision]) -> list[str]:
    return [d.cell for d in decisions if d.classification is Classification.FAULT]


def pct_display(violated: int, total: int) -> str:
    return render_ratio(Fraction(100 * violated, total), 1) + "%"


def render_table(summary: VerdictSummary, decisions: Optional[Sequence[FeedbackDecision]] = None) -> str:
    """Human-readable violation table, one row per function, one column per MR."""
    by_cell = {(d.function, d.mr): d for d in decisions or ()}
    width = max(14, *(len(m) + 2 for m in summary.mr_ids))
    lines = ["function  " + "".join(m.rjust(width) for m in summary.mr_ids)]
    for f in summary.functions:
        cols = []
        for m in summary.mr_ids:
            c = summary[(f, m)]
            text = pct_display(c.violated, c.total)
            d = by_cell.get((f, m))
            if d is not None:
                tag = {"FullMatch": "F", "NoMatch": "N", "Mixed": "M", "Fault": "X"}[d.classification.value]
                text += f" {tag}{'!' if d.atypical else ''}"
            cols.append(text.rjust(width))
        lines.append(f"{f:<10}" + "".join(cols))
    lines.append("violation rate per cell; F=FullMatch N=NoMatch M=Mixed X=Fault, !=atypical")
    return "\n".join(lines)


def cells_csv(summary: VerdictSummary) -> str:
    lines = ["function,mr,total,violated,nonviolated,violated_pct"]
    for c in summary:
        lines.append(f"{c.function},{c.mr},{c.total},{c.violated},{c.nonviolated},"
                     f"{pct_display(c.violated, c.total)[:-1]}")
    return "\n".join(lines) + "\n"


def sample_rows(rows: Iterable[tuple]) -> list[list[str]]:
    return [[str(i), format_value(a), format_value(b)] for i, a, b in rows]
