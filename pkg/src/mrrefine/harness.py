"""Runs source and follow-up executions against a SUT and writes the execution log."""

from __future__ import annotations

import csv
import enum
import io
import operator
import os
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from mrrefine.errors import (
    CampaignAborted,
    ConfigError,
    FormatError,
    SutError,
    SutOutputError,
    SutProcessError,
    UnknownFunctionError,
)
from mrrefine.fuzz import TestDatum
from mrrefine.relations import MRSpec, Value, Verdict, check_mr, transform_inputs

BUILTIN_FUNCTIONS: dict[str, Callable[[Value, Value], Value]] = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
}

PARTIAL_MARKER = "#PARTIAL"


class AdapterKind(str, enum.Enum):
    BUILTIN_CALCULATOR = "builtin"
    EXTERNAL_COMMAND = "cmd"


@dataclass(frozen=True)
class SutAdapter:
    kind: AdapterKind = AdapterKind.BUILTIN_CALCULATOR
    functions: tuple[str, ...] = ("add", "sub", "mul")
    command_template: Optional[str] = None
    timeout: Optional[float] = 30.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", AdapterKind(self.kind))
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.functions:
            raise ConfigError("adapter exposes no functions")
        if self.kind is AdapterKind.BUILTIN_CALCULATOR:
            if set(self.functions) - set(BUILTIN_FUNCTIONS):
                raise ConfigError(f"builtin calculator only provides {sorted(BUILTIN_FUNCTIONS)}")
        elif not self.command_template:
            raise ConfigError("external command adapter needs a command template")

    @classmethod
    def parse(cls, spec: str, functions: Optional[Sequence[str]] = None) -> "SutAdapter":
        """Parse ``builtin:calculator`` or ``cmd:<template>``."""
        funcs = tuple(functions) if functions else ("add", "sub", "mul")
        if spec == "builtin:calculator":
            return cls(AdapterKind.BUILTIN_CALCULATOR, funcs)
        if spec.startswith("cmd:") and spec[4:].strip():
            return cls(AdapterKind.EXTERNAL_COMMAND, funcs, spec[4:].strip())
        raise ConfigError(f"unknown SUT spec {spec!r} (expected builtin:calculator or cmd:<template>)")

    def describe(self) -> str:
        if self.kind is AdapterKind.BUILTIN_CALCULATOR:
            return "builtin:calculator"
        return f"cmd:{self.command_template}"

    def argv(self, function: str, a: Value, b: Value) -> list[str]:
        assert self.command_template is not None
        parts = shlex.split(self.command_template)
        fields = {"function": function, "a": format_value(a), "b": format_value(b)}
        if any("{" in p for p in parts):
            return [p.format(**fields) for p in parts]
        return parts + [fields["function"], fields["a"], fields["b"]]


@dataclass
class ExecutionRecord:
    id: int
    a: Optional[Value]
    b: Optional[Value]
    function: Optional[str]
    source_out: Optional[Value]
    followup_outs: dict[str, Optional[Value]] = field(default_factory=dict)
    verdicts: dict[str, Optional[Verdict]] = field(default_factory=dict)

    @property
    def key(self) -> tuple[int, Optional[str]]:
        return self.id, self.function


def format_value(v: Value) -> str:
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    return str(v)


def parse_value(text: str) -> Value:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a decimal number: {text!r}") from None
    return value.numerator if value.denominator == 1 else value


def execute_sut(
    adapter: SutAdapter, function: str, a: Value, b: Value, *, datum_id: Optional[int] = None
) -> Value:
    if function not in adapter.functions:
        raise UnknownFunctionError(
            f"function {function!r} not exposed by {adapter.describe()} (input id {datum_id})",
            function=function, datum_id=datum_id,
        )
    if adapter.kind is AdapterKind.BUILTIN_CALCULATOR:
        return BUILTIN_FUNCTIONS[function](a, b)

    argv = adapter.argv(function, a, b)
    ctx = f"{function}({format_value(a)}, {format_value(b)}), input id {datum_id}"
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=adapter.timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise SutProcessError(f"could not run {argv[0]!r} for {ctx}: {exc}",
                              function=function, datum_id=datum_id) from exc
    if proc.returncode != 0:
        raise SutProcessError(
            f"SUT exited with status {proc.returncode} for {ctx}: {proc.stderr.strip()}",
            function=function, datum_id=datum_id,
        )
    try:
        return parse_value(proc.stdout)
    except ValueError:
        raise SutOutputError(f"unparseable SUT output {proc.stdout!r} for {ctx}",
                             function=function, datum_id=datum_id) from None


def execute_record(datum: TestDatum, function: str, mrs: Sequence[MRSpec], adapter: SutAdapter) -> ExecutionRecord:
    source = execute_sut(adapter, function, datum.a, datum.b, datum_id=datum.id)
    rec = ExecutionRecord(datum.id, datum.a, datum.b, function, source)
    for mr in mrs:
        ta, tb = transform_inputs(mr.transformation, datum.a, datum.b, mr_id=mr.id, datum_id=datum.id)
        follow = execute_sut(adapter, function, ta, tb, datum_id=datum.id)
        rec.followup_outs[mr.id] = follow
        rec.verdicts[mr.id] = check_mr(mr.expected, source, follow)
    return rec


def run_campaign(
    corpus: Sequence[TestDatum],
    mrs: Sequence[MRSpec],
    adapter: SutAdapter,
    jobs: int = 1,
) -> list[ExecutionRecord]:
    """Execute every function on every datum and check every MR.

    Records come back ordered by (datum id, adapter function order) whatever
    ``jobs`` is. On the first SUT failure (in that order) :class:`CampaignAborted`
    is raised carrying the records that precede it.
    """
    if not corpus:
        raise ConfigError("corpus is empty")
    if not mrs:
        raise ConfigError("MR set is empty")
    tasks = [(d, f) for d in corpus for f in adapter.functions]

    if jobs <= 1:
        done: list[ExecutionRecord] = []
        for d, f in tasks:
            try:
                done.append(execute_record(d, f, mrs, adapter))
            except (SutError, OverflowError) as exc:
                raise CampaignAborted(exc, done) from exc
        return done

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(execute_record, d, f, mrs, adapter) for d, f in tasks]
        done = []
        for fut in futures:
            try:
                done.append(fut.result())
            except (SutError, OverflowError) as exc:
                for pending in futures:
                    pending.cancel()
                raise CampaignAborted(exc, done) from exc
    return done


def rederive(record: ExecutionRecord, mrs: Sequence[MRSpec]) -> dict[str, Verdict]:
    return {mr.id: check_mr(mr.expected, record.source_out, record.followup_outs[mr.id]) for mr in mrs}


def log_header(mr_ids: Iterable[str]) -> list[str]:
    header = ["id", "a", "b", "function", "source_out"]
    for m in mr_ids:
        header += [f"{m}_followup_out", f"{m}_verdict"]
    return header


def dumps_log(records: Iterable[ExecutionRecord], mr_ids: Sequence[str], partial: Optional[str] = None) -> str:
    out = [",".join(log_header(mr_ids))]

    def cell(v) -> str:
        if v is None:
            return ""
        if isinstance(v, Verdict):
            return v.short
        return format_value(v) if not isinstance(v, str) else v

    for r in records:
        row = [str(r.id), cell(r.a), cell(r.b), cell(r.function), cell(r.source_out)]
        for m in mr_ids:
            row += [cell(r.followup_outs.get(m)), cell(r.verdicts.get(m))]
        out.append(",".join(row))
    if partial is not None:
        out.append(f"{PARTIAL_MARKER} {partial}")
    return "\n".join(out) + "\n"


def write_log(records, mr_ids, path: Union[str, Path], partial: Optional[str] = None) -> None:
    Path(path).write_text(dumps_log(records, mr_ids, partial))


def loads_log(text: str, allow_partial: bool = False) -> tuple[list[ExecutionRecord], list[str]]:
    """Parse a log. Blank cells load as ``None`` so pre-processing can see them."""
    lines = text.splitlines()
    if lines and lines[-1].startswith(PARTIAL_MARKER):
        if not allow_partial:
            raise FormatError(f"log is partial: {lines[-1][len(PARTIAL_MARKER):].strip()}")
        lines = lines[:-1]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader, None)
    if not header or header[:5] != ["id", "a", "b", "function", "source_out"] or (len(header) - 5) % 2:
        raise FormatError(f"unexpected log header {header!r}")
    mr_ids = []
    for i in range(5, len(header), 2):
        out_col, verdict_col = header[i], header[i + 1]
        mr = out_col.removesuffix("_followup_out")
        if out_col == mr or verdict_col != f"{mr}_verdict":
            raise FormatError(f"bad MR columns {out_col!r}, {verdict_col!r}")
        mr_ids.append(mr)

    def val(s: str):
        return parse_value(s) if s.strip() else None

    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"log line {lineno}: {len(row)} fields, header has {len(header)}")
        try:
            rec = ExecutionRecord(int(row[0]), val(row[1]), val(row[2]), row[3] or None, val(row[4]))
            for j, m in enumerate(mr_ids):
                rec.followup_outs[m] = val(row[5 + 2 * j])
                token = row[6 + 2 * j]
                rec.verdicts[m] = Verdict.from_token(token) if token.strip() else None
        except ValueError as exc:
            raise FormatError(f"log line {lineno}: {exc}") from None
        records.append(rec)
    return records, mr_ids


def read_log(path: Union[str, Path], allow_partial: bool = False):
    return loads_log(Path(path).read_text(), allow_partial)


def default_jobs() -> int:
    return os.cpu_count() or 1
