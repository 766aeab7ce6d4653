"""Metamorphic relations: input transformations, output relations and the checker.

Values are plain Python ints (or exact ``Fraction`` when an external SUT
prints a non-integer), so the checker path never rounds.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from mrrefine.errors import ConfigError, ValueOverflowError

Value = Union[int, Fraction]

# Transformed operands must stay inside signed 64-bit range.
VALUE_MIN = -(2**63)
VALUE_MAX = 2**63 - 1


class TransformKind(str, enum.Enum):
    PERMUTE = "Permute"
    MULTIPLY_EACH_BY_K = "MultiplyEachByK"
    ADD_K_TO_EACH = "AddKToEach"
    SUBTRACT_K_FROM_EACH = "SubtractKFromEach"


class OutputRelation(str, enum.Enum):
    REMAIN_EQUAL = "RemainEqual"
    INCREASE = "Increase"


class Verdict(str, enum.Enum):
    NOT_VIOLATED = "NotViolated"
    VIOLATED = "Violated"

    @property
    def short(self) -> str:
        """Two-letter log token (``NV`` / ``V``)."""
        return "NV" if self is Verdict.NOT_VIOLATED else "V"

    @classmethod
    def from_token(cls, token: str) -> "Verdict":
        token = token.strip()
        for v in cls:
            if token in (v.short, v.value):
                return v
        raise ValueError(f"unknown verdict token {token!r}")


@dataclass(frozen=True)
class Transformation:
    kind: TransformKind
    k: Optional[int] = None

    def __post_init__(self) -> None:
        kind = TransformKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is TransformKind.PERMUTE:
            if self.k is not None:
                raise ConfigError("Permute takes no constant k")
            return
        if self.k is None or isinstance(self.k, bool) or not isinstance(self.k, int):
            raise ConfigError(f"{kind.value} requires an integer constant k, got {self.k!r}")
        if kind is TransformKind.MULTIPLY_EACH_BY_K and self.k <= 1:
            raise ConfigError(f"MultiplyEachByK requires k > 1, got k={self.k}")
        if self.k <= 0:
            raise ConfigError(f"{kind.value} requires a positive k, got k={self.k}")

    def describe(self) -> str:
        if self.kind is TransformKind.PERMUTE:
            return "(b, a)"
        op = {
            TransformKind.MULTIPLY_EACH_BY_K: "*",
            TransformKind.ADD_K_TO_EACH: "+",
            TransformKind.SUBTRACT_K_FROM_EACH: "-",
        }[self.kind]
        return f"(a {op} {self.k}, b {op} {self.k})"


@dataclass(frozen=True)
class MRSpec:
    id: str
    transformation: Transformation
    expected: OutputRelation
    description: str = ""

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "transformation": self.transformation.kind.value,
            "expected": self.expected.value,
            "description": self.description,
        }
        if self.transformation.k is not None:
            d["k"] = self.transformation.k
        return d


def _checked(value: Value, mr_id: Optional[str], datum_id: Optional[int]) -> Value:
    if not VALUE_MIN <= value <= VALUE_MAX:
        where = f"MR {mr_id or '?'}, input id {datum_id if datum_id is not None else '?'}"
        raise ValueOverflowError(f"transformed value {value} out of 64-bit range ({where})")
    return value


def transform_inputs(
    t: Transformation,
    a: Value,
    b: Value,
    *,
    mr_id: Optional[str] = None,
    datum_id: Optional[int] = None,
) -> tuple[Value, Value]:
    """Apply ``t`` to the operand pair and return the follow-up pair.

    ``mr_id`` and ``datum_id`` only feed the overflow error message.
    """
    kind = t.kind
    if kind is TransformKind.PERMUTE:
        return b, a
    k = t.k
    assert k is not None
    if kind is TransformKind.MULTIPLY_EACH_BY_K:
        pair = (a * k, b * k)
    elif kind is TransformKind.ADD_K_TO_EACH:
        pair = (a + k, b + k)
    else:
        pair = (a - k, b - k)
    return _checked(pair[0], mr_id, datum_id), _checked(pair[1], mr_id, datum_id)


def check_mr(expected: OutputRelation, source_out: Value, followup_out: Value) -> Verdict:
    if expected is OutputRelation.REMAIN_EQUAL:
        holds = source_out == followup_out
    else:
        holds = source_out < followup_out
    return Verdict.NOT_VIOLATED if holds else Verdict.VIOLATED


def default_mr_set(k: int) -> list[MRSpec]:
    """The four arithmetic relations sharing one campaign constant ``k``."""
    return [
        MRSpec("MR1", Transformation(TransformKind.PERMUTE), OutputRelation.REMAIN_EQUAL,
               "Permute the inputs"),
        MRSpec("MR2", Transformation(TransformKind.MULTIPLY_EACH_BY_K, k), OutputRelation.INCREASE,
               "Multiply each operand by a constant k > 1"),
        MRSpec("MR3", Transformation(TransformKind.ADD_K_TO_EACH, k), OutputRelation.REMAIN_EQUAL,
               "Add a positive constant k to each operand"),
        MRSpec("MR4", Transformation(TransformKind.SUBTRACT_K_FROM_EACH, k), OutputRelation.REMAIN_EQUAL,
               "Subtract a positive constant k from each operand"),
    ]


def validate_mr_set(mrs: Iterable[MRSpec]) -> list[MRSpec]:
    mrs = list(mrs)
    if not mrs:
        raise ConfigError("MR set is empty")
    seen: set[str] = set()
    for mr in mrs:
        if not mr.id or any(c in mr.id for c in ",|=_ \t"):
            raise ConfigError(f"invalid MR id {mr.id!r}")
        if mr.id in seen:
            raise ConfigError(f"duplicate MR id {mr.id!r}")
        seen.add(mr.id)
    return mrs


def mr_set_from_dict(doc: dict[str, Any], k: Optional[int] = None) -> list[MRSpec]:
    """Build an MR set from a config tree.

    Layout::

        {"k": 5, "mrs": [{"id": "MR1", "transformation": "Permute",
                          "expected": "RemainEqual", "description": "..."}]}

    A per-entry ``k`` wins over the document-level one, which wins over ``k``.
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("mrs"), list):
        raise ConfigError("MR document must be an object with an 'mrs' list")
    shared_k = doc.get("k", k)
    out = []
    for entry in doc["mrs"]:
        try:
            kind = TransformKind(entry["transformation"])
            expected = OutputRelation(entry["expected"])
            mr_id = str(entry["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed MR entry {entry!r}: {exc}") from None
        entry_k = None if kind is TransformKind.PERMUTE else entry.get("k", shared_k)
        out.append(MRSpec(mr_id, Transformation(kind, entry_k), expected,
                          str(entry.get("description", ""))))
    return validate_mr_set(out)


def mr_set_to_dict(mrs: Iterable[MRSpec]) -> dict[str, Any]:
    return {"mrs": [m.to_dict() for m in mrs]}


def load_mr_set(path: Union[str, Path], k: Optional[int] = None) -> list[MRSpec]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return mr_set_from_dict(doc, k)


def mr_set_hash(mrs: Iterable[MRSpec]) -> str:
    blob = json.dumps(mr_set_to_dict(mrs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
