"""Apriori frequent itemsets and association rules with exact rational metrics."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Collection, Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from mrrefine.arm import _backend
from mrrefine.errors import ConfigError, UndefinedConfidenceError

Ratio = Fraction
RatioLike = Union[Fraction, int, float, str]


class Item(NamedTuple):
    key: str
    value: str

    def __str__(self) -> str:
        return f"{self.key}={self.value}"

    @classmethod
    def parse(cls, text: str) -> "Item":
        key, sep, value = text.strip().partition("=")
        if not sep or not key or not value:
            raise ValueError(f"item must look like key=value, got {text!r}")
        return cls(key, value)


Itemset = frozenset  # frozenset[Item]


def itemset(*items: Union[Item, tuple[str, str], str]) -> frozenset:
    """Build an itemset from ``Item``s, ``(key, value)`` tuples or ``"key=value"`` strings."""
    out = []
    for it in items:
        if isinstance(it, str):
            out.append(Item.parse(it))
        else:
            out.append(Item(*it))
    s = frozenset(out)
    _check_keys(s)
    return s


def _check_keys(items: Iterable[Item]) -> None:
    seen: set[str] = set()
    for it in items:
        if it.key in seen:
            raise ConfigError(f"itemset holds two values for attribute {it.key!r}")
        seen.add(it.key)


def format_itemset(s: Iterable[Item]) -> str:
    return ",".join(str(i) for i in sorted(s))


def parse_itemset(text: str) -> frozenset:
    text = text.strip()
    if not text:
        return frozenset()
    return itemset(*text.split(","))


@dataclass(frozen=True)
class Transaction:
    items: frozenset
    weight: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", frozenset(Item(*i) for i in self.items))
        _check_keys(self.items)
        if self.weight != 1:
            raise ConfigError("weighted transactions are not supported")


@dataclass(frozen=True)
class AssociationRule:
    lhs: frozenset
    rhs: frozenset
    support: Fraction
    confidence: Fraction
    lift: Fraction

    @property
    def rhs_item(self) -> Item:
        (item,) = self.rhs
        return item

    def sort_key(self):
        return (-self.support, sorted(self.lhs), sorted(self.rhs))

    def render(self, places: int = 3) -> str:
        return " | ".join([
            format_itemset(self.lhs),
            format_itemset(self.rhs),
            render_ratio(self.support, places),
            render_ratio(self.confidence, places),
            render_ratio(self.lift, places),
        ])


def as_ratio(x: RatioLike) -> Fraction:
    """Exact ratio from user input; floats go through their shortest repr (0.2 -> 1/5)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def render_ratio(x: Fraction, places: int = 3) -> str:
    """Decimal rendering, rounded half-to-even at ``places`` digits."""
    scale = 10**places
    q = round(Fraction(x) * scale)  # Fraction.__round__ rounds half to even
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, frac = divmod(q, scale)
    return f"{sign}{whole}.{frac:0{places}d}" if places else f"{sign}{whole}"


def _as_items(s: Iterable) -> frozenset:
    return frozenset(Item(*i) for i in s)


def _count(db: Sequence[Transaction], s: frozenset) -> int:
    return sum(1 for t in db if s <= t.items)


def support(db: Sequence[Transaction], s: Iterable) -> Fraction:
    if not db:
        raise ConfigError("support of an empty database is undefined")
    return Fraction(_count(db, _as_items(s)), len(db))


def confidence(db: Sequence[Transaction], x: Iterable, y: Iterable) -> Fraction:
    x, y = _as_items(x), _as_items(y)
    sx = support(db, x)
    if sx == 0:
        raise UndefinedConfidenceError(f"confidence undefined: {format_itemset(x) or '{}'} never occurs")
    return support(db, x | y) / sx


def lift(db: Sequence[Transaction], x: Iterable, y: Iterable) -> Fraction:
    y = _as_items(y)
    sy = support(db, y)
    if sy == 0:
        raise UndefinedConfidenceError(f"lift undefined: {format_itemset(y)} never occurs")
    return confidence(db, x, y) / sy


def lift_from(conf: Fraction, rhs_support: Fraction) -> Fraction:
    if rhs_support == 0:
        raise UndefinedConfidenceError("lift undefined for a consequent with zero support")
    return Fraction(conf) / Fraction(rhs_support)


FrequentMap = dict  # size -> list[(frozenset[Item], Fraction)]


def apriori_frequent(
    db: Sequence[Transaction],
    min_support: RatioLike,
    *,
    backend: Optional[str] = None,
) -> FrequentMap:
    """Level-wise frequent itemset enumeration.

    Returns ``{size: [(itemset, support), ...]}`` with each level sorted by its
    items. ``backend`` picks a counting kernel by name ("python", "cython");
    the default is whatever was selected at import.
    """
    min_support = as_ratio(min_support)
    if not 0 < min_support <= 1:
        raise ConfigError(f"min_support must be in (0, 1], got {min_support}")
    if not db:
        return {}
    index_cls = _backend.BACKENDS[backend] if backend else _backend.TidsetIndex

    universe = sorted({i for t in db for i in t.items})
    pos = {item: n for n, item in enumerate(universe)}
    keys = [item.key for item in universe]
    n = len(db)
    index = index_cls([[pos[i] for i in t.items] for t in db], len(universe))

    def frequent(count: int) -> bool:
        return Fraction(count, n) >= min_support

    result: FrequentMap = {}
    level = [(i,) for i in range(len(universe))]
    size = 1
    while level:
        counts = index.count(level)
        kept = [(c, k) for c, k in zip(level, counts) if frequent(k)]
        if not kept:
            break
        result[size] = [(frozenset(universe[i] for i in c), Fraction(k, n)) for c, k in kept]
        level = _next_candidates([c for c, _ in kept], keys)
        size += 1
    return result


def _next_candidates(frequent: list[tuple[int, ...]], keys: list[str]) -> list[tuple[int, ...]]:
    """Join sorted k-tuples sharing a (k-1)-prefix, then prune by downward closure."""
    known = set(frequent)
    out = []
    by_prefix: dict[tuple[int, ...], list[int]] = {}
    for c in frequent:
        by_prefix.setdefault(c[:-1], []).append(c[-1])
    for prefix, tails in by_prefix.items():
        tails.sort()
        for x, y in combinations(tails, 2):
            if keys[x] == keys[y]:
                continue  # one value per attribute: never co-occur
            cand = prefix + (x, y)
            if all(cand[:j] + cand[j + 1:] in known for j in range(len(cand) - 2)):
                out.append(cand)
    out.sort()
    return out


def frequent_supports(frequent: FrequentMap) -> dict[frozenset, Fraction]:
    return {s: sup for level in frequent.values() for s, sup in level}


def derive_rules(
    frequent: FrequentMap,
    min_confidence: RatioLike,
    rhs_filter: Optional[Collection[str]] = None,
    *,
    lhs_required: Collection[str] = (),
    minimal: bool = True,
) -> list[AssociationRule]:
    """Single-consequent rules ``X -> {y}`` from the frequent itemsets.

    ``y.key`` must be in ``rhs_filter`` (any key when ``None``) and ``X`` must be
    non-empty and mention every key in ``lhs_required``. With ``minimal`` a rule
    is dropped when a rule with a strictly smaller antecedent, the same
    consequent and at least its confidence also passes.
    """
    min_confidence = as_ratio(min_confidence)
    if not 0 < min_confidence <= 1:
        raise ConfigError(f"min_confidence must be in (0, 1], got {min_confidence}")
    sup = frequent_supports(frequent)
    required = set(lhs_required)
    found: dict[tuple[frozenset, Item], AssociationRule] = {}
    for z, z_sup in sup.items():
        if len(z) < 2:
            continue
        for y in z:
            if rhs_filter is not None and y.key not in rhs_filter:
                continue
            x = z - {y}
            if not required <= {i.key for i in x}:
                continue
            conf = z_sup / sup[x]
            if conf < min_confidence:
                continue
            rhs = frozenset([y])
            found[(x, y)] = AssociationRule(x, rhs, z_sup, conf, lift_from(conf, sup[rhs]))

    rules = list(found.values())
    if minimal:
        rules = [r for r in rules if not _has_stronger_subrule(r, found)]
    rules.sort(key=AssociationRule.sort_key)
    return rules


def _has_stronger_subrule(rule: AssociationRule, found: Mapping) -> bool:
    lhs = sorted(rule.lhs)
    y = rule.rhs_item
    for size in range(1, len(lhs)):
        for sub in combinations(lhs, size):
            other = found.get((frozenset(sub), y))
            if other is not None and other.confidence >= rule.confidence:
                return True
    return False


RULES_HEADER = "# lhs | rhs | support | confidence | lift"


def dumps_rules(rules: Iterable[AssociationRule], comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(RULES_HEADER)
    lines.extend(r.render() for r in rules)
    return "\n".join(lines) + "\n"


class RenderedRule(NamedTuple):
    """A rule read back from a rules file; metrics are the rendered decimals."""

    lhs: frozenset
    rhs: frozenset
    support: str
    confidence: str
    lift: str


def loads_rules(text: str) -> list[RenderedRule]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 5:
            raise ConfigError(f"rules line {lineno}: expected 5 fields, got {len(parts)}")
        out.append(RenderedRule(parse_itemset(parts[0]), parse_itemset(parts[1]), *parts[2:]))
    return out
