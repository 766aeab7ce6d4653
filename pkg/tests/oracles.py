"""Independent brute-force oracles. Nothing here imports the code paths under test."""

from fractions import Fraction
from itertools import chain, combinations

CALC = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b}


def calculator_violation_counts(k, lo=0, hi=9):
    """(function, MR) -> violated count over the full square domain, by direct evaluation."""
    follow = {
        "MR1": lambda a, b: (b, a),
        "MR2": lambda a, b: (a * k, b * k),
        "MR3": lambda a, b: (a + k, b + k),
        "MR4": lambda a, b: (a - k, b - k),
    }
    holds = {
        "MR1": lambda s, f: s == f,
        "MR2": lambda s, f: s < f,
        "MR3": lambda s, f: s == f,
        "MR4": lambda s, f: s == f,
    }
    out = {}
    for fname, fn in CALC.items():
        for mr in follow:
            bad = 0
            for a in range(lo, hi + 1):
                for b in range(lo, hi + 1):
                    if not holds[mr](fn(a, b), fn(*follow[mr](a, b))):
                        bad += 1
            out[(fname, mr)] = bad
    return out


def powerset(items):
    items = sorted(items)
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def brute_frequent(transactions, min_support):
    """Every non-empty subset of the item universe with support >= min_support."""
    n = len(transactions)
    universe = set().union(*transactions) if transactions else set()
    out = {}
    for sub in powerset(universe):
        if not sub:
            continue
        s = frozenset(sub)
        sup = Fraction(sum(1 for t in transactions if s <= t), n)
        if sup >= min_support:
            out[s] = sup
    return out


def brute_rules(transactions, min_support, min_confidence, rhs_keys=None, lhs_required=(), minimal=True):
    """All single-consequent rules, each recomputed from raw counts.

    Returns {(lhs, rhs_item): (support, confidence, lift)}.
    """
    n = len(transactions)

    def sup(s):
        return Fraction(sum(1 for t in transactions if s <= t), n)

    universe = set().union(*transactions) if transactions else set()
    rules = {}
    for y in sorted(universe):
        if rhs_keys is not None and y[0] not in rhs_keys:
            continue
        rest = universe - {y}
        for sub in powerset(rest):
            if not sub:
                continue
            x = frozenset(sub)
            if not set(lhs_required) <= {i[0] for i in x}:
                continue
            z_sup = sup(x | {y})
            if z_sup < min_support or z_sup == 0:
                continue
            conf = z_sup / sup(x)
            if conf < min_confidence:
                continue
            rules[(x, y)] = (z_sup, conf, conf / sup(frozenset([y])))
    if minimal:
        rules = {
            (x, y): v for (x, y), v in rules.items()
            if not any(
                (frozenset(s), y) in rules and rules[(frozenset(s), y)][1] >= v[1]
                for s in powerset(x) if 0 < len(s) < len(x)
            )
        }
    return rules
