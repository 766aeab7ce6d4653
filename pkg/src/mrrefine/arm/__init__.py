"""Association rule mining (Apriori) over categorical transactions."""

from mrrefine.arm._backend import BACKEND, BACKENDS
from mrrefine.arm.mining import (
    AssociationRule,
    Item,
    Itemset,
    RenderedRule,
    Transaction,
    apriori_frequent,
    as_ratio,
    confidence,
    derive_rules,
    dumps_rules,
    format_itemset,
    frequent_supports,
    itemset,
    lift,
    lift_from,
    loads_rules,
    parse_itemset,
    render_ratio,
    support,
)

__all__ = [
    "BACKEND",
    "BACKENDS",
    "AssociationRule",
    "Item",
    "Itemset",
    "RenderedRule",
    "Transaction",
    "apriori_frequent",
    "as_ratio",
    "confidence",
    "derive_rules",
    "dumps_rules",
    "format_itemset",
    "frequent_supports",
    "itemset",
    "lift",
    "lift_from",
    "loads_rules",
    "parse_itemset",
    "render_ratio",
    "support",
]
