"""Metamorphic relation refinement: fuzz, check MRs, mine violation rules, emit regression tests."""

__version__ = "0.1.0"
