"""Anytime bottom-up mining of path rules for knowledge graph completion."""

from .graph import KnowledgeGraph, Vocabulary, load_dataset, load_graph
from .rules import Atom, Rule, RuleKind, RuleStats, canonical_key, classify, format_rule, parse_rule

__all__ = [
    "Atom",
    "KnowledgeGraph",
    "Rule",
    "RuleKind",
    "RuleStats",
    "Vocabulary",
    "canonical_key",
    "classify",
    "format_rule",
    "load_dataset",
    "load_graph",
    "parse_rule",
]
