"""Body groundings, support and confidence of path rules under Object Identity.

Groundings are enumerated along the rule's body path while carrying the full
set of entities bound so far, so every pairwise inequality between rule terms
can be enforced at each join.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable

from .graph import KnowledgeGraph
from .rules import Chain, Rule, RuleKind, RuleStats, is_var


@dataclass(frozen=True)
class GroundingConfig:
    mode: str = "sampled"  # exact | sampled
    sample_anchors: float = 1000
    branch_limit: float = 50
    laplace: float = 5
    oi: bool = True

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown grounding mode {self.mode!r}")
        if self.sample_anchors < 1 or self.branch_limit < 1:
            raise ValueError("sample_anchors and branch_limit must be >= 1")
        if self.laplace < 0:
            raise ValueError("laplace must be >= 0")

    @property
    def exact(self) -> bool:
        return self.mode == "exact" or (math.isinf(self.sample_anchors) and math.isinf(self.branch_limit))


EXACT = GroundingConfig(mode="exact")


def reverse_chain(chain: Chain) -> Chain:
    return Chain(chain.terms[::-1], chain.relations[::-1], tuple(not f for f in chain.forward[::-1]))


def _successors(kg: KnowledgeGraph, relation: int, forward: bool, value: int) -> list[int]:
    return kg.objects(relation, value) if forward else kg.subjects(relation, value)


def _linked(kg: KnowledgeGraph, relation: int, forward: bool, a: int, b: int) -> bool:
    return kg.contains(a, relation, b) if forward else kg.contains(b, relation, a)


def anchors(kg: KnowledgeGraph, chain: Chain) -> Iterable[int]:
    """Entities that can bind the first term of ``chain`` given its first atom."""
    index = kg.objects_of if chain.forward[0] else kg.subjects_of
    return index.get(chain.relations[0], {}).keys()


def chain_ends(kg: KnowledgeGraph, chain: Chain, start: int, used: set[int], oi: bool = True,
               branch_limit: float = math.inf, rng: random.Random | None = None,
               first_only: bool = False) -> set[int]:
    """Bindings of the last term reachable from ``start`` bound to the first term.

    ``used`` holds entities that variables may not take under OI (rule
    constants and already-bound head terms); it is not modified.  When the
    last term is a constant the result is ``{constant}`` or empty.
    With ``first_only`` the search stops at the first complete grounding.
    """
    terms, relations, forward = chain.terms, chain.relations, chain.forward
    n = len(relations)
    found: set[int] = set()
    bound = set(used) if oi else set()
    bound.add(start)

    def visit(i: int, value: int) -> bool:
        relation, fwd = relations[i], forward[i]
        term = terms[i + 1]
        if not is_var(term):
            if _linked(kg, relation, fwd, value, term):
                if i + 1 == n:
                    found.add(term)
                    return first_only
                return visit(i + 1, term)
            return False
        options = _successors(kg, relation, fwd, value)
        if len(options) > branch_limit:
            options = rng.sample(options, int(branch_limit))
        for nxt in options:
            if oi and nxt in bound:
                continue
            if i + 1 == n:
                found.add(nxt)
                if first_only:
                    return True
                continue
            if oi:
                bound.add(nxt)
            stop = visit(i + 1, nxt)
            if oi:
                bound.discard(nxt)
            if stop:
                return True
        return False

    visit(0, start)
    return found


def _orient(rule: Rule, chain: Chain, start: int, end: int | None) -> tuple[int, int]:
    """Head grounding (subject, object) from the first/last term bindings."""
    head = rule.head
    values = {chain.terms[0]: start}
    if end is not None and is_var(chain.terms[-1]):
        values[chain.terms[-1]] = end
    subject = values.get(head.left, head.left) if is_var(head.left) else head.left
    obj = values.get(head.right, head.right) if is_var(head.right) else head.right
    return subject, obj


def body_groundings(kg: KnowledgeGraph, rule: Rule, config: GroundingConfig = EXACT,
                    rng: random.Random | None = None) -> set[tuple[int, int]]:
    """Head groundings (subject, object) whose body is satisfiable in ``kg``."""
    chain = rule.chain
    kind = rule.kind
    oi = config.oi
    constants = rule.constants if oi else set()
    starts = list(anchors(kg, chain))
    if config.exact:
        branch = math.inf
    else:
        rng = rng or random.Random(0)
        branch = config.branch_limit
        if len(starts) > config.sample_anchors:
            starts = rng.sample(starts, int(config.sample_anchors))

    result = set()
    for x in starts:
        if oi and x in constants:
            continue
        if kind is RuleKind.B:
            for y in chain_ends(kg, chain, x, constants, oi, branch, rng):
                result.add(_orient(rule, chain, x, y))
        elif chain_ends(kg, chain, x, constants, oi, branch, rng, first_only=True):
            result.add(_orient(rule, chain, x, None))
    return result


def score_rule(kg: KnowledgeGraph, rule: Rule, config: GroundingConfig = EXACT,
               rng: random.Random | None = None) -> RuleStats:
    groundings = body_groundings(kg, rule, config, rng)
    r = rule.relation
    support = sum(1 for s, o in groundings if kg.contains(s, r, o))
    return RuleStats.from_counts(support, len(groundings), config.laplace)


def passes_thresholds(stats: RuleStats, min_support: int = 2, min_confidence: float = 0.0001) -> bool:
    return stats.support >= min_support and stats.confidence > min_confidence
