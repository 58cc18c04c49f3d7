"""Top-k link prediction with max aggregation over a scored rule set."""

from __future__ import annotations

import enum
import multiprocessing as mp
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .graph import KnowledgeGraph, Triple, Vocabulary
from .rules import Rule, RuleKind, RuleStats, canonical_key, is_var
from .scoring import EXACT, GroundingConfig, body_groundings, chain_ends, reverse_chain

SELF = "__self__"


class Direction(enum.Enum):
    HEAD = "head"  # h(?, known)
    TAIL = "tail"  # h(known, ?)


class Query(NamedTuple):
    relation: int
    known: int
    direction: Direction

    def triple(self, candidate: int) -> Triple:
        if self.direction is Direction.TAIL:
            return self.known, self.relation, candidate
        return candidate, self.relation, self.known


def queries_for(triple: Triple) -> tuple[Query, Query]:
    s, r, o = triple
    return Query(r, o, Direction.HEAD), Query(r, s, Direction.TAIL)


@dataclass
class CandidateRanking:
    """Ordered candidates with their confidence vectors.

    Vectors hold the confidences gathered before the order was settled, so
    they may omit entries from weaker rules that were never applied.
    """

    query: Query
    candidates: list[tuple[int, tuple[float, ...]]]

    def entities(self) -> list[int]:
        return [e for e, _ in self.candidates]


def ranking_key(entity: int, confidences) -> tuple:
    """Sort key: confidence vectors compared descending and lexicographically, longer wins a shared prefix."""
    return (*(-c for c in confidences), 1.0, entity)


def _may_overtake(lower: list[float], upper: list[float], bound: float) -> bool:
    """Whether ``lower`` can still rank above ``upper`` once entries no larger than ``bound`` are appended."""
    for a, b in zip(lower, upper):
        if a != b:
            return a > b
    # shared prefix: lower can only catch up by matching every remaining entry of upper
    return all(c <= bound for c in upper[len(lower):])


def _fixed(vectors: dict[int, list[float]], k: int, bound: float) -> bool:
    if len(vectors) < k:
        return False
    ordered = sorted(vectors.items(), key=lambda kv: ranking_key(kv[0], kv[1]))
    kth = ordered[k - 1][1]
    if _may_overtake([], kth, bound):
        return False
    for (_, upper), (_, lower) in zip(ordered[:k], ordered[1:k]):
        if _may_overtake(lower, upper, bound):
            return False
    return not any(_may_overtake(lower, kth, bound) for _, lower in ordered[k:])


class Predictor:
    """Applies rules to queries against a training graph.

    Rules are tried in descending confidence; application stops as soon as no
    weaker rule can change the top-k ordering.
    """

    def __init__(self, kg: KnowledgeGraph, rules: Iterable[tuple[Rule, RuleStats]], oi: bool = True,
                 blocked: bool = False):
        self.kg = kg
        self.oi = oi
        self.blocked = blocked
        ordered = sorted(rules, key=lambda rs: (-rs[1].confidence, canonical_key(rs[0])))
        self.by_relation: dict[int, list[tuple[Rule, float]]] = defaultdict(list)
        for rule, stats in ordered:
            self.by_relation[rule.relation].append((rule, stats.confidence))
        self._unary_cache: dict[Rule, frozenset[int]] = {}
        self._config = EXACT if oi else GroundingConfig(mode="exact", oi=False)
        # the self constant only ever stands in for an object
        self._self = kg.entities.get(SELF)

    def _unary_bindings(self, rule: Rule) -> frozenset[int]:
        """All values of the head variable of a unary rule whose body holds."""
        cached = self._unary_cache.get(rule)
        if cached is None:
            left_var = is_var(rule.head.left)
            cached = frozenset(s if left_var else o for s, o in body_groundings(self.kg, rule, self._config))
            self._unary_cache[rule] = cached
        return cached

    def _body_holds(self, rule: Rule, value: int) -> bool:
        if self.oi and value in rule.constants:
            return False
        chain = rule.chain
        if chain.terms[0] != (rule.head.left if is_var(rule.head.left) else rule.head.right):
            chain = reverse_chain(chain)
        used = rule.constants if self.oi else set()
        return bool(chain_ends(self.kg, chain, value, used, self.oi, first_only=True))

    def rule_candidates(self, rule: Rule, query: Query) -> set[int]:
        head = rule.head
        known_term, open_term = (head.left, head.right) if query.direction is Direction.TAIL else (head.right, head.left)
        if rule.kind is RuleKind.B:
            chain = rule.chain
            if chain.terms[0] != known_term:
                chain = reverse_chain(chain)
            used = rule.constants if self.oi else set()
            return chain_ends(self.kg, chain, query.known, used, self.oi)
        if is_var(known_term):
            # the rule fixes the open side to its head constant
            return {open_term} if self._body_holds(rule, query.known) else set()
        if known_term != query.known:
            return set()
        return set(self._unary_bindings(rule))

    def predict(self, query: Query, k: int) -> CandidateRanking:
        if k < 1:
            raise ValueError("k must be >= 1")
        rules = self.by_relation.get(query.relation, [])
        vectors: dict[int, list[float]] = {}
        for i, (rule, confidence) in enumerate(rules):
            for candidate in self.rule_candidates(rule, query):
                if candidate == self._self and query.direction is Direction.HEAD:
                    continue
                triple = query.triple(candidate)
                if triple in self.kg.triples:
                    continue
                if self.blocked and self.kg.connected(triple[0], triple[2]):
                    continue
                vectors.setdefault(candidate, []).append(confidence)
            if i + 1 < len(rules):
                bound = rules[i + 1][1]
                if bound < confidence and _fixed(vectors, k, bound):
                    break
        ordered = sorted(vectors.items(), key=lambda kv: ranking_key(kv[0], kv[1]))[:k]
        return CandidateRanking(query, [(e, tuple(v)) for e, v in ordered])


def apply_rules(kg: KnowledgeGraph, rules, query: Query, k: int, oi: bool = True,
                blocked: bool = False) -> CandidateRanking:
    return Predictor(kg, rules, oi, blocked).predict(query, k)


def rewrite_self_loops(triples: Iterable[Triple], entities: Vocabulary) -> list[Triple]:
    """Replace every h(c,c) by h(c,self); the self constant is added to ``entities``."""
    triples = list(triples)
    self_id = entities.get(SELF)
    if self_id is None:
        self_id = entities.add(SELF)
    elif any(self_id in (s, o) and s != o for s, _, o in triples):
        raise ValueError(f"entity name {SELF!r} is reserved")
    return [(s, r, self_id if s == o else o) for s, r, o in triples]


def unrewrite(triple: Triple, entities: Vocabulary) -> Triple:
    s, r, o = triple
    if o == entities.get(SELF):
        return s, r, s
    return triple


def blocking_active(train: KnowledgeGraph, valid: KnowledgeGraph) -> bool:
    """Dataset-level switch: block only when no validation triple links a pair already linked in training."""
    if not len(valid):
        return False
    return not any(train.connected(s, o) for s, _, o in valid)


def blocking_filter(train: KnowledgeGraph, active: bool, triple: Triple) -> str:
    if active and train.connected(triple[0], triple[2]):
        return "block"
    return "keep"


_WORKER: Predictor | None = None
_WORKER_K = 0


def _init_worker(predictor: Predictor, k: int):
    global _WORKER, _WORKER_K
    _WORKER, _WORKER_K = predictor, k


def _predict_pair(triple: Triple):
    heads, tails = queries_for(triple)
    return _WORKER.predict(heads, _WORKER_K), _WORKER.predict(tails, _WORKER_K)


def predict_all(predictor: Predictor, triples: list[Triple], k: int, threads: int = 1):
    """(heads ranking, tails ranking) per test triple, in input order."""
    if threads <= 1 or len(triples) < 2:
        return [(predictor.predict(h, k), predictor.predict(t, k)) for h, t in map(queries_for, triples)]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    with ctx.Pool(threads, initializer=_init_worker, initargs=(predictor, k)) as pool:
        return pool.map(_predict_pair, triples, chunksize=max(1, len(triples) // (threads * 8)))


def _ranking_line(label: str, ranking: CandidateRanking, entities: Vocabulary) -> str:
    parts = []
    for entity, confidences in ranking.candidates:
        if ranking.query.direction is Direction.TAIL:
            entity = unrewrite(ranking.query.triple(entity), entities)[2]
        parts += [entities.name(entity), f"{confidences[0]:.4f}"]
    return "\t".join([f"{label}:"] + parts)


def write_predictions(path, original: list[Triple], rankings, entities: Vocabulary,
                      relations: Vocabulary) -> None:
    """Three lines per test triple: the triple, then head and tail candidates with their max confidence."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for (s, r, o), (heads, tails) in zip(original, rankings):
            handle.write(f"{entities.name(s)} {relations.name(r)} {entities.name(o)}\n")
            handle.write(_ranking_line("Heads", heads, entities) + "\n")
            handle.write(_ranking_line("Tails", tails, entities) + "\n")
