"""Filtered hits@k and the MRR lower bound computed from a prediction file."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

log = logging.getLogger(__name__)

NameTriple = tuple[str, str, str]


class PredictionFormatError(ValueError):
    pass


def filtered_rank(candidates: list, gold, known_others: set) -> int | None:
    """1-based rank of ``gold`` once the other true answers are removed; None when it is not listed."""
    rank = 0
    for candidate in candidates:
        if candidate == gold:
            return rank + 1
        if candidate not in known_others:
            rank += 1
    return None


def _parse_candidates(line: str, label: str, path, lineno: int) -> list[str]:
    if not line.startswith(f"{label}:"):
        raise PredictionFormatError(f"{path}:{lineno}: expected a '{label}:' line")
    fields = line.rstrip("\n").split("\t")[1:]
    if len(fields) % 2:
        raise PredictionFormatError(f"{path}:{lineno}: odd number of candidate fields")
    return fields[0::2]


def read_predictions(path) -> dict[NameTriple, tuple[list[str], list[str]]]:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if len(lines) % 3:
        raise PredictionFormatError(f"{path}: expected blocks of three lines")
    out = {}
    for i in range(0, len(lines), 3):
        parts = lines[i].split(" ")
        if len(parts) != 3:
            raise PredictionFormatError(f"{path}:{i + 1}: expected 'subject relation object'")
        heads = _parse_candidates(lines[i + 1], "Heads", path, i + 2)
        tails = _parse_candidates(lines[i + 2], "Tails", path, i + 3)
        out[tuple(parts)] = (heads, tails)
    return out


@dataclass
class Metrics:
    cases: int = 0
    hits: dict[int, float] = field(default_factory=dict)
    mrr: float = 0.0
    ranks: list = field(default_factory=list)


def _summarize(ranks: list[int | None], k_list: Iterable[int]) -> Metrics:
    n = len(ranks)
    if not n:
        return Metrics(0, {k: 0.0 for k in k_list}, 0.0, [])
    hits = {k: sum(1 for r in ranks if r is not None and r <= k) / n for k in k_list}
    mrr = sum(1 / r for r in ranks if r is not None) / n
    return Metrics(n, hits, mrr, list(ranks))


def evaluate(predictions: dict[NameTriple, tuple[list[str], list[str]]], test: Iterable[NameTriple],
             known: Iterable[NameTriple], k_list: Iterable[int] = (1, 10),
             k_max: int | None = None) -> tuple[Metrics, dict[str, Metrics]]:
    """Overall and per-relation metrics over two cases per test triple.

    ``known`` is the filter set (train, valid and test triples).
    """
    k_list = sorted(set(k_list))
    heads_of: dict[tuple[str, str], set[str]] = defaultdict(set)
    tails_of: dict[tuple[str, str], set[str]] = defaultdict(set)
    for s, r, o in known:
        heads_of[(r, o)].add(s)
        tails_of[(s, r)].add(o)

    ranks: list[int | None] = []
    per_relation: dict[str, list[int | None]] = defaultdict(list)
    missing = 0
    for triple in test:
        s, r, o = triple
        heads_of[(r, o)].add(s)
        tails_of[(s, r)].add(o)
        entry = predictions.get(tuple(triple))
        if entry is None:
            missing += 1
            pair = [None, None]
        else:
            heads, tails = (c[:k_max] if k_max else c for c in entry)
            pair = [filtered_rank(heads, s, heads_of[(r, o)] - {s}),
                    filtered_rank(tails, o, tails_of[(s, r)] - {o})]
        ranks += pair
        per_relation[r] += pair
    if missing:
        log.warning("%d test triples have no predictions; their cases count as not found", missing)
    return _summarize(ranks, k_list), {r: _summarize(v, k_list) for r, v in sorted(per_relation.items())}


def format_report(overall: Metrics, per_relation: dict[str, Metrics] | None = None) -> str:
    """``metric<TAB>value`` lines; hits as percentages, MRR as a fraction."""
    def rows(m: Metrics, suffix=""):
        out = [f"hits@{k}{suffix}\t{100 * v:.2f}" for k, v in m.hits.items()]
        out.append(f"mrr{suffix}\t{m.mrr:.4f}")
        return out

    lines = rows(overall)
    for relation, m in (per_relation or {}).items():
        lines += rows(m, f"[{relation}]")
    return "\n".join(lines) + "\n"
