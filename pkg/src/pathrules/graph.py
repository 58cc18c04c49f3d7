"""In-memory triple store with the indices needed for path sampling and rule grounding."""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

Triple = tuple[int, int, int]


class GraphLoadError(ValueError):
    pass


class Vocabulary:
    """Bijective interning of names to dense integer ids."""

    def __init__(self, names: Iterable[str] = ()):
        self.names: list[str] = []
        self.ids: dict[str, int] = {}
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        idx = self.ids.get(name)
        if idx is None:
            idx = len(self.names)
            self.ids[name] = idx
            self.names.append(name)
        return idx

    def get(self, name: str) -> int | None:
        return self.ids.get(name)

    def name(self, idx: int) -> str:
        return self.names[idx]

    def __contains__(self, name: str) -> bool:
        return name in self.ids

    def __len__(self) -> int:
        return len(self.names)


class KnowledgeGraph:
    """Immutable set of (subject, relation, object) id triples plus lookup indices.

    ``entities`` and ``relations`` may be shared between several graphs (train,
    valid, test) so that ids agree across splits.
    """

    def __init__(self, triples: Iterable[Triple], entities: Vocabulary, relations: Vocabulary):
        self.entities = entities
        self.relations = relations

        unique = dict.fromkeys(triples)
        self.triple_list: list[Triple] = list(unique)
        self.triples: frozenset[Triple] = frozenset(unique)

        by_relation: dict[int, list[tuple[int, int]]] = defaultdict(list)
        outgoing: dict[int, list[tuple[int, int]]] = defaultdict(list)
        incoming: dict[int, list[tuple[int, int]]] = defaultdict(list)
        # (entity, entity) -> [(relation, forward)]; forward means relation(a, b)
        pairs: dict[tuple[int, int], list[tuple[int, bool]]] = defaultdict(list)
        # relation -> subject -> objects, relation -> object -> subjects
        objects_of: dict[int, dict[int, list[int]]] = defaultdict(lambda: defaultdict(list))
        subjects_of: dict[int, dict[int, list[int]]] = defaultdict(lambda: defaultdict(list))
        # every incident edge of an entity: (relation, neighbour, reversed)
        incident: dict[int, list[tuple[int, int, bool]]] = defaultdict(list)

        for s, r, o in self.triple_list:
            by_relation[r].append((s, o))
            outgoing[s].append((r, o))
            incoming[o].append((r, s))
            pairs[(s, o)].append((r, True))
            if s != o:
                pairs[(o, s)].append((r, False))
            objects_of[r][s].append(o)
            subjects_of[r][o].append(s)
            incident[s].append((r, o, False))
            if s != o:
                incident[o].append((r, s, True))

        self.by_relation = dict(by_relation)
        self.outgoing = dict(outgoing)
        self.incoming = dict(incoming)
        self.pairs = dict(pairs)
        self.objects_of = {r: dict(d) for r, d in objects_of.items()}
        self.subjects_of = {r: dict(d) for r, d in subjects_of.items()}
        self.incident = dict(incident)

    def __len__(self) -> int:
        return len(self.triple_list)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triple_list)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self.triples

    def contains(self, s: int, r: int, o: int) -> bool:
        return (s, r, o) in self.triples

    def connecting_relations(self, a: int, b: int) -> list[tuple[int, bool]]:
        """Relations linking ``a`` and ``b``: ``(r, True)`` for r(a, b), ``(r, False)`` for r(b, a)."""
        return list(self.pairs.get((a, b), ()))

    def connected(self, a: int, b: int) -> bool:
        return (a, b) in self.pairs

    def objects(self, r: int, s: int) -> list[int]:
        return self.objects_of.get(r, {}).get(s, [])

    def subjects(self, r: int, o: int) -> list[int]:
        return self.subjects_of.get(r, {}).get(o, [])

    @property
    def entity_ids(self) -> set[int]:
        return set(self.incident)

    @property
    def relation_ids(self) -> list[int]:
        return sorted(self.by_relation)

    def triple_names(self, triple: Triple) -> tuple[str, str, str]:
        s, r, o = triple
        return self.entities.name(s), self.relations.name(r), self.entities.name(o)


def read_triples(path: str | os.PathLike, entities: Vocabulary, relations: Vocabulary) -> list[Triple]:
    triples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not all(fields):
                raise GraphLoadError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            s, r, o = fields
            triples.append((entities.add(s), relations.add(r), entities.add(o)))
    return triples


def load_graph(path: str | os.PathLike, entities: Vocabulary | None = None,
               relations: Vocabulary | None = None) -> KnowledgeGraph:
    entities = Vocabulary() if entities is None else entities
    relations = Vocabulary() if relations is None else relations
    return KnowledgeGraph(read_triples(path, entities, relations), entities, relations)


def write_triples(triples: Iterable[Triple], path: str | os.PathLike, entities: Vocabulary,
                  relations: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for s, r, o in triples:
            handle.write(f"{entities.name(s)}\t{relations.name(r)}\t{entities.name(o)}\n")


@dataclass
class Dataset:
    train: KnowledgeGraph
    valid: KnowledgeGraph
    test: KnowledgeGraph

    @property
    def entities(self) -> Vocabulary:
        return self.train.entities

    @property
    def relations(self) -> Vocabulary:
        return self.train.relations


def load_dataset(train: str | os.PathLike, valid: str | os.PathLike | None = None,
                 test: str | os.PathLike | None = None) -> Dataset:
    """Load the three splits with shared dictionaries; missing splits become empty graphs."""
    entities, relations = Vocabulary(), Vocabulary()
    graphs = []
    for path in (train, valid, test):
        if path is None:
            graphs.append(KnowledgeGraph((), entities, relations))
        else:
            graphs.append(load_graph(path, entities, relations))
    return Dataset(*graphs)
