"""Random-walk sampling of straight paths anchored at a triple of a target relation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple

from .graph import KnowledgeGraph


@dataclass(frozen=True, order=True)
class PathProfile:
    """Arm identity: rule body length and whether the sampled path closes a cycle."""

    length: int
    cyclic: bool

    def __str__(self):
        return f"{'C' if self.cyclic else 'A'}{self.length}"

    @classmethod
    def parse(cls, text: str) -> PathProfile:
        return cls(int(text[1:]), text[0] == "C")

    def sort_key(self):
        # shorter first, cyclic before acyclic
        return self.length, not self.cyclic


class Step(NamedTuple):
    relation: int
    source: int
    target: int
    reversed: bool

    def triple(self) -> tuple[int, int, int]:
        if self.reversed:
            return self.target, self.relation, self.source
        return self.source, self.relation, self.target


@dataclass(frozen=True)
class Path:
    """A head triple followed by a walk that starts at one of the head's entities.

    ``steps[0]`` is the head step from the other head entity to the walk's
    start, so ``entities`` reads c_0, c_1, ..., c_n with c_0 = c_n for cyclic
    paths.
    """

    steps: tuple[Step, ...]

    @property
    def head_step(self) -> Step:
        return self.steps[0]

    @property
    def head_triple(self) -> tuple[int, int, int]:
        return self.steps[0].triple()

    @property
    def body_steps(self) -> tuple[Step, ...]:
        return self.steps[1:]

    @property
    def entities(self) -> list[int]:
        return [self.steps[0].source] + [step.target for step in self.steps]

    @property
    def cyclic(self) -> bool:
        ents = self.entities
        return ents[0] == ents[-1]

    @property
    def profile(self) -> PathProfile:
        return PathProfile(len(self.steps) - 1, self.cyclic)


def is_straight(path: Path | list[int] | tuple[int, ...]) -> bool:
    """No entity is visited twice, except that the first may equal the last."""
    entities = list(path.entities if isinstance(path, Path) else path)
    if len(entities) > 1 and entities[0] == entities[-1]:
        entities = entities[:-1]
    return len(set(entities)) == len(entities)


def sample_path(kg: KnowledgeGraph, target_relation: int, profile: PathProfile,
                rng: random.Random, max_attempts: int = 5) -> Path | None:
    """Sample a straight path for ``profile`` or return ``None`` after ``max_attempts`` restarts."""
    heads = kg.by_relation.get(target_relation)
    if not heads:
        return None
    n = profile.length
    for _ in range(max_attempts):
        s, o = heads[rng.randrange(len(heads))]
        if s == o:
            continue
        if rng.random() < 0.5:
            start, other, head = s, o, Step(target_relation, o, s, True)
        else:
            start, other, head = o, s, Step(target_relation, s, o, False)
        path = _walk(kg, head, start, other, n, profile.cyclic, rng)
        if path is not None:
            return path
    return None


def _walk(kg: KnowledgeGraph, head: Step, start: int, other: int, n: int, cyclic: bool,
          rng: random.Random) -> Path | None:
    head_triple = head.triple()
    visited = {start, other}
    steps = [head]
    current = start
    for i in range(n):
        if cyclic and i == n - 1:
            options = [(r, fwd) for r, fwd in kg.connecting_relations(current, other)
                       if not _is_head(r, fwd, current, other, head_triple)]
            if not options:
                return None
            r, fwd = options[rng.randrange(len(options))]
            steps.append(Step(r, current, other, not fwd))
            return Path(tuple(steps))
        edges = kg.incident.get(current)
        if not edges:
            return None
        r, nxt, rev = edges[rng.randrange(len(edges))]
        if nxt in visited:
            return None
        visited.add(nxt)
        steps.append(Step(r, current, nxt, rev))
        current = nxt
    return Path(tuple(steps))


def _is_head(r: int, forward: bool, a: int, b: int, head_triple) -> bool:
    triple = (a, r, b) if forward else (b, r, a)
    return triple == head_triple
