"""Bottom rules from sampled paths and their useful generalizations.

Generalizing a bottom rule by replacing constants with variables and dropping
body atoms yields a lattice, but only a handful of its nodes are worth keeping:
two unary rules for an acyclic path, and one binary plus two unary rules for
a cyclic path.  These are built directly.
"""

from __future__ import annotations

from .rules import Atom, Rule, normalize_variables
from .sampler import Path


def path_to_bottom_rule(path: Path) -> Rule:
    s, r, o = path.head_triple
    body = tuple(Atom(*_atom_triple(step.triple())) for step in path.body_steps)
    return Rule(Atom(r, s, o), body)


def _atom_triple(triple):
    s, r, o = triple
    return r, s, o


def _walk_entities(bottom: Rule) -> tuple[int, int, list[int]]:
    """Recover (start, other, [start, e_1, ..., e_n]) from a ground bottom rule."""
    s, o = bottom.head.left, bottom.head.right
    first = bottom.body[0]
    start = s if s in (first.left, first.right) else o
    other = o if start == s else s
    entities = [start]
    current = start
    for atom in bottom.body:
        current = atom.right if atom.left == current else atom.left
        entities.append(current)
    return start, other, entities


def generalize(bottom: Rule, cyclic: bool, constants: bool = True) -> list[Rule]:
    """Return the generalizations of ``bottom`` that can make useful predictions.

    With ``constants=False`` only the binary rule of a cyclic path is returned
    (and nothing for an acyclic path).
    """
    start, other, walk = _walk_entities(bottom)
    head = bottom.head
    interior = walk[1:-1]

    def substitute(atom: Atom, mapping: dict) -> Atom:
        return Atom(atom.relation, mapping.get(atom.left, atom.left), mapping.get(atom.right, atom.right))

    def build(mapping: dict, reverse: bool = False) -> Rule:
        body = [substitute(a, mapping) for a in bottom.body]
        if reverse:
            body.reverse()
        return normalize_variables(substitute(head, mapping), body)

    fresh = {e: f"_{i}" for i, e in enumerate(interior)}
    start_var = "_s"
    rules = []
    if cyclic:
        other_var = "_o"
        # binary rule reads from the subject side
        rules.append(build({start: start_var, other: other_var, **fresh}, reverse=(start != head.left)))
        if constants:
            rules.append(build({start: start_var, **fresh}))
            rules.append(build({other: other_var, **fresh}, reverse=True))
    elif constants:
        rules.append(build({start: start_var, **fresh}))
        rules.append(build({start: start_var, **fresh, walk[-1]: "_d"}))
    return rules
