"""Path rules: binary rules (B) and unary rules ending in a dangling atom (U_d) or a constant (U_c).

Terms are either variables (``str``, a single capital letter) or constants
(``int`` entity ids).  Object Identity constraints are implicit: every pair of
distinct terms in a rule is assumed to denote distinct entities.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Union

from .graph import Vocabulary

Term = Union[str, int]

HEAD_SUBJECT = "X"
HEAD_OBJECT = "Y"
# body variables, in order of appearance along the path
BODY_VARIABLES = [c for c in "ABCDEFGHIJKLMNOPQRSTUVWZ"]


class RuleError(ValueError):
    pass


class RuleParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at column {position})")
        self.position = position


class RuleKind(enum.Enum):
    B = "B"
    U_C = "U_c"
    U_D = "U_d"

    def __str__(self):
        return self.value


def is_var(term: Term) -> bool:
    return isinstance(term, str)


class Atom(NamedTuple):
    relation: int
    left: Term
    right: Term

    def terms(self) -> tuple[Term, Term]:
        return self.left, self.right


@dataclass(frozen=True)
class RuleStats:
    support: int
    body_groundings: int
    confidence: float

    @classmethod
    def from_counts(cls, support: int, body_groundings: int, laplace: float = 0.0) -> RuleStats:
        denominator = body_groundings + laplace
        confidence = support / denominator if denominator > 0 else 0.0
        return cls(support, body_groundings, confidence)


class Chain(NamedTuple):
    """A rule body read as a path ``terms[0] -atoms[0]- terms[1] ... terms[n]``.

    ``forward[i]`` is true when ``atoms[i]`` is ``r(terms[i], terms[i+1])``.
    ``terms[0]`` is always a head variable.
    """

    terms: tuple[Term, ...]
    relations: tuple[int, ...]
    forward: tuple[bool, ...]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Atom, ...]

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))

    @property
    def length(self) -> int:
        return len(self.body)

    @property
    def relation(self) -> int:
        return self.head.relation

    @cached_property
    def kind(self) -> RuleKind:
        return classify(self.head, self.body)

    @cached_property
    def chain(self) -> Chain:
        return _chain_for(self.head, self.body)

    @property
    def head_constant(self) -> int | None:
        for term in self.head.terms():
            if not is_var(term):
                return term
        return None

    @property
    def constants(self) -> set[int]:
        found = {t for t in self.head.terms() if not is_var(t)}
        for atom in self.body:
            found.update(t for t in atom.terms() if not is_var(t))
        return found

    @property
    def variables(self) -> set[str]:
        found = {t for t in self.head.terms() if is_var(t)}
        for atom in self.body:
            found.update(t for t in atom.terms() if is_var(t))
        return found

    def is_ground(self) -> bool:
        return not self.variables


def _walk(start: Term, body: tuple[Atom, ...] | list[Atom]) -> Chain:
    terms = [start]
    relations, forward = [], []
    current = start
    for atom in body:
        if atom.left == atom.right:
            raise RuleError("atom with a repeated term")
        if atom.left == current:
            nxt, fwd = atom.right, True
        elif atom.right == current:
            nxt, fwd = atom.left, False
        else:
            raise RuleError("body is not a path starting from the head variable")
        terms.append(nxt)
        relations.append(atom.relation)
        forward.append(fwd)
        current = nxt
    return Chain(tuple(terms), tuple(relations), tuple(forward))


def _chain_for(head: Atom, body) -> Chain:
    body = tuple(body)
    if not body:
        raise RuleError("empty body")
    starts = [t for t in head.terms() if is_var(t)]
    if not starts:
        raise RuleError("head has no variable")
    if len(starts) == 2 and starts[0] == starts[1]:
        raise RuleError("head with a repeated variable")
    last_error = None
    for start in starts:
        try:
            chain = _walk(start, body)
        except RuleError as exc:
            last_error = exc
            continue
        _check_chain(head, chain)
        return chain
    raise last_error


def _check_chain(head: Atom, chain: Chain) -> None:
    head_terms = set(head.terms())
    interior = chain.terms[1:-1]
    for term in interior:
        if not is_var(term):
            raise RuleError("constant inside the body path")
        if term in head_terms:
            raise RuleError("head variable inside the body path")
    if len(set(interior)) != len(interior) or chain.terms[0] in interior:
        raise RuleError("body path revisits a variable")


def classify(head: Atom, body) -> RuleKind:
    """Return the rule kind or raise :class:`RuleError` if no schema matches."""
    chain = _chain_for(head, body)
    last = chain.terms[-1]
    head_vars = [t for t in head.terms() if is_var(t)]
    if len(head_vars) == 2:
        other = head_vars[1] if chain.terms[0] == head_vars[0] else head_vars[0]
        if last != other:
            raise RuleError("binary rule whose body does not connect both head variables")
        return RuleKind.B
    if not is_var(last):
        return RuleKind.U_C
    if last == chain.terms[0] or last in chain.terms[1:-1] or last in head.terms():
        raise RuleError("unary rule with a closed variable path")
    return RuleKind.U_D


def canonical_key(rule: Rule) -> str:
    """String key identical for rules that differ only by a renaming of variables."""
    names: dict[str, str] = {}

    def term_key(term: Term) -> str:
        if is_var(term):
            if term not in names:
                names[term] = f"V{len(names)}"
            return names[term]
        return f"#{term}"

    parts = []
    for atom in (rule.head, *rule.body):
        parts.append(f"{atom.relation}({term_key(atom.left)},{term_key(atom.right)})")
    return parts[0] + "<-" + ",".join(parts[1:])


def normalize_variables(head: Atom, body) -> Rule:
    """Rename variables to the display convention: X/Y in the head, A, B, ... along the body."""
    mapping: dict[str, str] = {}
    if is_var(head.left):
        mapping[head.left] = HEAD_SUBJECT
    if is_var(head.right):
        mapping[head.right] = HEAD_OBJECT
    fresh = iter(BODY_VARIABLES)
    for atom in body:
        for term in atom.terms():
            if is_var(term) and term not in mapping:
                mapping[term] = next(fresh)

    def rename(atom: Atom) -> Atom:
        return Atom(atom.relation,
                    mapping.get(atom.left, atom.left) if is_var(atom.left) else atom.left,
                    mapping.get(atom.right, atom.right) if is_var(atom.right) else atom.right)

    return Rule(rename(head), tuple(rename(a) for a in body))


def format_atom(atom: Atom, entities: Vocabulary, relations: Vocabulary) -> str:
    def term(t: Term) -> str:
        return t if is_var(t) else entities.name(t)

    return f"{relations.name(atom.relation)}({term(atom.left)},{term(atom.right)})"


def format_rule_body(rule: Rule, entities: Vocabulary, relations: Vocabulary) -> str:
    head = format_atom(rule.head, entities, relations)
    body = ", ".join(format_atom(a, entities, relations) for a in rule.body)
    return f"{head} <= {body}"


def format_rule(rule: Rule, stats: RuleStats, entities: Vocabulary, relations: Vocabulary) -> str:
    return (f"{stats.support}\t{stats.body_groundings}\t{stats.confidence:.4f}\t"
            f"{format_rule_body(rule, entities, relations)}")


_VARIABLE = re.compile(r"[A-Z]")
_ATOM = re.compile(r"([^\s(][^(]*?)\((.*?)\)(?=, |\s*$)")


def _parse_term(text: str, entities: Vocabulary) -> Term:
    if _VARIABLE.fullmatch(text):
        return text
    return entities.add(text)


def _split_args(inner: str) -> tuple[str, str] | None:
    candidates = [i for i, ch in enumerate(inner) if ch == ","]
    if not candidates:
        return None
    # entity names may contain commas; prefer the split that isolates a variable
    for i in candidates:
        left, right = inner[:i], inner[i + 1:]
        if _VARIABLE.fullmatch(left) or _VARIABLE.fullmatch(right):
            return left, right
    i = candidates[0]
    return inner[:i], inner[i + 1:]


def _parse_atoms(text: str, offset: int, entities: Vocabulary, relations: Vocabulary) -> list[Atom]:
    atoms = []
    pos = 0
    while pos < len(text):
        match = _ATOM.match(text, pos)
        if match is None:
            raise RuleParseError("malformed atom", offset + pos)
        args = _split_args(match.group(2))
        if args is None:
            raise RuleParseError("atom needs two arguments", offset + match.start(2))
        left, right = args
        if not left or not right:
            raise RuleParseError("empty argument", offset + match.start(2))
        atoms.append(Atom(relations.add(match.group(1)), _parse_term(left, entities),
                          _parse_term(right, entities)))
        pos = match.end()
        if text.startswith(", ", pos):
            pos += 2
        elif text[pos:].strip():
            raise RuleParseError("expected ', ' between atoms", offset + pos)
        else:
            break
    return atoms


def parse_rule(line: str, entities: Vocabulary, relations: Vocabulary) -> tuple[Rule, RuleStats]:
    """Inverse of :func:`format_rule`.  Unknown names are added to the dictionaries."""
    line = line.rstrip("\n")
    fields = line.split("\t", 3)
    if len(fields) != 4:
        raise RuleParseError("expected support, body groundings, confidence and rule", len(line))
    offset = 0
    numbers = []
    for field, cast in zip(fields[:3], (int, int, float)):
        try:
            numbers.append(cast(field))
        except ValueError:
            raise RuleParseError(f"bad number {field!r}", offset) from None
        offset += len(field) + 1
    text = fields[3]
    arrow = text.find(" <= ")
    if arrow < 0:
        raise RuleParseError("missing '<='", offset)
    head = _parse_atoms(text[:arrow], offset, entities, relations)
    if len(head) != 1:
        raise RuleParseError("head must be a single atom", offset)
    body = _parse_atoms(text[arrow + 4:], offset + arrow + 4, entities, relations)
    if not body:
        raise RuleParseError("empty body", offset + arrow + 4)
    support, groundings, confidence = numbers
    return Rule(head[0], tuple(body)), RuleStats(support, groundings, confidence)


def read_rules(path, entities: Vocabulary, relations: Vocabulary) -> list[tuple[Rule, RuleStats]]:
    rules = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rules.append(parse_rule(line, entities, relations))
            except RuleParseError as exc:
                raise RuleParseError(f"{path}:{lineno}: {exc}", exc.position) from None
    return rules


def write_rules(rules, path, entities: Vocabulary, relations: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for rule, stats in rules:
            handle.write(format_rule(rule, stats, entities, relations) + "\n")
