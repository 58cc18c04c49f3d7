"""Fixture graphs and brute-force oracles shared by the test modules."""

from __future__ import annotations

import itertools
import random

from pathrules.graph import KnowledgeGraph, Vocabulary
from pathrules.rules import Atom, Rule, RuleStats, is_var, parse_rule

# mirrors the small example graph with the blue/green/red speaks(ed,d) paths
FIG1 = [
    ("ed", "speaks", "d"),
    ("ed", "married", "lisa"),
    ("lisa", "born", "a"),
    ("ed", "born", "a"),
    ("ed", "lives", "nl"),
    ("nl", "lang", "d"),
]

KG2 = [("x1", "b", "a1"), ("x2", "b", "a1"), ("x2", "h", "y1")]


def build_graph(triples, entities=None, relations=None) -> KnowledgeGraph:
    entities = entities if entities is not None else Vocabulary()
    relations = relations if relations is not None else Vocabulary()
    ids = [(entities.add(s), relations.add(r), entities.add(o)) for s, r, o in triples]
    return KnowledgeGraph(ids, entities, relations)


def rule(kg: KnowledgeGraph, text: str) -> Rule:
    parsed, _ = parse_rule(f"0\t0\t0\t{text}", kg.entities, kg.relations)
    return parsed


def ids(kg: KnowledgeGraph, *names: str):
    return tuple(kg.entities.get(n) for n in names)


def scaled_fig1(copies: int, seed: int = 0, redundant: bool = False) -> list[tuple[str, str, str]]:
    """Many disjoint people/country/language neighbourhoods shaped like the FIG1 graph.

    ``redundant`` adds an ``understands`` relation that mostly mirrors ``speaks``,
    so that length-1 cyclic rules exist.
    """
    rng = random.Random(seed)
    countries = [f"country{i}" for i in range(max(3, copies // 10))]
    triples = []
    for c in countries:
        triples.append((c, "lang", f"lang_{c}"))
    for i in range(copies):
        person, spouse = f"p{i}", f"q{i}"
        country = rng.choice(countries)
        city = f"city{rng.randrange(max(2, copies // 5))}"
        triples += [
            (person, "lives", country),
            (person, "married", spouse),
            (spouse, "born", city),
            (person, "born", city),
        ]
        if rng.random() < 0.8:
            triples.append((person, "speaks", f"lang_{country}"))
            if redundant and rng.random() < 0.9:
                triples.append((person, "understands", f"lang_{country}"))
        if rng.random() < 0.5:
            triples.append((spouse, "lives", country))
    return triples


def brute_force_groundings(triples: set, rule: Rule, entities, oi: bool) -> set[tuple[int, int]]:
    """All head groundings by trying every assignment of entities to rule variables."""
    variables = sorted(rule.variables)
    constants = sorted(rule.constants)
    result = set()
    for values in itertools.product(entities, repeat=len(variables)):
        theta = dict(zip(variables, values))
        if oi:
            bound = list(values) + constants
            if len(set(bound)) != len(bound):
                continue

        def sub(t):
            return theta[t] if is_var(t) else t

        if all((sub(a.left), a.relation, sub(a.right)) in triples for a in rule.body):
            result.add((sub(rule.head.left), sub(rule.head.right)))
    return result


def brute_force_stats(triples: set, rule: Rule, entities, oi: bool, laplace: float = 0) -> RuleStats:
    heads = brute_force_groundings(triples, rule, entities, oi)
    support = sum(1 for s, o in heads if (s, rule.relation, o) in triples)
    return RuleStats.from_counts(support, len(heads), laplace)


def random_path_rule(rng: random.Random, relations: list[int], entities: list[int], length: int,
                     kind: str) -> Rule:
    """A random well-formed path rule of the requested kind ('B', 'U_c', 'U_d')."""
    body_vars = ["A", "B", "C", "D", "E"]
    r = rng.choice(relations)
    if kind == "B":
        terms = ["X"] + body_vars[: length - 1] + ["Y"]
        head = Atom(r, "X", "Y")
    else:
        c = rng.choice(entities)
        subject_var = rng.random() < 0.5
        var = "X" if subject_var else "Y"
        head = Atom(r, var, c) if subject_var else Atom(r, c, var)
        if kind == "U_c":
            last = c if rng.random() < 0.3 else rng.choice(entities)
        else:
            last = body_vars[length - 1]
        terms = [var] + body_vars[: length - 1] + [last]
    body = []
    for i in range(length):
        a, b = terms[i], terms[i + 1]
        if rng.random() < 0.5:
            a, b = b, a
        body.append(Atom(rng.choice(relations), a, b))
    return Rule(head, tuple(body))


def alpha_equivalent(r1: Rule, r2: Rule) -> bool:
    """True iff some bijection of variables maps r1 onto r2 (body compared as a multiset)."""
    v1, v2 = sorted(r1.variables), sorted(r2.variables)
    if len(v1) != len(v2) or r1.constants != r2.constants or len(r1.body) != len(r2.body):
        return False
    for perm in itertools.permutations(v2):
        m = dict(zip(v1, perm))

        def ren(a):
            return Atom(a.relation, m.get(a.left, a.left) if is_var(a.left) else a.left,
                        m.get(a.right, a.right) if is_var(a.right) else a.right)

        if ren(r1.head) == r2.head and sorted(map(ren, r1.body), key=repr) == sorted(r2.body, key=repr):
            return True
    return False


# five test triples with hand-written predictions; filtered ranks worked out by hand:
#   a r x: heads a -> 1; tails b, e (train/valid answers) filtered, x -> 1
#   c r y: heads a, c -> 2; tails y missing
#   f s g: heads g, f -> 2; tails empty
#   g s f: heads f, g -> 2; tails f -> 1
#   a r z: heads c, a -> 2; tails x (test answer) filtered, z -> 1
EVAL_TRAIN = [("a", "r", "b"), ("c", "r", "d"), ("f", "t", "g")]
EVAL_VALID = [("a", "r", "e")]
EVAL_TEST = [("a", "r", "x"), ("c", "r", "y"), ("f", "s", "g"), ("g", "s", "f"), ("a", "r", "z")]
EVAL_PREDICTIONS = """a r x
Heads:\ta\t0.9000
Tails:\tb\t0.9000\te\t0.8000\tx\t0.7000
c r y
Heads:\ta\t0.5000\tc\t0.4000
Tails:\td\t0.9000\tq\t0.5000
f s g
Heads:\tg\t0.6000\tf\t0.5000
Tails:
g s f
Heads:\tf\t0.3000\tg\t0.2000
Tails:\tf\t0.9000
a r z
Heads:\tc\t0.7000\ta\t0.6000
Tails:\tx\t0.8000\tz\t0.6000
"""
EVAL_RANKS = [1, 1, 2, None, 2, None, 2, 1, 2, 1]
EVAL_EXPECTED = {"hits@1": 0.4, "hits@3": 0.8, "hits@10": 0.8, "mrr": 0.6}


def write_split(path, triples):
    path.write_text("".join(f"{s}\t{r}\t{o}\n" for s, r, o in triples), encoding="utf-8")
    return str(path)


def write_eval_fixture(directory):
    paths = {name: write_split(directory / f"{name}.txt", triples)
             for name, triples in (("train", EVAL_TRAIN), ("valid", EVAL_VALID), ("test", EVAL_TEST))}
    pred = directory / "predictions.txt"
    pred.write_text(EVAL_PREDICTIONS, encoding="utf-8")
    paths["predictions"] = str(pred)
    return paths
