"""Anytime rule learning: time spans, path-profile bandit policies, rewards and snapshots.

Each span the available cores are allocated to path profiles.  Every core
samples paths of its profile, turns them into rules and scores the rules it
has not seen before.  At the span boundary the new rules are merged into the
store and each profile's Q-value becomes the reward of its genuinely new rules
divided by the cores it had.
"""

from __future__ import annotations

import logging
import math
import multiprocessing as mp
import random
import sys
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .config import Config
from .generalize import generalize, path_to_bottom_rule
from .graph import KnowledgeGraph
from .rules import Rule, RuleStats, canonical_key, write_rules
from .sampler import PathProfile, sample_path
from .scoring import GroundingConfig, passes_thresholds, score_rule

log = logging.getLogger(__name__)

REWARDS = ("s", "s_times_c", "s_times_c_2l")


def reward(new_rules: Iterable[tuple[Rule, RuleStats]], strategy: str) -> float:
    total = 0.0
    for rule, stats in new_rules:
        if strategy == "s":
            total += stats.support
        elif strategy == "s_times_c":
            total += stats.support * stats.confidence
        elif strategy == "s_times_c_2l":
            total += stats.support * stats.confidence / 2 ** rule.length
        else:
            raise ValueError(f"unknown reward strategy {strategy!r}")
    return total


def profile_q(raw_reward: float, cores_allocated: int) -> float:
    if cores_allocated < 1:
        raise ValueError("a profile without cores has no Q-value")
    return raw_reward / cores_allocated


@dataclass
class PolicyConfig:
    policy: str = "weighted"
    epsilon: float = 0.1
    saturation: float = 0.99

    @property
    def exploration(self) -> float:
        return 1.0 if self.policy == "random" else self.epsilon


def build_profiles(max_cyclic: int, max_acyclic: int, constants: bool = True) -> list[PathProfile]:
    profiles = [PathProfile(n, True) for n in range(1, max_cyclic + 1)]
    if constants:
        profiles += [PathProfile(n, False) for n in range(1, max_acyclic + 1)]
    return sorted(profiles, key=PathProfile.sort_key)


@dataclass
class StoredRule:
    rule: Rule
    stats: RuleStats
    profile: PathProfile
    span: int


@dataclass
class SchedulerState:
    profiles: list[PathProfile]
    # unused profiles start optimistic so that each is tried once
    q: dict[PathProfile, float] = field(default_factory=dict)
    last_used: dict[PathProfile, int] = field(default_factory=dict)
    store: dict[str, StoredRule] = field(default_factory=dict)
    # every rule key ever generated, scored or not
    seen: dict[str, RuleStats | None] = field(default_factory=dict)
    span: int = 0

    def __post_init__(self):
        for pf in self.profiles:
            self.q.setdefault(pf, math.inf)

    def rules(self) -> list[tuple[Rule, RuleStats]]:
        return [(s.rule, s.stats) for s in self.store.values()]


def weighted_probabilities(q: dict[PathProfile, float]) -> dict[PathProfile, float]:
    untried = [pf for pf, v in q.items() if math.isinf(v)]
    if untried:
        return {pf: (1 / len(untried) if pf in untried else 0.0) for pf in q}
    total = sum(q.values())
    if total <= 0:
        return {pf: 1 / len(q) for pf in q}
    return {pf: v / total for pf, v in q.items()}


def greedy_choice(q: dict[PathProfile, float]) -> PathProfile:
    return min(q, key=lambda pf: (-q[pf], pf.sort_key()))


def allocate(state: SchedulerState, policy: PolicyConfig, cores: int,
             rng: random.Random) -> dict[PathProfile, int]:
    """Assign each core to a profile: random with probability epsilon, else per policy."""
    if cores < 1:
        raise ValueError("need at least one core")
    profiles = state.profiles
    counts = dict.fromkeys(profiles, 0)
    q = {pf: state.q[pf] for pf in profiles}
    eps = policy.exploration
    greedy = greedy_choice(q) if policy.policy == "greedy" else None
    probs = weighted_probabilities(q) if policy.policy == "weighted" else None
    weights = [probs[pf] for pf in profiles] if probs else None
    for _ in range(cores):
        if eps > 0 and rng.random() < eps:
            pf = profiles[rng.randrange(len(profiles))]
        elif greedy is not None:
            pf = greedy
        elif weights is not None:
            pf = rng.choices(profiles, weights)[0]
        else:
            pf = profiles[rng.randrange(len(profiles))]
        counts[pf] += 1
    return {pf: n for pf, n in counts.items() if n}


def saturation_step(span_rules: set[str], known_rules: set[str] | dict, boundary: float) -> str:
    """'advance' when the share of this span's rules found before exceeds ``boundary``."""
    if not span_rules:
        return "keep"
    seen = sum(1 for key in span_rules if key in known_rules)
    return "advance" if seen / len(span_rules) > boundary else "keep"


class SaturationSchedule:
    """Alternates cyclic and acyclic spans; each side lengthens its paths once saturated."""

    def __init__(self, max_cyclic: int, max_acyclic: int, boundary: float):
        self.max = {True: max_cyclic, False: max_acyclic}
        self.length = {True: 1, False: 1}
        self.boundary = boundary
        self.next_cyclic = max_cyclic > 0

    def active(self) -> PathProfile:
        cyclic = self.next_cyclic
        if self.max[not cyclic] > 0:
            self.next_cyclic = not cyclic
        return PathProfile(self.length[cyclic], cyclic)

    def observe(self, profile: PathProfile, span_rules: set[str], known_rules) -> tuple[str, float]:
        ratio = (sum(1 for k in span_rules if k in known_rules) / len(span_rules)) if span_rules else 0.0
        decision = saturation_step(span_rules, known_rules, self.boundary)
        if decision == "advance" and self.length[profile.cyclic] < self.max[profile.cyclic]:
            self.length[profile.cyclic] += 1
        return decision, ratio


@dataclass
class SpanResult:
    profile: PathProfile
    generated: set[str]
    new: list[tuple[str, Rule, RuleStats]]
    paths: int


def mine_span(kg: KnowledgeGraph, profile: PathProfile, rng: random.Random, config: Config,
              known: dict[str, RuleStats | None], deadline: float | None = None,
              paths: int | None = None) -> SpanResult:
    """Sample paths of ``profile`` until the deadline (or path budget) and score unseen rules.

    ``known`` is this worker's cache of scored rule keys; it is updated in place.
    """
    grounding = grounding_config(config)
    triples = kg.triple_list
    generated: set[str] = set()
    new = []
    count = 0
    while True:
        if paths is not None:
            if count >= paths:
                break
        elif time.monotonic() >= deadline:
            break
        count += 1
        relation = triples[rng.randrange(len(triples))][1]
        path = sample_path(kg, relation, profile, rng, config.max_attempts)
        if path is None:
            continue
        bottom = path_to_bottom_rule(path)
        for rule in generalize(bottom, profile.cyclic, config.constants):
            key = canonical_key(rule)
            generated.add(key)
            if key in known:
                continue
            stats = score_rule(kg, rule, grounding, rng)
            known[key] = stats
            if passes_thresholds(stats, config.min_support, config.min_confidence):
                new.append((key, rule, stats))
    return SpanResult(profile, generated, new, count)


def grounding_config(config: Config) -> GroundingConfig:
    return GroundingConfig(mode="sampled", sample_anchors=config.sample_anchors,
                           branch_limit=config.branch_limit, laplace=config.laplace, oi=config.oi)


# worker processes inherit these through fork
_worker_kg: KnowledgeGraph | None = None
_worker_config: Config | None = None
_worker_known: dict[str, RuleStats | None] = {}


def _init_worker(kg, config):
    global _worker_kg, _worker_config, _worker_known
    _worker_kg, _worker_config, _worker_known = kg, config, {}


def _run_task(task):
    profile, seed, deadline, paths = task
    return mine_span(_worker_kg, profile, random.Random(seed), _worker_config, _worker_known, deadline, paths)


def _task_seed(seed: int, span: int, worker: int) -> str:
    return f"{seed}:{span}:{worker}"


def snapshot_name(prefix: str, seconds: float) -> str:
    label = int(seconds) if float(seconds).is_integer() else seconds
    return f"{prefix}-{label}"


class Learner:
    """Runs spans until the last snapshot time; usable step by step for tests."""

    def __init__(self, kg: KnowledgeGraph, config: Config, log_stream: TextIO | None = None):
        self.kg = kg
        self.config = config
        self.log_stream = sys.stderr if log_stream is None else log_stream
        self.policy = PolicyConfig(config.policy, config.epsilon, config.saturation)
        self.state = SchedulerState(build_profiles(config.max_length_cyclic, config.max_length_acyclic,
                                                   config.constants))
        self.rng = random.Random(config.seed)
        self.saturation = None
        if config.policy == "saturation":
            self.saturation = SaturationSchedule(config.max_length_cyclic,
                                                 config.max_length_acyclic if config.constants else 0,
                                                 config.saturation)
        self.pool = None
        self._header_written = False

    def __enter__(self):
        if self.config.threads > 1:
            ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
            self.pool = ctx.Pool(self.config.threads, initializer=_init_worker, initargs=(self.kg, self.config))
        return self

    def __exit__(self, *exc):
        if self.pool is not None:
            self.pool.terminate()
            self.pool.join()
            self.pool = None

    def allocation(self) -> dict[PathProfile, int]:
        if self.saturation is not None:
            return {self.saturation.active(): self.config.threads}
        return allocate(self.state, self.policy, self.config.threads, self.rng)

    def step(self) -> dict[PathProfile, int]:
        """Run one span and merge its results; returns the allocation used."""
        config, state = self.config, self.state
        alloc = self.allocation()
        tasks = []
        for pf in sorted(alloc, key=PathProfile.sort_key):
            tasks += [pf] * alloc[pf]
        paths = config.span_paths if config.span_paths > 0 else None
        deadline = None if paths else time.monotonic() + config.span
        args = [(pf, _task_seed(config.seed, state.span, i), deadline, paths) for i, pf in enumerate(tasks)]
        # in-process workers update ``seen`` while mining, so take the saturation baseline first
        known_before = set(state.seen) if self.saturation is not None else None
        if self.pool is None:
            results = [mine_span(self.kg, pf, random.Random(seed), config, state.seen, dl, n)
                       for pf, seed, dl, n in args]
        else:
            results = self.pool.map(_run_task, args)

        generated: dict[PathProfile, set[str]] = defaultdict(set)
        new_rules: dict[PathProfile, list[tuple[Rule, RuleStats]]] = defaultdict(list)
        for result in results:
            generated[result.profile] |= result.generated
            for key, rule, stats in result.new:
                if key not in state.store:
                    state.store[key] = StoredRule(rule, stats, result.profile, state.span)
                    new_rules[result.profile].append((rule, stats))
        for result in results:
            for key, rule, stats in result.new:
                state.seen.setdefault(key, stats)
            for key in result.generated:
                state.seen.setdefault(key, None)

        for pf, cores in alloc.items():
            raw = reward(new_rules[pf], config.reward)
            state.q[pf] = profile_q(raw, cores)
            state.last_used[pf] = state.span
            columns = [str(state.span), str(pf), str(cores), str(len(generated[pf])),
                       str(len(new_rules[pf])), f"{raw:.4f}", f"{state.q[pf]:.4f}"]
            if self.saturation is not None:
                span_keys = generated[pf]
                decision, ratio = self.saturation.observe(pf, span_keys, known_before)
                columns += [f"{ratio:.4f}", decision]
            self._log(columns)
        state.span += 1
        return alloc

    def _log(self, columns):
        if self.log_stream is None:
            return
        if not self._header_written:
            header = ["#span", "profile", "cores", "generated", "new", "reward", "q"]
            if self.saturation is not None:
                header += ["saturation", "decision"]
            self.log_stream.write("\t".join(header) + "\n")
            self._header_written = True
        self.log_stream.write("\t".join(columns) + "\n")
        self.log_stream.flush()

    def run(self, snapshot_times: Iterable[float] = (), prefix: str | None = None,
            duration: float | None = None) -> dict[float, list[tuple[Rule, RuleStats]]]:
        times = sorted(set(snapshot_times))
        duration = (times[-1] if times else 0.0) if duration is None else duration
        snapshots: dict[float, list[tuple[Rule, RuleStats]]] = {}
        pending = list(times)
        start = time.monotonic()
        virtual = self.config.span_paths > 0

        def elapsed():
            return self.state.span * self.config.span if virtual else time.monotonic() - start

        def flush(now):
            while pending and pending[0] <= now:
                t = pending.pop(0)
                snapshots[t] = self.state.rules()
                if prefix is not None:
                    write_rules(snapshots[t], snapshot_name(prefix, t), self.kg.entities, self.kg.relations)

        flush(elapsed())
        if not self.kg.triple_list or not self.state.profiles:
            duration = 0
        while elapsed() < duration:
            self.step()
            flush(elapsed())
        flush(math.inf)
        return snapshots


def run_learning(kg: KnowledgeGraph, config: Config, snapshot_times: Iterable[float] | None = None,
                 prefix: str | None = None, log_stream: TextIO | None = None,
                 duration: float | None = None) -> dict[float, list[tuple[Rule, RuleStats]]]:
    times = config.snapshots if snapshot_times is None else list(snapshot_times)
    with Learner(kg, config, log_stream) as learner:
        return learner.run(times, prefix, duration)
