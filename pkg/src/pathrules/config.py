"""``key = value`` configuration shared by the learn, apply and eval commands."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    pass


_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text: str) -> list[int]:
    return [int(float(x)) for x in text.replace(" ", "").split(",") if x]


def _number(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan")
    return value


@dataclass
class Config:
    path_training: str = ""
    path_valid: str = ""
    path_test: str = ""
    path_rules: str = ""
    path_rules_output: str = "rules"
    path_predictions: str = "predictions.txt"
    path_report: str = ""

    snapshots: list[int] = field(default_factory=lambda: [10, 100])
    span: float = 1.0
    span_paths: int = 0  # > 0: spans end after this many paths per core instead of wall-clock time
    threads: int = 1
    seed: int = 0

    policy: str = "weighted"  # weighted | greedy | random | saturation
    epsilon: float = 0.1
    reward: str = "s_times_c"  # s | s_times_c | s_times_c_2l
    saturation: float = 0.99

    profile: str = "default"  # default | wn
    max_length_cyclic: int = 3
    max_length_acyclic: int = 1
    constants: bool = True
    max_attempts: int = 5

    oi: bool = True
    laplace: float = 5
    min_support: int = 2
    min_confidence: float = 0.0001
    sample_anchors: float = 1000
    branch_limit: float = 50

    top_k: int = 100
    block_connected: bool = True
    hits: list[int] = field(default_factory=lambda: [1, 10])
    per_relation: bool = False

    def validate(self) -> Config:
        if self.policy not in ("weighted", "greedy", "random", "saturation"):
            raise ConfigError(f"policy: unknown value {self.policy!r}")
        if self.reward not in ("s", "s_times_c", "s_times_c_2l"):
            raise ConfigError(f"reward: unknown value {self.reward!r}")
        if self.profile not in ("default", "wn"):
            raise ConfigError(f"profile: unknown value {self.profile!r}")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError("epsilon: must be in [0, 1]")
        if not 0 < self.saturation < 1:
            raise ConfigError("saturation: must be in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")
        if self.span <= 0:
            raise ConfigError("span: must be > 0")
        if self.top_k < 1:
            raise ConfigError("top_k: must be >= 1")
        if self.sample_anchors < 1 or self.branch_limit < 1:
            raise ConfigError("sample_anchors and branch_limit must be >= 1")
        if self.laplace < 0:
            raise ConfigError("laplace: must be >= 0")
        if self.max_length_cyclic < 0 or self.max_length_acyclic < 0:
            raise ConfigError("max_length_*: must be >= 0")
        return self

    @property
    def duration(self) -> float:
        return float(max(self.snapshots)) if self.snapshots else 0.0


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


_CONVERTERS = {"str": str, "int": _int, "float": _number, "bool": _bool, "list[int]": _ints}


def _converter(name: str):
    # annotations are strings under postponed evaluation
    return _CONVERTERS[str(Config.__dataclass_fields__[name].type)]


def apply_settings(config: Config, pairs: list[tuple[str, str]]) -> Config:
    known = {f.name for f in fields(Config)}
    explicit = set()
    for key, value in pairs:
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            setattr(config, key, _converter(key)(value))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        explicit.add(key)
    if config.profile == "wn" and "max_length_cyclic" not in explicit:
        config.max_length_cyclic = 5
    return config.validate()


def parse_lines(lines) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split(" #", 1)[0].split("\t#", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(path=None, overrides: list[str] = ()) -> Config:
    pairs = []
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                pairs += parse_lines(handle)
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {path}") from None
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return apply_settings(Config(), pairs)
