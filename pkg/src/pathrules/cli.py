"""``engine learn|apply|eval -c CONFIG [-s key=value ...]``"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import Config, ConfigError, load_config
from .evaluate import PredictionFormatError, evaluate, format_report, read_predictions
from .graph import GraphLoadError, KnowledgeGraph, load_dataset
from .predict import Predictor, blocking_active, predict_all, rewrite_self_loops, write_predictions
from .rules import RuleParseError, read_rules
from .scheduler import run_learning

log = logging.getLogger("pathrules")


def _require(config: Config, *keys: str) -> None:
    missing = [k for k in keys if not getattr(config, k)]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")


def _rewritten(kg: KnowledgeGraph) -> KnowledgeGraph:
    return KnowledgeGraph(rewrite_self_loops(kg.triple_list, kg.entities), kg.entities, kg.relations)


def cmd_learn(config: Config) -> int:
    _require(config, "path_training")
    data = load_dataset(config.path_training)
    train = _rewritten(data.train)
    prefix = config.path_rules_output
    with open(f"{prefix}.log", "w", encoding="utf-8", newline="\n") as progress:
        snapshots = run_learning(train, config, prefix=prefix, log_stream=progress)
    for t, rules in sorted(snapshots.items()):
        log.info("snapshot %s: %d rules", t, len(rules))
    return 0


def cmd_apply(config: Config) -> int:
    _require(config, "path_training", "path_test", "path_rules")
    data = load_dataset(config.path_training, config.path_valid or None, config.path_test)
    train = _rewritten(data.train)
    rules = read_rules(config.path_rules, data.entities, data.relations)
    blocked = config.block_connected and blocking_active(data.train, data.valid)
    log.info("%d rules, connected-entity blocking %s", len(rules), "on" if blocked else "off")
    predictor = Predictor(train, rules, oi=config.oi, blocked=blocked)
    original = data.test.triple_list
    queries = rewrite_self_loops(original, data.entities)
    rankings = predict_all(predictor, queries, config.top_k, config.threads)
    write_predictions(config.path_predictions, original, rankings, data.entities, data.relations)
    return 0


def cmd_eval(config: Config) -> int:
    _require(config, "path_test", "path_predictions")
    data = load_dataset(config.path_training or None, config.path_valid or None, config.path_test)
    known = [kg.triple_names(t) for kg in (data.train, data.valid, data.test) for t in kg]
    test = [data.test.triple_names(t) for t in data.test]
    overall, per_relation = evaluate(read_predictions(config.path_predictions), test, known,
                                     config.hits, config.top_k)
    report = format_report(overall, per_relation if config.per_relation else None)
    if config.path_report:
        with open(config.path_report, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(report)
    sys.stdout.write(report)
    return 0


COMMANDS = {"learn": cmd_learn, "apply": cmd_apply, "eval": cmd_eval}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="engine", description="Learn path rules, apply them, evaluate predictions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", help="file of 'key = value' lines")
        p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration value (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config, args.set)
        return COMMANDS[args.command](config)
    except (ConfigError, GraphLoadError, RuleParseError, PredictionFormatError, OSError) as exc:
        print(f"engine: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
