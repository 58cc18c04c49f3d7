import subprocess
import sys

import pytest

from pathrules.cli import main
from pathrules.config import ConfigError, load_config

from helpers import EVAL_TEST, FIG1, scaled_fig1, write_eval_fixture, write_split


@pytest.fixture
def data(tmp_path):
    triples = scaled_fig1(40, seed=1)
    rest = [t for t in triples if t[1] == "speaks"][:6]
    train = [t for t in triples if t not in rest]
    return {"train": write_split(tmp_path / "train.txt", train),
            "valid": write_split(tmp_path / "valid.txt", rest[:2]),
            "test": write_split(tmp_path / "test.txt", rest[2:]),
            "dir": tmp_path}


def _config(path, **settings):
    path.write_text("# test configuration\n" + "".join(f"{k} = {v}\n" for k, v in settings.items()),
                    encoding="utf-8")
    return str(path)


def test_learn_writes_named_snapshots(data):
    out = data["dir"] / "rules"
    cfg = _config(data["dir"] / "learn.conf", path_training=data["train"], path_rules_output=out,
                  snapshots="2,5", span_paths=50, min_support=1)
    assert main(["learn", "-c", cfg]) == 0
    assert (data["dir"] / "rules-2").exists() and (data["dir"] / "rules-5").exists()
    assert (data["dir"] / "rules.log").read_text().startswith("#span")
    assert len((data["dir"] / "rules-5").read_text().splitlines()) >= len((data["dir"] / "rules-2").read_text().splitlines())


def test_learn_is_byte_identical(data):
    outputs = []
    for run in range(2):
        out = data["dir"] / f"run{run}"
        cfg = _config(data["dir"] / f"r{run}.conf", path_training=data["train"], path_rules_output=out,
                      snapshots=4, span_paths=40, seed=7, threads=1)
        assert main(["learn", "-c", cfg]) == 0
        outputs.append((data["dir"] / f"run{run}-4").read_bytes())
    assert outputs[0] == outputs[1] and outputs[0]


def test_unknown_key_is_an_error(tmp_path, capsys):
    cfg = _config(tmp_path / "bad.conf", path_training="x", snapshot="10")
    assert main(["learn", "-c", cfg]) == 2
    assert "snapshot" in capsys.readouterr().err


def test_missing_file_is_an_error(tmp_path, capsys):
    assert main(["learn", "-s", f"path_training={tmp_path / 'nope.txt'}"]) == 2
    assert "nope.txt" in capsys.readouterr().err
    assert main(["learn", "-c", str(tmp_path / "missing.conf")]) == 2


def test_wn_profile_sets_cyclic_length():
    assert load_config(overrides=["profile=wn"]).max_length_cyclic == 5
    assert load_config(overrides=["profile=wn", "max_length_cyclic=4"]).max_length_cyclic == 4
    assert load_config().max_length_cyclic == 3
    with pytest.raises(ConfigError):
        load_config(overrides=["policy=best"])


def test_every_hyperparameter_is_configurable():
    keys = ["span", "epsilon", "policy", "reward", "saturation", "max_length_cyclic", "max_length_acyclic",
            "laplace", "min_support", "min_confidence", "sample_anchors", "branch_limit", "threads", "seed",
            "snapshots", "top_k", "oi"]
    cfg = load_config(overrides=[f"{k}={v}" for k, v in zip(keys, [
        "2", "0.2", "greedy", "s", "0.9", "4", "2", "3", "5", "0.01", "100", "10", "2", "9", "1,2", "7", "off"])])
    assert (cfg.span, cfg.epsilon, cfg.policy, cfg.reward, cfg.oi, cfg.snapshots) == (2.0, 0.2, "greedy", "s", False, [1, 2])


def test_apply_and_eval(data, capsys):
    rules_prefix = data["dir"] / "rules"
    base = dict(path_training=data["train"], path_valid=data["valid"], path_test=data["test"],
                path_rules_output=rules_prefix, path_rules=f"{rules_prefix}-3",
                path_predictions=data["dir"] / "pred.txt", snapshots=3, span_paths=60, top_k=5)
    cfg = _config(data["dir"] / "all.conf", **base)
    assert main(["learn", "-c", cfg]) == 0
    assert main(["apply", "-c", cfg]) == 0
    lines = (data["dir"] / "pred.txt").read_text().splitlines()
    test = (data["dir"] / "test.txt").read_text().splitlines()
    assert len(lines) == 3 * len(test)
    for i, raw in enumerate(test):
        assert lines[3 * i] == raw.replace("\t", " ")
        assert lines[3 * i + 1].startswith("Heads:") and lines[3 * i + 2].startswith("Tails:")
        for line in lines[3 * i + 1:3 * i + 3]:
            fields = line.split("\t")[1:]
            assert len(fields) <= 2 * 5
            confs = [float(c) for c in fields[1::2]]
            assert confs == sorted(confs, reverse=True)
    capsys.readouterr()
    assert main(["eval", "-c", cfg]) == 0
    rows = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert rows == ["hits@1", "hits@10", "mrr"]


def test_eval_fixture_with_three_cutoffs(tmp_path, capsys):
    paths = write_eval_fixture(tmp_path)
    report = tmp_path / "report.txt"
    code = main(["eval", "-s", f"path_training={paths['train']}", "-s", f"path_valid={paths['valid']}",
                 "-s", f"path_test={paths['test']}", "-s", f"path_predictions={paths['predictions']}",
                 "-s", "hits=1,3,10", "-s", f"path_report={report}"])
    assert code == 0
    assert report.read_text().splitlines() == ["hits@1\t40.00", "hits@3\t80.00", "hits@10\t80.00", "mrr\t0.6000"]
    assert len(EVAL_TEST) == 5


def test_self_loops_round_trip(tmp_path):
    train = write_split(tmp_path / "train.txt", FIG1 + [("ed", "likes", "ed")])
    test = write_split(tmp_path / "test.txt", [("lisa", "likes", "lisa")])
    rules = tmp_path / "rules.txt"
    rules.write_text("1\t1\t0.5000\tlikes(X,__self__) <= born(X,a)\n", encoding="utf-8")
    pred = tmp_path / "pred.txt"
    assert main(["apply", "-s", f"path_training={train}", "-s", f"path_test={test}", "-s", f"path_rules={rules}",
                 "-s", f"path_predictions={pred}"]) == 0
    # likes(lisa,self) is predicted and written back as likes(lisa,lisa); ed is excluded as a training fact
    assert pred.read_text().splitlines() == ["lisa likes lisa", "Heads:\tlisa\t0.5000", "Tails:\tlisa\t0.5000"]


def test_console_script_help():
    result = subprocess.run([sys.executable, "-m", "pathrules.cli", "--help"], capture_output=True, text=True)
    assert result.returncode == 0
    assert "learn" in result.stdout
