import json
import os

import numpy as np
import pytest

from blip4os.cli import RunConfig, build_parser, load_config, main
from blip4os.moments import load_moments, save_moments

LEAD_CSV = os.path.join(os.path.dirname(__file__), "..", "example", "lead.csv")


@pytest.fixture(scope="module")
def moment_file(tmp_path_factory, normal15):
    path = str(tmp_path_factory.mktemp("moments") / "normal-15.json")
    save_moments(normal15, path)
    return path


def _run(argv, tmp_path):
    out = str(tmp_path / "out.txt")
    code = main(argv + ["--cache-dir", str(tmp_path), "--out", out])
    text = open(out).read() if os.path.exists(out) else None
    return code, text


def test_estimate(tmp_path, moment_file):
    for data in ("lead", LEAD_CSV):
        code, text = _run(["estimate", "--data", data, "--log", "--r", "9",
                           "--moments", moment_file], tmp_path)
        assert code == 0
        record = json.loads(text)
        assert abs(record["mu_star"] - 2.253) <= 0.005
        assert abs(record["sigma_star"] - 1.696) <= 0.005
        assert abs(record["delta_hat"] - 1.328) <= 0.002
        assert record["delta_unstable"] is False


def test_estimate_scale(tmp_path, moment_file):
    code, text = _run(["estimate", "--data", "lead", "--log", "--r", "9",
                       "--mode", "scale", "--moments", moment_file], tmp_path)
    assert code == 0
    assert set(json.loads(text)) >= {"sigma_star", "var_sigma"}


def test_predict(tmp_path, moment_file):
    argv = ["predict", "--data", "lead", "--log", "--r", "9", "--targets", "10,15",
            "--delta", "plugin", "--moments", moment_file]
    code, text = _run(argv, tmp_path)
    assert code == 0
    record = json.loads(text)
    assert record["kind"] == "blip"
    assert record["targets"] == [10, 15]
    assert np.allclose(record["predictions"], [3.015, 5.151], atol=0.01)
    assert np.allclose(record["original_scale"], np.exp(record["predictions"]))
    assert record["mspe_units"] == "sigma2"
    assert abs(record["mspe"][0][0] - 0.0287) <= 0.002
    code, text = _run(argv + ["--mspe-units", "data"], tmp_path)
    assert code == 0
    scaled = json.loads(text)
    assert scaled["mspe_units"] == "data"
    assert scaled["mspe"][0][0] > record["mspe"][0][0]


def test_predict_kinds(tmp_path, moment_file):
    for kind in ("blup", "kaminsky", "scale_blip", "scale_blup"):
        code, text = _run(["predict", "--data", "lead", "--log", "--r", "9",
                           "--targets", "12", "--predictor", kind,
                           "--moments", moment_file], tmp_path)
        assert code == 0
        assert json.loads(text)["kind"] == kind


def test_invalid_input(tmp_path, moment_file, exponential5):
    code, __ = _run(["estimate", "--data", str(tmp_path / "missing.csv"),
                     "--r", "9", "--moments", moment_file], tmp_path)
    assert code == 2
    code, __ = _run(["predict", "--data", "lead", "--log", "--r", "9",
                     "--delta", "abc", "--moments", moment_file], tmp_path)
    assert code == 2
    code, __ = _run(["predict", "--data", "lead", "--log", "--r", "9",
                     "--targets", "9", "--delta", "1", "--moments", moment_file],
                    tmp_path)
    assert code == 2
    code, __ = _run(["predict", "--r", "9", "--delta", "plugin"], tmp_path)
    assert code == 2
    code, __ = _run(["efficiency", "--n", "15", "--r", "9", "--kind", "d",
                     "--targets", "10", "--moments", moment_file], tmp_path)
    assert code == 2
    single = tmp_path / "single.csv"
    single.write_text("value\n1.5\n")
    exp5 = str(tmp_path / "exponential-5.json")
    save_moments(exponential5, exp5)
    code, __ = _run(["predict", "--n", "5", "--r", "1", "--targets", "3",
                     "--delta", "plugin", "--data", str(single), "--moments", exp5,
                     "--family", "exponential"], tmp_path)
    assert code == 2


def test_moments(tmp_path):
    out = str(tmp_path / "exp5.json")
    assert main(["moments", "--family", "exponential", "--n", "5",
                 "--cache-dir", "none", "--out", out]) == 0
    ms = load_moments(out)
    assert ms.n == 5
    assert ms.method == "closed"


def test_efficiency_curve(tmp_path, moment_file):
    code, text = _run(["efficiency", "--kind", "trace", "--n", "15", "--r", "9",
                       "--targets", "14,15", "--grid", "0.5:1.5:0.5",
                       "--moments", moment_file], tmp_path)
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "delta,value,kind,n,r,targets"
    assert len(lines) == 4
    code, text = _run(["efficiency", "--kind", "re1", "--n", "15", "--r", "9",
                       "--targets", "10", "--report", "delta-star",
                       "--moments", moment_file], tmp_path)
    assert code == 0
    assert abs(json.loads(text)["delta_star"] - 0.8967) <= 0.005


def test_boundary_maximum_exit_code(tmp_path, moment_file):
    config = tmp_path / "config.yml"
    config.write_text("efficiency:\n    search_interval: [2.0, 10.0]\n")
    code, __ = _run(["efficiency", "--kind", "re1", "--n", "15", "--r", "9",
                     "--targets", "10", "--report", "delta-star",
                     "--config", str(config), "--moments", moment_file], tmp_path)
    assert code == 3


def test_simulate(tmp_path):
    code, text = _run(["simulate", "--family", "exponential", "--n", "5", "--r", "3",
                       "--targets", "5", "--reps", "10000", "--kinds", "blup,blip"],
                      tmp_path)
    assert code == 0
    record = json.loads(text)
    assert set(record["predictors"]) == {"blup", "blip"}
    assert record["plan"]["reps"] == 10000


def test_reproduce(tmp_path, moment_file):
    code, text = _run(["reproduce", "table1", "--moments", moment_file], tmp_path)
    assert code == 0
    assert text.splitlines()[0] == "quantity,s,published,computed,diff,tolerance,ok"


def test_config(tmp_path):
    config = load_config(None)
    assert config["efficiency"]["delta_max"] == 10.0
    path = tmp_path / "config.yml"
    path.write_text("simulate:\n    seed: 42\n")
    assert load_config(str(path))["simulate"]["seed"] == 42
    assert load_config(str(path))["simulate"]["reps"] == 10 ** 6
    with pytest.raises(OSError):
        load_config(str(tmp_path / "missing.yml"))
    args = build_parser().parse_args(["predict", "--targets", "10,11",
                                      "--delta", "0.5", "--cache-dir", "none"])
    cfg = RunConfig.from_args(args, load_config(str(path)))
    assert cfg.targets == [10, 11]
    assert cfg.delta == 0.5
    assert cfg.seed == 42
    assert cfg.cache_dir is None
    assert cfg.method_for_family == "quadrature"


def test_repeated_runs_are_identical(tmp_path, moment_file):
    for argv in (["predict", "--data", "lead", "--log", "--r", "9",
                  "--delta", "plugin", "--moments", moment_file],
                 ["reproduce", "table1", "--moments", moment_file]):
        first = _run(argv, tmp_path)
        second = _run(argv, tmp_path)
        assert first[0] == 0
        assert first == second
