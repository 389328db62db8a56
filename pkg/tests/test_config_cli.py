import json
import subprocess
import sys

import pytest

from shavlab.cli import main
from shavlab.config import BUDGETS, SUBCOMMANDS, ConfigError, RunConfig, parse_params
from shavlab.suites import REGISTRY, select


def _run(*args):
    return subprocess.run([sys.executable, "-m", "shavlab", *args], capture_output=True, text=True)


def test_unknown_subcommand_exit_2():
    r = _run("run", "nonsense")
    assert r.returncode == 2


def test_bad_param_exit_2(tmp_path):
    assert main(["run", "special-fn", "--param", "bogus=1", "--out", str(tmp_path), "--quiet"]) == 2
    assert main(["run", "special-fn", "--param", "noequals", "--out", str(tmp_path), "--quiet"]) == 2
    assert main(["run", "special-fn", "--workers", "0", "--out", str(tmp_path), "--quiet"]) == 2


def test_parse_params():
    assert parse_params(["wiener_N=5000", "s3_ns=[2,4]"]) == {"wiener_N": 5000, "s3_ns": [2, 4]}
    with pytest.raises(ConfigError):
        parse_params(["nope=1"])


def test_sizes_override_and_seed():
    cfg = RunConfig(budget="smoke", params={"s3_ns": [2, 4, 8], "wiener_N": "300"})
    assert cfg.sizes.s3_ns == (2, 4, 8) and cfg.sizes.wiener_N == 300
    assert cfg.check_seed("a") != cfg.check_seed("b")
    assert cfg.check_seed("a") == RunConfig(seed=42).check_seed("a")
    assert "workers" not in cfg.to_json() and "out" not in cfg.to_json()


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(subcommand="x")
    with pytest.raises(ConfigError):
        RunConfig(tolerance_scale=0)
    assert set(BUDGETS) == {"smoke", "standard", "full"}


def test_every_check_in_exactly_one_subcommand():
    groups = {c.group for c in REGISTRY.values()}
    assert groups == set(SUBCOMMANDS)
    union = sorted(c.id for sub in SUBCOMMANDS for c in select(sub))
    assert union == sorted(REGISTRY) == [c.id for c in select("all")]


def test_env_default_out(monkeypatch, tmp_path):
    monkeypatch.setenv("SHAV_LAB_OUT", str(tmp_path))
    assert RunConfig().out == str(tmp_path)


def test_report_layout(tmp_path):
    assert main(["run", "special-fn", "--budget", "smoke", "--out", str(tmp_path), "--quiet"]) == 0
    lines = (tmp_path / "report-special-fn.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    assert head["id"] == "_config" and head["config"]["seed"] == 42
    ids = [json.loads(l)["id"] for l in lines[1:]]
    assert ids == sorted(ids) and all(i.startswith("sf.") for i in ids)
    assert (tmp_path / "sf.T_ratio.T_n.csv").exists()
    assert (tmp_path / "report-special-fn.meta.json").exists()


def test_failing_suite_exit_1_and_report_written(tmp_path):
    # an absurdly tight tolerance makes at least one check fail
    rc = main(["run", "special-fn", "--budget", "smoke", "--tolerance-scale", "1e-30",
               "--out", str(tmp_path), "--quiet"])
    assert rc == 1 and (tmp_path / "report-special-fn.jsonl").exists()


def test_smoke_all_deterministic_across_runs_and_workers(tmp_path):
    outs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 4)):
        d = tmp_path / name
        _run("run", "all", "--seed", "7", "--budget", "smoke", "--workers", str(workers), "--out", str(d),
             "--quiet")
        outs.append((d / "report-all.jsonl").read_bytes())
    assert outs[0] == outs[1] == outs[2]
