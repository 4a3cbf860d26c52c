import json
import subprocess
import sys

import numpy as np
import pytest

from arena.errors import ConfigError
from arena.cli import main as cli_main
from arena.harness import config_hash, gap_report, run_scenario, validate_config


def test_validate_config_missing_keys():
    with pytest.raises(ConfigError, match="scenario"):
        validate_config({})
    with pytest.raises(ConfigError, match="horizon"):
        validate_config({"scenario": "example_6_2"})
    with pytest.raises(ConfigError, match="seeds"):
        validate_config({"scenario": "example_6_2", "horizon": 6})
    with pytest.raises(ConfigError, match="unknown scenario"):
        validate_config({"scenario": "nope", "horizon": 6, "seeds": [0]})


def test_bad_learner_kind_names_key(tmp_path):
    cfg = {
        "scenario": "fpa_standard_robustness", "horizon": 10, "seeds": [0],
        "instance": {"epsilon": 0.25, "n_bids": 5, "v_opt": 1.0, "values": [0.5], "probs": [1.0]},
        "learner": {"kind": "mystery"}, "optimizer": {"kind": "pure", "action": 2},
    }
    with pytest.raises(ConfigError, match="learner.kind"):
        run_scenario(cfg, out_dir=tmp_path)


def test_example_62_summary_value(tmp_path):
    cfg = {"scenario": "example_6_2", "horizon": 600, "seeds": [0]}
    result = run_scenario(cfg, out_dir=tmp_path / "out")
    assert result.summary["polytope_swap_regret"] == pytest.approx(100.0, abs=1e-8)
    files = {p.name for p in (tmp_path / "out").iterdir()}
    assert {"summary.json", "trace_seed0.csv", "plot_seed0.csv", "figure.png"} <= files


def test_stackelberg_only_summary(tmp_path):
    cfg = {
        "scenario": "stackelberg_only",
        "instance": {"epsilon": 0.25, "n_bids": 5, "v_opt": 1.0, "values": [0.5], "probs": [1.0]},
        "method": "both",
    }
    result = run_scenario(cfg, out_dir=tmp_path)
    assert result.summary["V"] == pytest.approx(0.5)
    assert result.summary["characterization_solution"]["value"] == pytest.approx(0.5)


def test_summary_determinism_modulo_wall_clock(tmp_path):
    cfg = {
        "scenario": "fpa_bayesian_exploit", "horizon": 600, "seeds": [0, 1],
        "instance": {"separation": {"m": 2, "epsilon": 0.25, "n_bids": 17}},
        "learner": {"kind": "hedge"}, "optimizer": {"kind": "exploit", "gamma": 0.01},
    }
    run_scenario(cfg, out_dir=tmp_path / "a")
    run_scenario(cfg, out_dir=tmp_path / "b")
    lines_a = (tmp_path / "a" / "summary.json").read_text().splitlines()
    lines_b = (tmp_path / "b" / "summary.json").read_text().splitlines()
    diff = [(x, y) for x, y in zip(lines_a, lines_b) if x != y]
    assert all("wall_clock_sec" in x for x, _ in diff)
    assert (tmp_path / "a" / "trace_seed1.csv").read_bytes() == \
        (tmp_path / "b" / "trace_seed1.csv").read_bytes()


def test_jobs_flag_matches_serial(tmp_path):
    cfg = {
        "scenario": "fpa_bayesian_exploit", "horizon": 300, "seeds": [0, 1],
        "instance": {"separation": {"m": 2, "epsilon": 0.25, "n_bids": 17}},
        "learner": {"kind": "ftl"}, "optimizer": {"kind": "exploit", "gamma": 0.01},
    }
    serial = run_scenario(cfg, out_dir=tmp_path / "serial", jobs=1)
    parallel = run_scenario(cfg, out_dir=tmp_path / "par", jobs=2)
    assert serial.summary["per_seed"] == parallel.summary["per_seed"]


def test_gap_report_requires_all_sizes(tmp_path):
    with pytest.raises(ConfigError, match="m=3"):
        gap_report({3: None})


def test_gap_report_rows(tmp_path):
    cfg = {
        "scenario": "fpa_bayesian_exploit", "horizon": 600, "seeds": [0, 1, 2],
        "instance": {"separation": {"m": 2, "epsilon": 0.25, "n_bids": 17}},
        "learner": {"kind": "hedge"}, "optimizer": {"kind": "exploit", "gamma": 0.01},
    }
    res = run_scenario(cfg)
    rows = gap_report({2: res.summary}, out_dir=tmp_path)
    assert rows[0]["m"] == 2
    assert rows[0]["seeds"] == 3
    assert rows[0]["V"] == pytest.approx(res.summary["V"])
    assert rows[0]["V"] <= 1.0 / 2 ** (2 - 3)  # commitment value never above 2^(3-m)
    assert (tmp_path / "gap_report.csv").exists()
    assert (tmp_path / "gap_report.png").exists()


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"scenario": "example_6_2", "horizon": 60, "seeds": [0]}))
    code = cli_main(["run", str(cfg_path), "--out", str(tmp_path / "out")])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["polytope_swap_regret"] == pytest.approx(10.0)

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli_main(["run", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err

    missing_key = tmp_path / "missing.json"
    missing_key.write_text(json.dumps({"scenario": "example_6_2", "horizon": 60}))
    assert cli_main(["run", str(missing_key)]) == 2
    assert "seeds" in capsys.readouterr().err


def test_cli_examples_and_regret_roundtrip(tmp_path, capsys):
    out = tmp_path / "ex"
    code = cli_main(["examples", "--which", "6.1", "--horizon", "80", "--out", str(out)])
    assert code == 0
    capsys.readouterr()
    code = cli_main(["regret", str(out / "trace_seed0.csv"), str(out / "game.json")])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["polytope_swap"] == pytest.approx((1 - 1 / 80) * 80 / 4, abs=1e-8)
    assert report["external"] == pytest.approx(0.0, abs=1e-9)


def test_cli_stackelberg_subcommand(tmp_path, capsys):
    inst = {"epsilon": 0.25, "n_bids": 5, "v_opt": 1.0, "values": [0.5], "probs": [1.0]}
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst))
    code = cli_main(["stackelberg", str(path), "--method", "both"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["V"] == pytest.approx(0.5)


def test_console_script_entrypoint(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "arena.cli", "examples", "--which", "6.2", "--horizon", "6",
         "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "summary.json").exists()


def test_config_hash_stable_under_key_order():
    a = {"scenario": "example_6_2", "horizon": 6, "seeds": [0]}
    b = {"seeds": [0], "horizon": 6, "scenario": "example_6_2"}
    assert config_hash(a) == config_hash(b)


def test_polytope_cap_scenario(tmp_path):
    cfg = {
        "scenario": "polytope_cap", "horizon": 400, "seeds": [0],
        "instance": {"separation": {"m": 2, "epsilon": 0.25, "n_bids": 17}},
        "cover": "monotone_capped",
        "learner": {"kind": "polytope_swap"},
        "optimizer": {"kind": "exploit", "gamma": 0.01},
    }
    result = run_scenario(cfg, out_dir=tmp_path)
    rec = result.summary["per_seed"][0]
    assert rec["decomposed_cover_regret"] <= rec["cover_regret_bound"]
    assert result.summary["V"] > 0


def test_standard_robustness_scenario(tmp_path):
    cfg = {
        "scenario": "fpa_standard_robustness", "horizon": 2000, "seeds": [0, 1],
        "instance": {"epsilon": 0.25, "n_bids": 5, "v_opt": 1.0, "values": [0.5], "probs": [1.0]},
        "learner": {"kind": "ftl"},
        "optimizer": {"kind": "static", "alpha": [0.2, 0.2, 0.2, 0.2, 0.2]},
    }
    result = run_scenario(cfg, out_dir=tmp_path)
    assert result.summary["V"] == pytest.approx(0.5)
    for rec in result.summary["per_seed"]:
        assert rec["optimizer_mean_per_round"] <= 0.5 + 0.05
