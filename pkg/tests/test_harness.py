import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from unbiased_market import ConfigError
from unbiased_market.harness import EXPERIMENTS, ScenarioConfig, component_seed, config_from_dict, load_config
from unbiased_market.harness.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
FAST = ["--runs", "2000"]


def invoke(*args):
    return CliRunner().invoke(main, list(args))


class TestConfig:
    def test_reference_file_equals_defaults(self):
        assert load_config(CONFIGS / "reference.yaml") == ScenarioConfig()

    def test_json_accepted(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"runs": 5, "seed": 3}))
        cfg = load_config(p)
        assert (cfg.runs, cfg.seed) == (5, 3)

    @pytest.mark.parametrize(
        "raw",
        [
            {"bogus": 1},
            {"runs": 0},
            {"menu_mode": "fancy"},
            {"ks": [0]},
            {"population": {"cohorts": [{"name": "a", "fraction": 0.4, "cost": {"kind": "point", "value": 0}}]}},
            {"population": {"cohorts": [{"name": "a", "fraction": 1.0, "cost": {"kind": "zipf"}}]}},
            {"grid": {"qs": [0.5, 0.2], "xs": [1], "ys": [0.1]}},
            [1, 2],
        ],
    )
    def test_invalid(self, raw):
        with pytest.raises(ConfigError):
            config_from_dict(raw)

    def test_component_seeds_independent_of_each_other(self):
        a = component_seed(1, "population")
        assert a == component_seed(1, "population")
        assert a != component_seed(1, "sampling") and a != component_seed(2, "population")
        assert 0 <= a < 2**64


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_every_subcommand_passes(name, tmp_path):
    res = invoke(name, "--out", str(tmp_path), *FAST)
    assert res.exit_code == 0, res.output
    assert f"[{name}]" in res.output and "FAIL" not in res.output


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_byte_identical_reruns(name, tmp_path):
    for d in ("a", "b"):
        assert invoke(name, "--out", str(tmp_path / d), "--seed", "99", *FAST).exit_code == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_changes_random_outputs(tmp_path):
    invoke("section3", "--out", str(tmp_path / "a"), "--seed", "1", *FAST)
    invoke("section3", "--out", str(tmp_path / "b"), "--seed", "2", *FAST)
    a = (tmp_path / "a" / "section3_runs.csv").read_bytes()
    assert a != (tmp_path / "b" / "section3_runs.csv").read_bytes()


def test_missing_config_exits_2(tmp_path):
    res = invoke("figure1", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path))
    assert res.exit_code == 2


def test_bad_config_exits_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("runs: -4\n")
    assert invoke("menu", "--config", str(p), "--out", str(tmp_path)).exit_code == 2


def test_non_reference_scenario_rejected_by_figure1(tmp_path):
    res = invoke("figure1", "--config", str(CONFIGS / "risk_neutral.yaml"), "--out", str(tmp_path))
    assert res.exit_code == 2


def test_loose_epsilon_breaks_figure1_precondition(tmp_path):
    # epsilon 0.6 discovers x_bar = 1, which is not the reference scenario
    p = tmp_path / "loose.yaml"
    p.write_text("epsilon: 0.6\n")
    assert invoke("figure1", "--config", str(p), "--out", str(tmp_path)).exit_code == 2


def test_failed_check_exits_1(tmp_path, monkeypatch):
    from unbiased_market.harness import cli
    from unbiased_market.harness.experiments import ExperimentReport

    def failing(config, out_dir):
        report = ExperimentReport("menu")
        report.checks["always_fails"] = False
        return report

    monkeypatch.setitem(cli.EXPERIMENTS, "menu", failing)
    res = invoke("menu", "--out", str(tmp_path))
    assert res.exit_code == 1 and "always_fails: FAIL" in res.output


def test_small_runs_warn(tmp_path):
    res = invoke("unbiasedness", "--out", str(tmp_path), "--runs", "50")
    assert "warning" in res.output.lower()


def test_figure1_csv_columns(tmp_path):
    invoke("figure1", "--out", str(tmp_path))
    header = (tmp_path / "figure1.csv").read_text().splitlines()[0]
    assert header == "k,optimal_per_point,baseline_per_point,lower_bound"
