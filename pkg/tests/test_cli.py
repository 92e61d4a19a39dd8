import json
from datetime import date

import pandas as pd
import pytest

from src.cli.main import EXIT_USER_ERROR, build_parser, main, run_config
from src.core.errors import ConfigError
from src.learn.logistic import GlmModel
from src.utils.constants import UNDEFINED


@pytest.fixture
def workspace(tmp_path):
    out, cache = tmp_path / "out", tmp_path / "cache"
    assert main(["synth", "--out", str(out), "--cache-dir", str(cache), "--days", "40", "-q"]) == 0
    return out, cache, out / "synthetic" / "household.json"


def run(command, workspace, *extra):
    out, cache, config = workspace
    return main([command, "--config", str(config), "--out", str(out), "--cache-dir", str(cache), "-q", *extra])


def test_synth_writes_a_household(workspace, capsys):
    out, _, config = workspace
    assert config.is_file()
    assert (out / "synthetic" / "consumption.csv").is_file()
    expected = json.loads((out / "synthetic" / "expected.json").read_text())["expected"]
    assert expected["n_final_recommendations"] == 39
    assert expected["best_hour"] == 3


def test_ingest_then_recommend(workspace, capsys):
    out, _, _ = workspace
    capsys.readouterr()
    assert run("ingest", workspace) == 0
    assert "household: synthetic" in capsys.readouterr().out

    assert run("recommend", workspace, "--date", "2015-02-10") == 0
    first = capsys.readouterr().out
    assert run("recommend", workspace, "--date", "2015-02-10") == 0
    assert capsys.readouterr().out == first

    table = pd.read_csv(out / "synthetic" / "recommendations_2015-02-10.csv")
    assert table["device"].tolist() == ["appliance"]
    assert table["best_hour"].tolist() == [3]
    assert table["final_recommendation"].astype(str).tolist() == ["3"]
    models = out / "synthetic" / "models" / "2015-02-10"
    assert sorted(p.name for p in models.iterdir()) == ["availability.json", "usage_appliance.json"]
    assert GlmModel.load(models / "availability.json").trained_through == date(2015, 2, 9)
    assert GlmModel.load(models / "usage_appliance.json").trained_through == date(2015, 2, 9)


def test_recommend_needs_a_covered_date(workspace):
    assert run("ingest", workspace) == 0
    assert run("recommend", workspace, "--date", "2016-06-01") == EXIT_USER_ERROR
    assert run("recommend", workspace, "--date", "2014-12-31") == EXIT_USER_ERROR


def test_commands_need_an_ingested_household(workspace):
    assert run("evaluate", workspace) == EXIT_USER_ERROR


def test_missing_input_files_are_user_errors(tmp_path):
    config = tmp_path / "house.json"
    config.write_text(json.dumps({
        "household": "h1", "consumption_file": "missing.csv", "price_file": "missing_prices.csv",
        "devices": [{"channel": 1, "name": "kettle", "role": "availability", "on_threshold_watts": 50},
                    {"channel": 2, "name": "washer", "role": "shiftable", "on_threshold_watts": 100}],
    }))
    assert main(["ingest", "--config", str(config), "--cache-dir", str(tmp_path / "c"), "-q"]) == EXIT_USER_ERROR
    assert main(["ingest", "--config", str(tmp_path / "nope.json"), "-q"]) == EXIT_USER_ERROR


def test_bad_thresholds_are_user_errors(workspace):
    assert run("ingest", workspace) == 0
    assert run("recommend", workspace, "--date", "2015-02-01", "--availability-th", "1.5") == EXIT_USER_ERROR


def test_argument_errors_exit_through_argparse():
    with pytest.raises(SystemExit) as info:
        main(["recommend", "--config", "x.json", "--date", "01/02/2015"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0


def test_run_config_maps_flags():
    args = build_parser().parse_args(["gridsearch", "--config", "a.json", "--config", "b.json",
                                      "--availability-grid", "0.2,0.4", "--jobs", "3", "-q"])
    assert args.config[1].name == "b.json"
    assert args.availability_grid == [0.2, 0.4]
    with pytest.raises(ConfigError):
        run_config(args)


def test_evaluate_writes_reports(workspace, capsys):
    out, _, _ = workspace
    assert run("ingest", workspace) == 0
    assert run("evaluate", workspace, "--from", "2015-01-05") == 0
    report = pd.read_csv(out / "report.csv", keep_default_na=False)
    totals = report[report["device"] == "all"].iloc[0]
    assert int(totals["n_recommendations"]) == 36
    assert totals["availability_auc"] == UNDEFINED
    assert float(totals["relative_savings"]) == pytest.approx(1 - 35000 / 75000, abs=1e-6)
    document = json.loads((out / "report.json").read_text())
    assert document["settings"]["start"] == "2015-01-05"
    assert (out / "synthetic" / "savings.csv").is_file()


def test_gridsearch_writes_the_sensitivity_table(workspace):
    out, _, _ = workspace
    assert run("ingest", workspace) == 0
    assert run("gridsearch", workspace) == 0
    table = pd.read_csv(out / "synthetic" / "sensitivity.csv")
    assert len(table) == 49
    best = json.loads((out / "synthetic" / "best.json").read_text())["best"]
    assert best["total_savings"] == pytest.approx(table["total_savings"].max())
    timing = pd.read_csv(out / "synthetic" / "timing.csv")
    assert len(timing) == 7 * 24
    assert set(timing.loc[timing["hour"] == 3, "mean_price"]) == {10.0}
    assert set(timing.loc[timing["hour"] != 3, "mean_price"]) == {50.0}
    assert set(timing["mean_availability"]) == {1.0}


def test_coldstart_reports_the_framework(workspace):
    out, _, _ = workspace
    assert run("ingest", workspace) == 0
    assert run("coldstart", workspace, "--step", "3") == 0
    days = pd.read_csv(out / "synthetic" / "cold_start_days.csv", keep_default_na=False)
    assert days["agent"].tolist()[-1] == "framework"
    curves = pd.read_csv(out / "synthetic" / "cold_start_curves.csv")
    assert sorted(set(curves["train_days"])) == [1, 4, 7, 10]


def test_synth_evaluate_matches_planted_values(tmp_path):
    out = tmp_path / "out"
    assert main(["synth", "--out", str(out), "--cache-dir", str(tmp_path / "cache"), "--days", "30",
                 "--evaluate", "-q"]) == 0
    check = json.loads((out / "synthetic" / "synth_check.json").read_text())
    expected, measured = check["expected"], check["measured"]
    assert measured["n_recommendations"] == expected["n_final_recommendations"] == 29
    assert measured["acceptable_rate"] == expected["acceptable_rate"]
    assert measured["relative_savings"] == pytest.approx(expected["relative_savings"], abs=1e-6)


def test_coldstart_sweeps_several_tolerances(workspace):
    out, _, _ = workspace
    assert run("ingest", workspace) == 0
    assert run("coldstart", workspace, "--step", "3", "--tolerance", "0.3", "0.15", "0.05") == 0
    days = pd.read_csv(out / "synthetic" / "cold_start_days.csv", keep_default_na=False)
    framework = days[days["agent"] == "framework"]
    assert framework["tolerance"].tolist() == [0.3, 0.15, 0.05]
    for (agent, device), rows in days.groupby(["agent", "device"]):
        values = [float("inf") if v == UNDEFINED else int(v) for v in rows["cold_start_days"]]
        assert values == sorted(values), (agent, device)


def test_negative_tolerance_is_a_user_error(workspace):
    assert run("ingest", workspace) == 0
    assert run("coldstart", workspace, "--tolerance", "0.1", "-0.2") == EXIT_USER_ERROR


def test_mse_variant_help_names_the_divisors(capsys):
    with pytest.raises(SystemExit):
        main(["evaluate", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "divided by its k+1 hours (mean)" in text
    assert "or by k hours (literal, k+1 when k is 0)" in text
