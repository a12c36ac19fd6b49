import io
import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.cli import main
from src.cli.main import cli, parse_count, parse_sizes
from src.services.memdev_service import scm_device


@pytest.fixture
def runner():
    return CliRunner()


def csv_of(result):
    return pd.read_csv(io.StringIO(result.stdout))


@pytest.fixture
def trace_file(runner, tmp_path):
    path = tmp_path / "small.txt"
    result = runner.invoke(cli, [
        "gen-trace", "--n-pages", "256", "--alpha", "0.9", "--read-fraction", "0.8",
        "--footprint-mean", "8", "--contiguity", "0.5", "--records", "3000", "--seed", "1",
        "--out", str(path),
    ])
    assert result.exit_code == 0, result.output
    return path


def test_parsers():
    assert parse_count("5e9") == 5_000_000_000
    assert parse_sizes("64..512") == [64, 128, 256, 512]
    assert parse_sizes("1024,4096") == [1024, 4096]
    with pytest.raises(ValueError):
        parse_count("2.5")


def test_cost_report(runner):
    result = runner.invoke(cli, ["cost", "--table", "default", "--spec", "mlc:1/32",
                                 "--spec", "tlc:1/8", "--perf", "1.28,1.30"])
    assert result.exit_code == 0, result.output
    frame = csv_of(result)
    assert frame["total_cost"].tolist() == [0.72, 1.13]
    assert frame["perf_per_cost"].tolist()[0] == 1.78


def test_zipf_table(runner):
    result = runner.invoke(cli, ["zipf", "--alpha", "0.9", "--n", "5e7,5e9", "--coverage", "0.7", "--json"])
    assert result.exit_code == 0, result.output
    rows = json.loads(result.stdout)
    assert [round(r["hot_fraction"], 3) for r in rows] == [0.055, 0.043]


def test_amat_to_file(runner, tmp_path):
    out = tmp_path / "amat.csv"
    result = runner.invoke(cli, ["amat", "--t-act", "14,60", "--sizes", "64..8192", "--out", str(out), "--json"])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out)
    assert len(frame) == 16
    assert (tmp_path / "amat.json").exists()
    dram = frame[frame["t_act"] == 14].set_index("transfer_bytes")["amat_ns"]
    assert dram[1024] == pytest.approx(3.875)


def test_configuration_errors_exit_2(runner, tmp_path, trace_file):
    config = tmp_path / "zipf.json"
    config.write_text(json.dumps({"alpha": [0.9], "n": [1000], "coverage": 0.5, "bogus": 1}))
    result = runner.invoke(cli, ["zipf", "--config", str(config)])
    assert result.exit_code == 2
    assert "bogus" in result.output

    result = runner.invoke(cli, ["density", "--trace", str(trace_file), "--cache-fraction", "abc"])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["cost", "--spec", "flash"])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["miss-curve", "--trace", str(tmp_path / "missing.txt")])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["gen-trace", "--workload", "key-value"])
    assert result.exit_code == 2


def test_bad_device_and_fraction_exit_2(runner, tmp_path, trace_file):
    device = json.loads(scm_device(60, 150, 1024).to_json())
    device["row_buffer"] = 1000
    bad_device = tmp_path / "odd_rows.json"
    bad_device.write_text(json.dumps(device))
    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device", str(bad_device)])
    assert result.exit_code == 2

    broken = tmp_path / "broken.json"
    broken.write_text("{\"ranks\": 2,")
    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device", str(broken)])
    assert result.exit_code == 2

    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device",
                                 str(tmp_path / "missing.json")])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device", "slc",
                                 "--cache-device", str(tmp_path / "missing.json")])
    assert result.exit_code == 2

    result = runner.invoke(cli, ["cost", "--spec", "mlc:1/0"])
    assert result.exit_code == 2
    assert "1/0" in result.output


def test_command_line_overrides_json_config(runner, tmp_path):
    config = tmp_path / "zipf.json"
    config.write_text(json.dumps({"alpha": [0.9], "n": [1000], "coverage": 0.5}))
    result = runner.invoke(cli, ["zipf", "--config", str(config), "--coverage", "0.9"])
    assert result.exit_code == 0, result.output
    assert csv_of(result)["coverage"].tolist() == [0.9]


def test_trace_analyses(runner, trace_file):
    result = runner.invoke(cli, ["miss-curve", "--trace", str(trace_file), "--blocks", "64,4096"])
    assert result.exit_code == 0, result.output
    frame = csv_of(result)
    assert set(frame["block_bytes"]) == {64, 4096}
    assert frame["miss_ratio"].between(0, 1).all()

    result = runner.invoke(cli, ["density", "--trace", str(trace_file), "--regions", "256..1024"])
    assert result.exit_code == 0, result.output
    assert csv_of(result)["region_size"].tolist() == [256, 512, 1024]


def test_simulate(runner, trace_file):
    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device", "slc"])
    assert result.exit_code == 0, result.output
    row = csv_of(result).iloc[0]
    assert row["block_bytes"] == 1024
    assert 0 < row["miss_ratio"] <= 1

    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device", "planar_dram", "--direct"])
    assert result.exit_code == 0, result.output
    assert csv_of(result).iloc[0]["accesses"] == 3000

    result = runner.invoke(cli, ["simulate", "--trace", str(trace_file), "--device", "optane"])
    assert result.exit_code == 2


def test_explore_store_and_frontier(runner, tmp_path):
    db = tmp_path / "results.db"
    report = tmp_path / "report.csv"
    result = runner.invoke(cli, [
        "explore", "--workloads", "key-value", "--records", "3000", "--seed", "5",
        "--t-read", "60", "--t-write", "150,1000", "--row-buffers", "1024", "--jobs", "1",
        "--db", str(db), "--label", "smoke", "--frontier-out", str(tmp_path / "frontier.csv"),
        "--out", str(report),
    ])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(report)
    assert len(frame) == 2
    assert set(frame["workload"]) == {"key-value"}

    result = runner.invoke(cli, ["runs", "--db", str(db)])
    assert result.exit_code == 0, result.output
    assert "smoke" in result.output

    stored = runner.invoke(cli, ["frontier", "--db", str(db)])
    from_csv = runner.invoke(cli, ["frontier", "--report", str(report)])
    assert stored.exit_code == 0, stored.output
    assert from_csv.exit_code == 0, from_csv.output
    assert stored.stdout == from_csv.stdout

    result = runner.invoke(cli, ["frontier", "--db", str(db), "--report", str(report)])
    assert result.exit_code == 2


def test_invalid_environment(runner, tmp_path, monkeypatch):
    # --env-file replaces the module-level manager
    monkeypatch.setattr(main, "config_manager", main.config_manager)
    env_file = tmp_path / "bad.env"
    env_file.write_text("SCMX_TARGET_MARGIN=2\n")
    result = runner.invoke(cli, ["--env-file", str(env_file), "zipf", "--alpha", "1", "--n", "10",
                                 "--coverage", "0.5"], env={"SCMX_TARGET_MARGIN": ""})
    assert result.exit_code == 2
    assert "SCMX_TARGET_MARGIN" in result.output
