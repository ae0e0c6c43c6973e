import csv
import subprocess
import sys

import pytest
import yaml

from mmrqs import cli
from mmrqs.config import ConfigError, bundled, load_config, sweep_points, validate_config

SIGNALS = {"model": "signals",
           "params": {"servers": 4, "resources": 8, "arrival_rate": 2.0, "signal_rate": 0.5,
                      "demand": [0, 0.5, 0.3, 0.2]},
           "simulation": {"seed": 5, "measured_events": 20000}}


def write(tmp_path, cfg, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg) if not isinstance(cfg, str) else cfg)
    return str(path)


def rows(path):
    with open(path) as fh:
        body = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(body))


def header(path):
    with open(path) as fh:
        return [line for line in fh if line.startswith("#")]


def test_solve_writes_csv(tmp_path):
    code = cli.main(["solve", "--config", write(tmp_path, SIGNALS), "--out", str(tmp_path / "o")])
    assert code == 0
    out = tmp_path / "o" / "solve.csv"
    got = {r["metric"]: r for r in rows(out)}
    assert {"blocking", "ongoing_drop", "mean_resources"} <= set(got)
    assert all(r["status"] == "ok" for r in got.values())
    head = "".join(header(out))
    assert "config_sha256" in head and load_config(tmp_path / "cfg.yaml").fingerprint() in head
    assert (tmp_path / "o" / "solve.jsonl").is_file()


def test_numbers_use_twelve_significant_digits():
    assert cli.fmt(1 / 3) == "0.333333333333"
    assert cli.fmt(2.0) == "2"
    assert cli.fmt(None) == ""


def test_missing_file_exit_code(tmp_path):
    assert cli.main(["solve", "--config", str(tmp_path / "nope.yaml")]) == 4


def test_parse_error_exit_code(tmp_path):
    assert cli.main(["solve", "--config", write(tmp_path, "model: [unclosed")]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_reservation_out_of_range(tmp_path, capsys):
    cfg = {**SIGNALS, "model": "reservation", "params": {**SIGNALS["params"], "reservation": 1.2}}
    assert cli.main(["solve", "--config", write(tmp_path, cfg)]) == 3
    assert "reservation must lie in [0,1)" in capsys.readouterr().err


def test_single_node_network_rejected(tmp_path, capsys):
    cfg = {"model": "network", "params": {"node_count": 1, "node": {
        "servers": 4, "resources": 8, "arrival_rate": 1.0, "signal_rate": 0.2, "demand_primary": [0, 1]}}}
    assert cli.main(["solve", "--config", write(tmp_path, cfg)]) == 3
    err = capsys.readouterr().err
    assert "K >= 2" in err and "reservation" in err


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as info:
        validate_config({**SIGNALS, "extra": 1})
    assert info.value.code == 3
    with pytest.raises(ConfigError):
        validate_config({**SIGNALS, "params": {**SIGNALS["params"], "colour": "red"}})


def test_scenario_values_need_scenario():
    cfg = {"model": "signals", "params": {"servers": 4, "resources": 8, "arrival_rate": 2.0}}
    with pytest.raises(ConfigError, match="scenario"):
        validate_config(cfg)


def test_defaults_are_echoed(tmp_path):
    cfg = validate_config(SIGNALS)
    assert cfg.params["service_rate"] == 1.0
    assert cfg.params["reservation"] == 0.0
    assert cfg.simulation.batch_count == 30
    cli.main(["solve", "--config", write(tmp_path, SIGNALS), "--out", str(tmp_path)])
    head = "".join(header(tmp_path / "solve.csv"))
    assert '"service_rate": 1.0' in head or '"service_rate":1.0' in head


def test_sweep_paths_checked():
    bad = {**SIGNALS, "sweep": [{"path": "params.nothing", "values": [1]}]}
    with pytest.raises(ConfigError, match="sweep.path"):
        validate_config(bad)


def test_sweep_points_order():
    cfg = validate_config({**SIGNALS, "sweep": [{"path": "params.arrival_rate", "values": [1.0, 2.0]},
                                                {"path": "params.signal_rate", "values": [0.1, 0.2]}]})
    combos = [c for c, _ in sweep_points(cfg)]
    assert combos == [(1.0, 0.1), (1.0, 0.2), (2.0, 0.1), (2.0, 0.2)]


def test_non_convergence_exit_code(tmp_path):
    cfg = yaml.safe_load(bundled("network_symmetric").read_text())
    cfg["sweep"] = []
    cfg["params"]["max_iterations"] = 1
    code = cli.main(["solve", "--config", write(tmp_path, cfg), "--out", str(tmp_path)])
    assert code == 5
    assert any(r["status"] == "nonconverged" for r in rows(tmp_path / "solve.csv"))


def test_validate_reports_violations(tmp_path, capsys):
    cfg = {**SIGNALS, "simulation": {"seed": 5, "measured_events": 2000, "sigmas": 1e-9}}
    code = cli.main(["validate", "--config", write(tmp_path, cfg), "--out", str(tmp_path)])
    assert code == 6
    assert "violation" in capsys.readouterr().err
    assert any(r["status"] == "violation" for r in rows(tmp_path / "validate.csv"))


def test_validate_passes_on_benchmark(tmp_path):
    cfg = yaml.safe_load(bundled("bench_signals").read_text())
    cfg["simulation"]["measured_events"] = 200_000
    assert cli.main(["validate", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0


def test_simulate_is_byte_identical(tmp_path):
    path = write(tmp_path, SIGNALS)
    cli.main(["simulate", "--config", path, "--out", str(tmp_path / "a")])
    cli.main(["simulate", "--config", path, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "simulate.csv").read_bytes() == (tmp_path / "b" / "simulate.csv").read_bytes()


def test_seed_flag_changes_simulation(tmp_path):
    path = write(tmp_path, SIGNALS)
    cli.main(["simulate", "--config", path, "--out", str(tmp_path / "a")])
    cli.main(["simulate", "--config", path, "--out", str(tmp_path / "b"), "--seed", "77"])
    a, b = rows(tmp_path / "a" / "simulate.csv"), rows(tmp_path / "b" / "simulate.csv")
    assert [r["simulated"] for r in a] != [r["simulated"] for r in b]
    assert cli.main(["simulate", "--config", path, "--seed", "-3"]) == 3


def test_worker_precedence(monkeypatch):
    monkeypatch.delenv(cli.WORKERS_ENV, raising=False)
    assert cli.worker_count(None) == 1
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli.worker_count(None) == 3
    assert cli.worker_count(2) == 2
    monkeypatch.setenv(cli.WORKERS_ENV, "zero")
    with pytest.raises(ConfigError):
        cli.worker_count(None)


def test_parallel_sweep_matches_serial(tmp_path, monkeypatch):
    cfg = {**SIGNALS, "sweep": [{"path": "params.arrival_rate", "values": [1.0, 2.0, 3.0]}]}
    path = write(tmp_path, cfg)
    cli.main(["sweep", "--config", path, "--out", str(tmp_path / "s")])
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    cli.main(["sweep", "--config", path, "--out", str(tmp_path / "p")])
    assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()


def test_param_verb(tmp_path):
    cfg = yaml.safe_load(bundled("reference_radio").read_text())
    assert cli.main(["param", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    quantities = {r["quantity"] for r in rows(tmp_path / "param.csv")}
    assert {"signal_rate_per_s", "outage_probability"} <= quantities or len(quantities) > 5
    assert (tmp_path / "param_sinr_cdf.csv").is_file()


def test_bundled_prefix(tmp_path):
    assert cli.main(["solve", "--config", "bundled:bench_elastic", "--out", str(tmp_path)]) == 0
    assert cli.main(["solve", "--config", "bundled:no_such_thing", "--out", str(tmp_path)]) == 4


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mmrqs.cli", "solve", "--config", "bundled:bench_priority",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "solve.csv").is_file()
