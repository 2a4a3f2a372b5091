"""Command-line interface: configs, outputs, exit codes, determinism."""

import json
import subprocess
import sys
import textwrap

import pytest

from cvqnet.channels import DetectorParams
from cvqnet.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    RESULT_SCHEMA,
    ConfigError,
    main,
    scenario_from_config,
)
from cvqnet.gaussian import UnphysicalStateError

PRACTICAL_TWO_USER = """
[scenario]
users = 2
modulation_variance = 4.0
feeder_km = 5.0
excess_noise = 0.05
detectors = { efficiency = 0.6, electronic_noise = 0.1 }
beta = 0.956
"""


def write_config(tmp_path, body, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return str(path)


def read_rows(path):
    """Parse a results CSV into (meta dict, list of row dicts)."""
    meta, header, rows = {}, None, []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = val
        elif header is None:
            header = line.split(",")
        else:
            rows.append(dict(zip(header, line.split(","))))
    return meta, rows


def test_network_csv_output(tmp_path, capsys):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER)
    out = tmp_path / "report.csv"
    assert main(["network", "--config", cfg, "--out", str(out), "--no-timestamp"]) == EXIT_OK
    meta, rows = read_rows(out)
    assert meta["schema"] == RESULT_SCHEMA
    assert meta["command"] == "network"
    scn = json.loads(meta["scenario"])
    assert scn["n_users"] == 2
    assert scn["source_variance"] == 5.0
    assert len(rows) == 2
    assert float(rows[0]["k_tot"]) == pytest.approx(float(rows[1]["k_tot"]))
    assert float(rows[0]["k_clamped"]) > 0.0
    assert "K_tot=" in capsys.readouterr().err


def test_network_writes_stdout_by_default(tmp_path, capsys):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER)
    assert main(["network", "--config", cfg, "--no-timestamp"]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out.startswith(f"# schema: {RESULT_SCHEMA}")
    assert "K_tot=" in captured.err


def test_rerun_without_timestamp_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["network", "--config", cfg, "--out", str(a), "--no-timestamp"]) == EXIT_OK
    assert main(["network", "--config", cfg, "--out", str(b), "--no-timestamp"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert main(["network", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert "# created: " in a.read_text()


def test_missing_config_exits_config_code(tmp_path, capsys):
    rc = main(["network", "--config", str(tmp_path / "nope.toml")])
    assert rc == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_malformed_toml_exits_config_code(tmp_path):
    cfg = write_config(tmp_path, "[scenario\nusers = 2\n")
    assert main(["network", "--config", cfg]) == EXIT_CONFIG


def test_empty_config_exits_config_code(tmp_path):
    cfg = write_config(tmp_path, "")
    assert main(["network", "--config", cfg]) == EXIT_CONFIG


def test_invalid_scenario_exits_config_code(tmp_path):
    cfg = write_config(tmp_path, "[scenario]\nusers = 0\nsource_variance = 5.0\n")
    assert main(["network", "--config", cfg]) == EXIT_CONFIG


def test_numerical_failure_exits_numerical_code(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER)
    def boom(scn):
        raise UnphysicalStateError("below vacuum")
    monkeypatch.setattr("cvqnet.cli.network_report", boom)
    assert main(["network", "--config", cfg]) == EXIT_NUMERICAL
    assert "numerical error" in capsys.readouterr().err


def test_scenario_from_config_aliases():
    scn = scenario_from_config({"scenario": {
        "users": 3,
        "modulation_variance": 4.3,
        "ratios": [0.5, 0.25, 0.25],
        "detectors": [
            {"efficiency": 0.6}, {"efficiency": 0.7}, {"efficiency": 0.8},
        ],
    }})
    assert scn.n_users == 3
    assert scn.source_variance == pytest.approx(5.3)
    assert scn.ratios == (0.5, 0.25, 0.25)
    assert scn.detectors[1] == DetectorParams(0.7)


def test_scenario_from_config_user_noise_placement():
    table = {
        "users": 2,
        "source_variance": 5.3,
        "feeder_km": 25.0,
        "drop_km": 5.0,
        "user_excess_noise": [0.085, 0.103],
        "noise_placement": "drop",
    }
    scn = scenario_from_config({"scenario": table})
    assert scn.excess_noise == 0.0
    assert scn.drop_excess_noise[0] > 0.0
    with pytest.raises(ConfigError):
        scenario_from_config({"scenario": {**table, "excess_noise": 0.01}})


def test_scenario_from_config_rejects_double_variance():
    with pytest.raises(ConfigError):
        scenario_from_config({"scenario": {
            "users": 2, "source_variance": 5.0, "modulation_variance": 4.0,
        }})


SWEEP_CONFIG = PRACTICAL_TWO_USER + """
[run]
distances_km = [0.0, 5.0, 10.0]
users = [2, 3]
"""


def test_sweep_grid_order_and_parallel_equivalence(tmp_path):
    cfg = write_config(tmp_path, SWEEP_CONFIG)
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert main(["sweep", "--config", cfg, "--out", str(serial), "--no-timestamp"]) == EXIT_OK
    assert main([
        "sweep", "--config", cfg, "--out", str(parallel),
        "--jobs", "2", "--no-timestamp",
    ]) == EXIT_OK
    assert serial.read_bytes() == parallel.read_bytes()
    _, rows = read_rows(serial)
    assert [(r["distance_km"], r["n_users"]) for r in rows] == [
        ("0", "2"), ("5", "2"), ("10", "2"),
        ("0", "3"), ("5", "3"), ("10", "3"),
    ]
    k = [float(r["k_tot"]) for r in rows[:3]]
    assert k[0] > k[1] > k[2] > 0.0


def test_sweep_requires_distance_grid(tmp_path):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER)
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    bad = write_config(
        tmp_path, PRACTICAL_TWO_USER + "\n[run]\ndistances_km = [5.0, 0.0]\n", "bad.toml"
    )
    assert main(["sweep", "--config", bad]) == EXIT_CONFIG


def test_sweep_rejects_asymmetric_scenario(tmp_path):
    body = """
    [scenario]
    users = 2
    source_variance = 5.3
    user_excess_noise = [0.085, 0.103]

    [run]
    distances_km = [0.0, 5.0]
    """
    cfg = write_config(tmp_path, body)
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG


def test_montecarlo_exact_matches_theory(tmp_path):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER + "\n[run]\nexact = true\n")
    out = tmp_path / "mc.csv"
    assert main(["montecarlo", "--config", cfg, "--out", str(out), "--no-timestamp"]) == EXIT_OK
    meta, rows = read_rows(out)
    assert meta["exact"] == "True"
    for row in rows:
        assert float(row["estimated"]) == pytest.approx(
            float(row["theory"]), abs=1e-9
        )
    assert {r["quantity"] for r in rows} == {
        "k_user_1", "k_user_2", "k_tot", "k_ub", "ratio",
    }


def test_montecarlo_seed_and_sample_sidecar(tmp_path):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER + "\n[run]\nsamples = 400\n")
    out1, out2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    raw = tmp_path / "raw.csv"
    assert main([
        "montecarlo", "--config", cfg, "--seed", "7",
        "--out", str(out1), "--samples-out", str(raw), "--no-timestamp",
    ]) == EXIT_OK
    assert main([
        "montecarlo", "--config", cfg, "--seed", "7",
        "--out", str(out2), "--no-timestamp",
    ]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    meta, _ = read_rows(out1)
    assert meta["seed"] == "7"
    assert meta["samples"] == "400"
    sidecar = json.loads((tmp_path / "raw.csv.meta.json").read_text())
    assert sidecar["seed"] == 7
    assert sidecar["n_samples"] == 400
    assert raw.read_text().startswith("# schema: cvqnet-samples-v1")


def test_optimize_reports_interior_maximum(tmp_path):
    body = PRACTICAL_TWO_USER.replace("feeder_km = 5.0", "feeder_km = 25.0")
    cfg = write_config(tmp_path, body + "\n[run]\nbounds = [2.0, 12.0]\ntol = 0.05\n")
    out = tmp_path / "opt.csv"
    assert main(["optimize", "--config", cfg, "--out", str(out), "--no-timestamp"]) == EXIT_OK
    _, rows = read_rows(out)
    (row,) = rows
    assert 2.0 < float(row["v_mod"]) < 12.0
    assert float(row["k_tot"]) > 0.0
    assert row["saturated"] == "false"


def test_bps_explicit_rates(tmp_path, capsys):
    out = tmp_path / "bps.csv"
    assert main([
        "bps", "--rate", "6.7e-3", "--rate", "2.2e-3", "--rate", "8.9e-3",
        "--baud", "1e9", "--overhead", "0.5", "--out", str(out), "--no-timestamp",
    ]) == EXIT_OK
    _, rows = read_rows(out)
    got = [float(r["bits_per_second"]) for r in rows]
    assert got == pytest.approx([3.35e6, 1.10e6, 4.45e6])
    err = capsys.readouterr().err
    assert "3.35 Mbps" in err and "1.10 Mbps" in err and "4.45 Mbps" in err


def test_bps_from_scenario_rates(tmp_path):
    cfg = write_config(tmp_path, PRACTICAL_TWO_USER + "\n[run]\nbaud_hz = 1e9\n")
    out = tmp_path / "bps.csv"
    assert main(["bps", "--config", cfg, "--out", str(out), "--no-timestamp"]) == EXIT_OK
    _, rows = read_rows(out)
    assert [r["quantity"] for r in rows] == ["k_user_1", "k_user_2", "k_tot"]
    assert float(rows[2]["bits_per_second"]) == pytest.approx(
        float(rows[0]["bits_per_second"]) + float(rows[1]["bits_per_second"])
    )


def test_bps_requires_baud(capsys):
    assert main(["bps", "--rate", "1e-3"]) == EXIT_CONFIG
    assert "baud" in capsys.readouterr().err


def test_bps_invalid_overhead_is_config_error():
    assert main(["bps", "--rate", "1e-3", "--baud", "1e9", "--overhead", "2.0"]) == EXIT_CONFIG


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "cvqnet.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for name in ("network", "sweep", "montecarlo", "optimize", "bps"):
        assert name in proc.stdout
