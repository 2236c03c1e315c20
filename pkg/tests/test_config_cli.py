import csv
import json
import subprocess
import sys

import pytest

from wlan_discovery import config as cfgmod
from wlan_discovery.cli import ANALYTIC_FIELDS, main
from wlan_discovery.errors import ConfigError
from wlan_discovery.mobility import CALIBRATION_FACTOR
from wlan_discovery.sim import RECORD_FIELDS, SWEEP_FIELDS

SHORT = ["--set", "duration_s=600"]


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines, list(csv.DictReader(lines[1:]))


# -- config -----------------------------------------------------------------------

def test_default_config_validates(capsys):
    assert main(["validate-config"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok config_sha256=")


def test_default_config_builds():
    sim = cfgmod.build_sim_config(cfgmod.load_config())
    assert sim.scheme.d1 == 10 and sim.scheme.d2 == 20
    assert sim.total_density == pytest.approx(1e-4)
    assert len(sim.stations) == 6


def test_hash_depends_on_content_only():
    a = cfgmod.load_config()
    b = cfgmod.load_config(None, ["thresholds.d1=10.0"])
    c = cfgmod.load_config(None, ["thresholds.d1=11"])
    assert cfgmod.config_hash(a) == cfgmod.config_hash(b)
    assert cfgmod.config_hash(a) != cfgmod.config_hash(c)


@pytest.mark.parametrize("override,match", [
    ("thresholds.d9=1", "unknown key"),
    ("thresholds.d1=ten", "thresholds.d1"),
    ("nonsense", "key=value"),
    ("seed=", "seed"),
])
def test_schema_errors(override, match):
    with pytest.raises(ConfigError, match=match):
        cfgmod.build_sim_config(cfgmod.load_config(None, [override]))


def test_numeric_strings_are_coerced(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("deployment:\n  total_density: 1e-5\n")
    assert cfgmod.load_config(p)["deployment"]["total_density"] == pytest.approx(1e-5)


def test_d2_must_exceed_d1(capsys):
    assert main(["run", "--set", "thresholds.d1=30"]) == 3
    err = capsys.readouterr().err.strip()
    assert err.startswith("config error:") and "D2 must exceed D1" in err
    assert len(err.splitlines()) == 1


def test_missing_config_is_usage_error(capsys):
    assert main(["run", "--config", "/nonexistent/x.yaml"]) == 2
    assert "not found" in capsys.readouterr().err


def test_bad_flag_is_usage_error():
    assert main(["run", "--bogus"]) == 2
    assert main([]) == 2


def test_unwritable_output_is_runtime_error(tmp_path):
    assert main(["run", *SHORT, "--out", str(tmp_path / "no" / "such" / "r.csv")]) == 4


def test_config_dir_env(tmp_path, monkeypatch):
    (tmp_path / "fast.yaml").write_text("duration_s: 600\nseed: 3\n")
    monkeypatch.setenv(cfgmod.CONFIG_DIR_ENV, str(tmp_path))
    assert cfgmod.resolve_config_path("fast") == tmp_path / "fast.yaml"
    assert cfgmod.resolve_config_path("default") is None
    out = tmp_path / "r.csv"
    assert main(["run", "--config", "fast", "--out", str(out)]) == 0
    assert "seed=3" in out.read_text().splitlines()[0]


def test_config_file_untouched(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("duration_s: 600\n")
    before = p.read_bytes()
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "r.csv")]) == 0
    assert p.read_bytes() == before


# -- outputs ----------------------------------------------------------------------

def test_run_example(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--config", "default", "--scheme", "wlan-aware", "--seed", "42", *SHORT,
                 "--out", str(out)]) == 0
    lines, rows = read_rows(out)
    # 60 records: one comment line, then the header and 60 rows
    assert len(lines) == 62
    assert lines[0].startswith("# config_sha256=") and lines[0].endswith("seed=42")
    assert lines[1].split(",") == list(RECORD_FIELDS)
    assert len(rows) == 60


def test_identical_invocations_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["run", "--scheme", "wlan_aware", "--seed", "5", *SHORT]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--lambdas", "1e-5", "5e-5", "1e-4", "--replications", "1", *SHORT,
                 "--set", "mobility_estimation.oracle_mobility=true", "--out", str(out)]) == 0
    lines, rows = read_rows(out)
    assert lines[1].split(",") == list(SWEEP_FIELDS)
    assert len(rows) == 15
    assert {r["scheme"] for r in rows} == {"conventional", "3gpp_assisted", "gps_assisted", "wlan_aware",
                                          "wlan_aware_gps"}


def test_analytic_rows(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["analytic", "--lambdas", "1e-6", "1e-5", "1e-4", "5e-4", "--speeds", "0.5", "1",
                 "--out", str(out)]) == 0
    lines, rows = read_rows(out)
    assert lines[1].split(",") == list(ANALYTIC_FIELDS)
    assert len(rows) == 8
    for v in ("0.5", "1.0"):
        hi = [float(r["e_n_wlan"]) for r in rows if r["v"] == v and float(r["lambda"]) >= 1e-4]
        assert hi == sorted(hi)
    assert {float(r["e_p_conventional"]) for r in rows} == {300.0}


def test_analytic_zero_density(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["analytic", "--lambdas", "0", "--speeds", "1", "--out", str(out)]) == 0
    row = read_rows(out)[1][0]
    assert float(row["e_p_wlan"]) == 10.0 and float(row["e_p_gps"]) == 150.0


def test_calibrate_synthetic(tmp_path):
    out = tmp_path / "cal.json"
    assert main(["calibrate-mobility", "--windows", "60", "--seed", "7", "--out", str(out)]) == 0
    cal = json.loads(out.read_text())
    assert cal["phi0"] == pytest.approx(CALIBRATION_FACTOR * cal["phi50"])
    assert cal["sigma0"] == pytest.approx(CALIBRATION_FACTOR * cal["sigma50"])
    assert cal["sigma0"] > 0


def test_calibration_file_feeds_back(tmp_path):
    out = tmp_path / "cal.json"
    assert main(["calibrate-mobility", "--windows", "60", "--out", str(out)]) == 0
    assert main(["validate-config", "--set", f"mobility_estimation.calibration_file={out}"]) == 0


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "wlan_discovery.cli", "validate-config"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("ok")
