from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from switchcell.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, main

BASE = "[run]\nprofile = cmf20120d\nv_dc = 400 V\ni_l = 15 A\n"


def write(tmp_path, body, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(BASE + body)
    return str(p)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_trace_and_manifest(tmp_path):
    cfg = write(tmp_path, "mode = dpt-both\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == EXIT_OK
    trace = rows(out / "trace.csv")
    assert trace[0] == ["time_s", "v_gs_V", "v_ds_V", "i_d_A", "v_F_V", "i_F_A", "p_mos_W", "p_sbd_W"]
    assert len(rows(out / "stages.csv")) == 1 + 12
    man = json.loads((out / "manifest.json").read_text())
    assert man["mode"] == "dpt-both" and "trace.csv" in man["outputs"]


def test_run_is_deterministic(tmp_path):
    cfg = write(tmp_path, "mode = dpt-on\n")
    main(["run", cfg, "--out", str(tmp_path / "a")])
    main(["run", cfg, "--out", str(tmp_path / "b")])
    for f in ("trace.csv", "stages.csv", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_oracle_mode_shares_schema(tmp_path):
    cfg = write(tmp_path, "mode = oracle\noracle_dt = 0.1 ns\n")
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out)]) == EXIT_OK
    assert rows(out / "oracle_on.csv")[0] == rows(out / "engine_on.csv")[0]
    summary = rows(out / "oracle_summary.csv")
    assert [r[0] for r in summary[1:]] == ["on", "off"]


def test_sweep_command(tmp_path):
    cfg = write(tmp_path, "mode = sweep\nsweep_axis = r_g_ext\nsweep_values = 5, 10, 15, 20\n")
    out = tmp_path / "s"
    assert main(["sweep", cfg, "--out", str(out)]) == EXIT_OK
    table = rows(out / "sweep.csv")
    assert len(table) == 5 and table[2][4] == "181.195"


def test_mission_command(tmp_path):
    cfg = write(tmp_path, "mode = mission\nschedule = 0 0.02 0.5; 0.02 0.04 0.3\nr_l = 5 ohm\n")
    out = tmp_path / "m"
    assert main(["mission", cfg, "--out", str(out)]) == EXIT_OK
    traj = rows(out / "trajectory.csv")
    assert traj[0] == ["time_s", "p_mos_W", "p_sbd_W", "tj_mos_C", "tj_sbd_C", "tc_C"]
    assert float(traj[-1][0]) == pytest.approx(0.04)
    assert float(traj[-1][3]) > 25.0


def test_extract_transfer(tmp_path, capsys):
    v = np.linspace(4.0, 12.0, 20)
    p = tmp_path / "transfer.csv"
    p.write_text("v_gs_V,i_d_A\n" + "".join(f"{a:.17g},{0.8 * max(a - 5.0, 0) ** 2:.17g}\n" for a in v))
    assert main(["extract", str(p), "--kind", "transfer"]) == EXIT_OK
    text = capsys.readouterr().out
    from switchcell.config import tokenize

    raw = tokenize(text, "fragment")
    assert float(raw.get("mosfet", "k_fs")[0].split()[0]) == pytest.approx(0.8, rel=1e-9)
    assert float(raw.get("mosfet", "v_th0")[0].split()[0]) == pytest.approx(5.0, rel=1e-9)


def test_extract_capacitance_needs_breakpoints(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("v,c\n0,1e-9\n50,1e-10\n")
    assert main(["extract", str(p), "--kind", "capacitance"]) == EXIT_INVALID


def test_extract_thermal_coefficients(tmp_path, capsys):
    from importlib import resources

    src = resources.files("switchcell.data").joinpath("temperature_samples.csv")
    assert main(["extract", str(src), "--kind", "thermal-coeff", "--out", str(tmp_path)]) == EXIT_OK
    assert "temp_a" in (tmp_path / "extract_thermal-coeff.ini").read_text()


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "[mosfet]\nr_ds_on = -1 mohm\n")
    assert main(["run", cfg, "--out", str(tmp_path / "x")]) == EXIT_INVALID
    assert "r_ds_on" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path):
    cfg = tmp_path / "n.ini"
    cfg.write_text((BASE + "mode = dpt-on\n").replace("15 A", "2000 A"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "n")]) == EXIT_NUMERIC


def test_too_coarse_sampling_exit_code(tmp_path):
    cfg = write(tmp_path, "mode = dpt-on\n")
    assert main(["run", cfg, "--out", str(tmp_path / "c"), "--dt", "1e-7"]) == EXIT_NUMERIC


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, "mode = dpt-off\n")
    res = subprocess.run([sys.executable, "-m", "switchcell.cli", "run", cfg, "--out", str(tmp_path / "p")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "E_off" in res.stdout
