import subprocess
import sys

import numpy as np
import pytest

from magloop import io
from magloop.cli import (ConfigError, covariance, glue_negative_values, main, parse_range,
                         parse_times, read_config)


def rows(path):
    header, data = io.read_rows(path)
    return header, data


def test_glue_negative_values():
    assert glue_negative_values(["scan", "--range", "-6:6,-6:6"]) == ["scan", "--range=-6:6,-6:6"]
    assert glue_negative_values(["x", "--force", "-pi,1"]) == ["x", "--force=-pi,1"]
    assert glue_negative_values(["x", "--no-refine", "--out", "a"]) == ["x", "--no-refine", "--out", "a"]


def test_parsers():
    assert parse_range("-1:2,pi:2*pi")[1][1] == pytest.approx(2 * np.pi)
    np.testing.assert_allclose(parse_times("0:8:2"), [0, 2, 4, 6, 8])
    np.testing.assert_allclose(parse_times("1,3"), [1, 3])
    c = covariance("5,5,1,1,2")
    assert c[0, 2] == c[2, 0] == 2 and c[1, 3] == 2
    with pytest.raises((ConfigError, ValueError)):
        parse_range("1:2")
    with pytest.raises((ConfigError, ValueError)):
        covariance("1,2,3")


def test_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nprofile = landau:pi/6,pi/4,pi,pi/3\nsteps-per-unit = 64\n")
    assert read_config(cfg) == {"profile": "landau:pi/6,pi/4,pi,pi/3", "steps_per_unit": "64"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign\n")
    with pytest.raises(ConfigError):
        read_config(bad)


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    out = tmp_path / "center.csv"
    cfg.write_text(f"profile = constant:0.5\nduration = 3\nout = {out}\n")
    # duration 3 is not a loop; the flag supplies the right one
    assert main(["center", "--config", str(cfg)]) == 3
    assert main(["center", "--config", str(cfg), "--duration", str(2 * np.pi)]) == 0
    header, data = rows(out)
    assert header == io.CENTER_HEADER
    assert float(data[0][8]) == pytest.approx(-1.0, abs=1e-8)


def test_exit_codes(tmp_path):
    out = str(tmp_path / "o.csv")
    assert main(["loop", "--profile", "harmonic:1", "--out", out]) == 2
    assert main(["loop", "--profile", "constant:0.3", "--nmax", "2", "--no-refine", "--out", out]) == 3
    assert main(["center", "--profile", "harmonic:-pi/5,-1.152", "--n", "15", "--no-refine",
                 "--out", out]) == 3
    assert main(["center", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["scan", "--family", "harmonic", "--res", "4", "--steps-per-unit", "0",
                 "--out", out]) == 2
    assert main(["bogus"]) == 2


def test_loop_command_refines(tmp_path):
    out = tmp_path / "loops.csv"
    assert main(["loop", "--profile", "harmonic:-pi/5,-1.152", "--steps-per-unit", "512",
                 "--window", "0.1", "--out", str(out)]) == 0
    header, data = rows(out)
    assert header == io.LOOPS_HEADER
    assert int(data[-1][2]) == 15 and float(data[-1][3]) < 1e-6


def test_center_auto_refine(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["center", "--profile", "harmonic:-pi/5,-1.152", "--n", "15", "--window", "0.1",
                 "--steps-per-unit", "512", "--out", str(out)]) == 0
    assert rows(out)[1][0][9] == "true"


def test_scan_is_deterministic_across_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["scan", "--family", "biharmonic", "--range", "-3:3,-3:3", "--res", "24",
              "--steps-per-unit", "128"]
    assert main([*common, "--workers", "1", "--out", str(a)]) == 0
    assert main([*common, "--workers", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, data = rows(a)
    assert header == io.SCAN_HEADER and len(data) == 24 * 24
    assert {r[3] for r in data} <= {"Stable", "ThresholdPlus", "ThresholdMinus",
                                   "ResonantPlus", "ResonantMinus"}


def test_scan_loop_lines(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["scan", "--family", "harmonic", "--range", "-6:6,-6:6", "--res", "8",
                 "--steps-per-unit", "64", "--loop-lines", "3", "--out", str(out)]) == 0
    header, data = rows(tmp_path / "h_loop_lines.csv")
    assert header == ["p1", "k", "m"]
    assert len({(r[1], r[2]) for r in data}) == len(data)


def test_separatrix_command(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["separatrix", "--family", "biharmonic", "--branch", "-", "--range", "2:3,2:3",
                 "--res", "16", "--steps-per-unit", "256", "--out", str(out)]) == 0
    header, data = rows(out)
    assert header[:9] == io.SEPARATRIX_HEADER
    for r in data:
        assert r[2] == "-"
        assert abs(float(r[5]) + float(r[8]) + 2) < 1e-6


def test_landau_command(tmp_path):
    out = tmp_path / "l.csv"
    assert main(["landau", "--profile", "landau:pi/6,pi/4,pi,pi/3", "--center",
                 "--steps-per-unit", "256", "--out", str(out)]) == 0
    header, data = rows(out)
    assert header == io.LANDAU_HEADER and data[0][1] == "true"
    assert float(data[0][2]) == pytest.approx(-31 / (14 * np.pi), abs=1e-8)
    assert main(["landau", "--profile", "landau:1,2", "--center", "--out", str(out)]) == 3


def test_word_command(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["landau", "--profile", "word:free(t)*kick(3/t)", "--t", "2", "--out", str(out)]) == 0
    header, data = rows(out)
    assert header == io.WORD_HEADER and data[0][0] == "3" and data[0][1] == "true"


def test_drift_and_packet_commands(tmp_path):
    d, p = tmp_path / "d.csv", tmp_path / "p.csv"
    assert main(["drift", "--profile", "constant:0.5", "--force", "0,1", "--blocks", "5",
                 "--steps-per-unit", "256", "--out", str(d)]) == 0
    header, data = rows(d)
    assert header == io.DRIFT_HEADER and len(data) == 5
    assert main(["packet", "--profile", "constant:0", "--times", "1,2", "--out", str(p)]) == 0
    header, data = rows(p)
    assert header == io.PACKET_HEADER and len(data) == 2
    # free packet: cxx(t) = 5 + 4t + t^2
    assert float(data[1][5]) == pytest.approx(5 + 8 + 4, abs=1e-10)


def test_packet_inversion_command(tmp_path):
    out = tmp_path / "inv.csv"
    assert main(["packet", "--profile", "biharmonic:2.40,2.68", "--inversion", "--doubles", "2",
                 "--out", str(out)]) == 0
    assert len(rows(out)[1]) == 3
    assert main(["packet", "--profile", "harmonic:1,1", "--inversion", "--out", str(out)]) == 2


def test_trajectory_command(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["trajectory", "--profile", "constant:1", "--q0", "1,0,0,0", "--t-end", "pi",
                 "--steps-per-unit", "64", "--out", str(out)]) == 0
    header, data = rows(out)
    assert header == io.TRAJECTORY_HEADER
    assert float(data[-1][0]) == pytest.approx(np.pi)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "magloop", "landau", "--profile", "landau:1,1",
                        "--out", str(tmp_path / "x.csv")], capture_output=True, text=True)
    assert r.returncode == 0 and "loop=true" in r.stdout
