import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mixedorder import cli, thermoelastic
from mixedorder.cli import ConfigError, RunConfig, main


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def run(tmp_path, command, text, *extra):
    cfg = write_config(tmp_path, text)
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--output", str(out), "--reproducible", *extra])
    return code, out


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


CATTANEO = """
[model]
variant = CattaneoInertial
tau = 1
mu = 1
n = 2
[run]
p = 4/3, 4
"""


def test_config_round_trip():
    cfg = RunConfig.from_string(CATTANEO)
    again = RunConfig.from_string(cfg.to_string())
    assert again.sections == cfg.sections
    assert again.to_string() == cfg.to_string()
    assert again.digest() == cfg.digest()
    assert cfg.numbers("run", "p") == [pytest.approx(4 / 3), 4.0]


def test_config_overrides_and_errors():
    cfg = RunConfig.from_string(CATTANEO).with_overrides(["model.n=3", "run.t = 0.5"])
    assert cfg.integer("model", "n") == 3 and cfg.number("run", "t") == 0.5
    assert cfg.digest() != RunConfig.from_string(CATTANEO).digest()
    for bad in ("model.bogus=1", "nosection=1", "grid.L"):
        with pytest.raises(ConfigError):
            RunConfig.from_string(CATTANEO).with_overrides([bad])
    with pytest.raises(ConfigError, match="unknown config section"):
        RunConfig.from_string("[extra]\na = 1\n")
    with pytest.raises(ConfigError, match="model.colour"):
        RunConfig.from_string("[model]\ncolour = red\n")
    with pytest.raises(ConfigError, match="model.n"):
        RunConfig.from_string("[model]\nn = two\n").integer("model", "n")


def test_classify_cattaneo(tmp_path, capsys):
    code, out = run(tmp_path, "classify", CATTANEO)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["schema"] == 1 and rep["tool"] == "mixedorder"
    assert rep["verdict"]["case"] == "OnlyP2orN1"
    assert rep["verdict"]["order"] == 1
    assert len(rep["config_hash"]) == 64
    assert "created" not in rep
    assert all(c["consistent"] for c in rep["cross_check"])
    rows = read_csv(out / "eigenvalues.csv")
    assert rows[0] == ["direction", "eta_1", "eta_2", "radius", "branch", "re", "im"]
    assert len(rows) == 1 + 16 * 4 * 5
    assert "OnlyP2orN1" in capsys.readouterr().out


def test_classify_damped_plate(tmp_path):
    code, out = run(tmp_path, "classify", "[model]\nvariant = DampedPlate\nrho = 3\nalpha = 1\nn = 3\n")
    assert code == 0
    assert json.loads((out / "report.json").read_text())["verdict"]["case"] == "AllP_parameter_elliptic"


def test_classify_zero_symbol(tmp_path):
    code, out = run(tmp_path, "classify", "[model]\nvariant = Zero\nn = 2\n")
    assert code == 0
    assert json.loads((out / "report.json").read_text())["verdict"]["case"] == "AllP_order_le_0"


def test_classify_timestamp_without_reproducible(tmp_path):
    cfg = write_config(tmp_path, CATTANEO)
    assert main(["classify", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    assert "created" in json.loads((tmp_path / "o" / "report.json").read_text())


def test_classify_determinism(tmp_path):
    cfg = write_config(tmp_path, CATTANEO)
    outs = []
    for k in range(2):
        o = tmp_path / f"o{k}"
        assert main(["classify", "--config", str(cfg), "--output", str(o), "--reproducible"]) == 0
        outs.append(o)
    for name in ("eigenvalues.csv", "report.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_csv_full_precision_and_crlf(tmp_path):
    code, out = run(tmp_path, "classify", CATTANEO)
    raw = (out / "eigenvalues.csv").read_bytes()
    assert b"\r\n" in raw
    vals = [float(x) for row in read_csv(out / "eigenvalues.csv")[1:] for x in row[-2:]]
    assert any(len(repr(v)) >= 15 for v in vals)


@pytest.mark.parametrize("text,field", [
    ("[model]\nvariant = Nope\n", "model.variant"),
    ("[model]\nvariant = CattaneoInertial\ntau = 0\n", "model"),
    ("[model]\nvariant = CattaneoInertial\nn = 4\n", "model.n"),
    ("[model]\nvariant = CattaneoInertial\n[run]\np = 1\n", "run.p"),
    ("[model]\nvariant = DampedPlate\nalpha = 2\n", "alpha"),
])
def test_config_errors_exit_1(tmp_path, capsys, text, field):
    code, _ = run(tmp_path, "classify", text)
    assert code == 1
    assert field in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["classify", "--config", str(tmp_path / "nope.ini")]) == 1


def test_usage_error():
    assert main(["frobnicate"]) == 1


def test_integrity_exit_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(thermoelastic, "stated_verdict", lambda model, p, n=None: True)
    code, out = run(tmp_path, "classify", CATTANEO)
    assert code == 2
    assert "integrity_error" in json.loads((out / "report.json").read_text())


def test_resolution_exit_3(tmp_path, capsys):
    text = ("[model]\nvariant = HalfWave\nn = 1\n[grid]\npoints_per_axis = 64\nL = 3.141592653589793\n"
            "[run]\nradii = 16, 32\np = 4\n")
    code, _ = run(tmp_path, "probe-norm", text)
    assert code == 3
    assert "points_per_axis >=" in capsys.readouterr().err


def test_evolve_transport_constant(tmp_path):
    text = ("[model]\nvariant = Transport\nn = 1\n[grid]\npoints_per_axis = 512\nL = 40\n"
            "[run]\nt = 0, 1, 2\np = 4\nradii = 2\npacket_c = 2\ndump_states = true\n")
    code, out = run(tmp_path, "evolve", text)
    assert code == 0
    rows = read_csv(out / "norms.csv")
    assert rows[0] == ["t", "p", "norm_component_1", "norm_total", "ratio", "flagged_frequencies"]
    norms = [float(r[3]) for r in rows[1:]]
    np.testing.assert_allclose(norms, norms[0], rtol=1e-8)
    assert len(list(out.glob("state_t*.bin"))) == 3
    assert len(list(out.glob("state_t*.bin.json"))) == 3


def test_evolve_heat_decreasing(tmp_path):
    text = ("[model]\nvariant = Heat\nn = 1\n[grid]\npoints_per_axis = 1024\nL = 64\n"
            "[run]\nt = 0, 0.5, 1, 2\np = 2\nradii = 1\npacket_c = 1\n")
    code, out = run(tmp_path, "evolve", text)
    assert code == 0
    norms = [float(r[3]) for r in read_csv(out / "norms.csv")[1:]]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_evolve_cattaneo_bounded(tmp_path):
    text = ("[model]\nvariant = CattaneoInertial\ntau = 1\nmu = 1\nn = 1\n"
            "[grid]\npoints_per_axis = 1024\nL = 6.283185307179586\n"
            "[run]\nt = 0, 0.5, 1, 2\np = 4\nradii = 32\ncomponent = 0, 0, 1, 0\n")
    code, out = run(tmp_path, "evolve", text)
    assert code == 0
    ratios = [float(r[-2]) for r in read_csv(out / "norms.csv")[1:]]
    assert max(ratios) <= 2.0


def test_probe_half_wave_two_dimensions(tmp_path):
    text = ("[model]\nvariant = HalfWave\nn = 2\n[grid]\npoints_per_axis = 256\nL = 3.141592653589793\n"
            "[run]\nradii = 8, 16, 32, 64\np = 4\nt = 1\n")
    code, out = run(tmp_path, "probe-norm", text)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["probes"][0]["beta"] == pytest.approx(0.25, abs=0.1)
    rows = read_csv(out / "growth.csv")
    assert rows[0] == ["R", "p", "t", "ratio_component_1", "ratio_total", "ratio_dual", "ratio",
                       "flagged_frequencies"]
    assert len(rows) == 5


def test_probe_cattaneo_one_dimension(tmp_path):
    text = ("[model]\nvariant = CattaneoInertial\ntau = 1\nmu = 1\nn = 1\n"
            "[grid]\npoints_per_axis = 1024\nL = 6.283185307179586\n"
            "[run]\nradii = 8, 16, 32, 64\np = 2, 4\nt = 1\ncomponent = 0, 0, 1, 0\n")
    code, out = run(tmp_path, "probe-norm", text)
    assert code == 0
    probes = json.loads((out / "report.json").read_text())["probes"]
    for e in probes:
        assert abs(e["beta"]) <= 0.05 and e["consistent"]


def test_diagonalize(tmp_path, capsys):
    code, out = run(tmp_path, "diagonalize", "[model]\nvariant = FourierInertial\nmu = 1\nn = 2\n[run]\np = 4\n")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert all(e["identity_residual"] <= e["threshold"] for e in rep["identity_ladder"])
    assert len(rep["identity_ladder"]) == 32
    assert rep["residual_bound"]["exponent"] <= 0.05
    assert rep["verdicts"][0]["verdict"] == "not well-posed"
    assert "not well-posed" in capsys.readouterr().out


def test_diagonalize_requires_fourier(tmp_path):
    code, _ = run(tmp_path, "diagonalize", CATTANEO)
    assert code == 1


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, "[model]\nvariant = Zero\nn = 1\n")
    proc = subprocess.run([sys.executable, "-m", "mixedorder", "classify", "--config", str(cfg),
                           "--output", str(tmp_path / "o"), "--reproducible"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert "AllP_order_le_0" in proc.stdout


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert "mixedorder" in capsys.readouterr().out


def test_fmt_precision():
    assert cli._fmt(0.1) == "0.10000000000000001"
    assert cli._fmt(True) == "true"
    assert cli._fmt(np.int64(3)) == "3"
