import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import FIXTURES, fixture_config
from hflow.cli import main, parse_config, ConfigError
from hflow.concavity import write_samples_csv


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_summary(path):
    with open(path) as fh:
        first = fh.readline()
        assert first.startswith("# schema=hflow.sweep/1")
        return list(csv.DictReader(fh))


def test_simulate_zero(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(FIXTURES / "zero.json"), "--out-dir", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["criterion"]["li_satisfied"] is False
    assert cert["blowup"]["detected"] is False
    assert cert["blowup"]["reason"] == "horizon_reached"
    assert set(cert["monitors"]) >= {"gronwall_min_defect", "growth_min_defect", "concavity_min_defect", "eta_min"}
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "# schema=hflow.trace/1"
    assert lines[1] == "t,E,N,V,l2sq,gradsq,supnorm,dissipation,dt"
    assert "detected=False" in capsys.readouterr().out


def test_simulate_blowup_fixture(tmp_path):
    out = tmp_path / "out"
    cfg = fixture_config("three_mode_blowup.json")
    # same scenario on a coarser grid to keep the unit suite fast
    cfg["grid"].update(nx=31, ny=31)
    assert main(["simulate", "--config", write_config(tmp_path, cfg), "--out-dir", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["criterion"]["li_satisfied"] is True
    assert cert["blowup"]["detected"] is True
    assert cert["blowup"]["t_detect"] < cert["criterion"]["t_bound"]
    assert cert["initial_data"]["amplitude"] == pytest.approx(1.25 * cert["initial_data"]["a_star"])


def test_record_every_override(tmp_path):
    out = tmp_path / "out"
    argv = ["simulate", "--config", str(FIXTURES / "zero.json"), "--out-dir", str(out), "--record-every", "5"]
    assert main(argv) == 0
    rows = (out / "trace.csv").read_text().splitlines()[2:]
    assert len(rows) == 3  # t = 0, 0.005, 0.01


@pytest.mark.parametrize(
    "drop, key",
    [(("grid",), "grid"), (("grid", "nx"), "grid.nx"), (("h0",), "h0"), (("initial_data", "modes"), "initial_data.modes")],
)
def test_missing_key_named(tmp_path, capsys, drop, key):
    cfg = fixture_config("zero.json")
    node = cfg
    for k in drop[:-1]:
        node = node[k]
    del node[drop[-1]]
    code = main(["simulate", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path / "o")])
    assert code != 0
    assert f"'{key}'" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch",
    [
        {"h0": 0.0},
        {"h0": "one"},
        {"stepper": {"dt0": -1.0}},
        {"stepper": {"bogus": 1}},
        {"lambda1": "numerical"},
        {"grid": {"nx": 1, "ny": 5}},
        {"initial_data": {"modes": [[1, 1, 0.5]]}},
        {"initial_data": {"modes": [], "amplitude": "big"}},
    ],
)
def test_invalid_config(tmp_path, capsys, patch):
    cfg = fixture_config("zero.json") | patch
    assert main(["check-criterion", "--config", write_config(tmp_path, cfg)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_unparseable_and_missing_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["check-criterion", "--config", str(bad)]) != 0
    assert main(["check-criterion", "--config", str(tmp_path / "nope.json")]) != 0


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = main(["simulate", "--config", str(FIXTURES / "zero.json"), "--out-dir", str(blocker / "sub")])
    assert code != 0


def test_check_eigenfunction_poincare(capsys):
    assert main(["check-criterion", "--config", str(FIXTURES / "eigenfunction.json")]) == 0
    out = capsys.readouterr().out
    assert "li_satisfied=False" in out and "Poincare" in out
    assert "l2sq0=1" in out
    assert "t_bound=none" in out


def test_check_boosted_prints_t_bound(capsys, tmp_path):
    js = tmp_path / "crit.json"
    assert main(["check-criterion", "--config", str(FIXTURES / "three_mode_blowup.json"), "--json", str(js)]) == 0
    out = capsys.readouterr().out
    assert "li_satisfied=True" in out
    line = next(l for l in out.splitlines() if l.startswith("t_bound="))
    rep = json.loads(js.read_text())
    assert float(line.split("=")[1]) == pytest.approx(rep["t_bound"], rel=1e-9)
    assert rep["t_bound"] == pytest.approx(16 * rep["l2sq0"] / rep["gap"])


def test_check_h0_zero_rejected(tmp_path, capsys):
    cfg = fixture_config("three_mode_blowup.json") | {"h0": 0}
    assert main(["check-criterion", "--config", write_config(tmp_path, cfg)]) == 2
    assert "H0 = 0" in capsys.readouterr().err


def test_auto_amplitude_wrong_sign(tmp_path, capsys):
    cfg = fixture_config("three_mode_blowup.json") | {"h0": 1.0}
    assert main(["check-criterion", "--config", write_config(tmp_path, cfg)]) == 2
    assert "no blow-up" in capsys.readouterr().err


def test_continuum_lambda_flag(capsys):
    assert main(["check-criterion", "--config", str(FIXTURES / "eigenfunction.json"), "--lambda1", "continuum"]) == 0
    assert "lambda1=19.7392088" in capsys.readouterr().out


def test_sweep_amplitude_single_flip(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(FIXTURES / "sweep_amplitude.json"), "--out-dir", str(out), "--workers", "2"]) == 0
    rows = read_summary(out / "summary.csv")
    assert [float(r["parameter"]) for r in rows] == [0.5, 1.5, 2.5, 3.0, 3.6, 4.2, 5.0]
    assert all(r["error"] == "" for r in rows)
    flags = [r["li_satisfied"] == "True" for r in rows]
    flips = sum(a != b for a, b in zip(flags, flags[1:]))
    assert flips == 1 and flags[-1] and not flags[0]
    for r in rows:
        assert (r["t_bound"] != "") == (r["li_satisfied"] == "True")
    assert (out / "point_0000" / "certificate.json").exists()


def test_sweep_empty(tmp_path):
    cfg = fixture_config("sweep_amplitude.json")
    cfg["sweep"]["values"] = []
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", write_config(tmp_path, cfg), "--out-dir", str(out)]) == 0
    assert read_summary(out / "summary.csv") == []


def test_sweep_h0_sign(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(FIXTURES / "sweep_h0_sign.json"), "--out-dir", str(out)]) == 0
    rows = {float(r["parameter"]): r for r in read_summary(out / "summary.csv")}
    # V(phi) > 0, so only h0 = -1 has h0 * V(phi) < 0
    assert rows[-1.0]["detected"] == "True"
    assert rows[1.0]["detected"] == "False"


def test_sweep_records_failures(tmp_path):
    cfg = fixture_config("sweep_h0_sign.json")
    cfg["sweep"]["values"] = [-1.0, 0.0]
    cfg["stepper"]["t_max"] = 1e-3
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", write_config(tmp_path, cfg), "--out-dir", str(out)]) == 0
    rows = read_summary(out / "summary.csv")
    assert rows[0]["error"] == "" and "ConfigError" in rows[1]["error"]


def test_sweep_bad_parameter(tmp_path):
    cfg = fixture_config("sweep_h0_sign.json")
    cfg["sweep"]["parameter"] = "nx"
    assert main(["sweep", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "psi, theta, ok, bound",
    [
        (lambda t: 1 / (1 - t), 1.0, True, 1.0),
        (lambda t: (1 - t) ** -2, 0.5, True, 1.0),
        (np.exp, 1.0, False, None),
    ],
)
def test_concavity_check(tmp_path, capsys, psi, theta, ok, bound):
    t = np.linspace(0, 0.9, 901)
    write_samples_csv(tmp_path / "s.csv", t, psi(t))
    assert main(["concavity-check", "--csv", str(tmp_path / "s.csv"), "--theta", str(theta)]) == 0
    out = capsys.readouterr().out
    data = json.loads(out.strip().splitlines()[-1])
    assert data["hypothesis_ok"] is ok
    if bound is None:
        assert data["bound"] is None and "hypothesis violated" in out
    else:
        assert data["bound"] == pytest.approx(bound, abs=1e-4)


@pytest.mark.parametrize("text", ["t,psi\n0,1\nzz,2\n", "t,psi\n0,1\n1,-1\n2,3\n", "0,1\n"])
def test_concavity_check_malformed(tmp_path, capsys, text):
    (tmp_path / "s.csv").write_text(text)
    assert main(["concavity-check", "--csv", str(tmp_path / "s.csv"), "--theta", "1"]) != 0


def test_concavity_check_missing_file(tmp_path):
    assert main(["concavity-check", "--csv", str(tmp_path / "none.csv"), "--theta", "1"]) != 0


def test_deterministic_outputs(tmp_path):
    cfg = fixture_config("three_mode_li_only.json")
    cfg["grid"].update(nx=15, ny=15)
    path = write_config(tmp_path, cfg)
    for d in ("a", "b"):
        assert main(["simulate", "--config", path, "--out-dir", str(tmp_path / d)]) == 0
    for name in ("trace.csv", "certificate.json", "monitors.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parse_config_defaults():
    cfg = parse_config({"grid": {"nx": 5, "ny": 6}, "h0": 2, "initial_data": {"modes": []}})
    assert cfg.lambda1 == "discrete" and cfg.amplitude == 1.0 and cfg.margin == 1.25
    assert cfg.stepper.supnorm_cap == 1e6
    with pytest.raises(ConfigError):
        parse_config([])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hflow", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("hflow ")
