import json
import math

import numpy as np
import pytest

from mcmrb import cli
from mcmrb.config import ConfigError, bundled_configs, load_config, parse_config, parse_quantity
from mcmrb.protocols import DEFAULT_SEED, run_suite
from mcmrb.records import DataFormatError, read_curves, write_curves

SMALL_SUITE = """
[suite]
lengths = 1, 2, 4, 8, 16, 32
num_sequences = 5
t_g = 35.5ns
t_m = 0.71us
"""


@pytest.mark.parametrize("key,text,value", [
    ("t_m", "0.71us", 0.71),
    ("t_g", "35.5ns", 0.0355),
    ("ancilla_T1", "0.1ms", 100.0),
    ("nu", "50kHz", 2 * math.pi * 0.05),
    ("J", "1MHz", 2 * math.pi),
    ("J", "3 rad/us", 3.0),
    ("phi", "0.02pi", 0.02 * math.pi),
    ("phi", "0.1rad", 0.1),
    ("eta", "0.02", 0.02),
])
def test_parse_quantity(key, text, value):
    assert parse_quantity(key, text) == pytest.approx(value)


@pytest.mark.parametrize("key,text", [("t_m", "0.71"), ("nu", "50"), ("phi", "0.1"), ("eta", "2%"),
                                      ("t_m", "0.71 furlongs"), ("t_m", "fast")])
def test_parse_quantity_rejects(key, text):
    with pytest.raises(ValueError):
        parse_quantity(key, text)


def test_bare_number_diagnostic_has_location():
    text = SMALL_SUITE + "\n[noise]\nscenario = zz_relaxation\nnu = 50\nancilla_T1 = 10us\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text, "run.ini")
    assert "run.ini:10:" in str(err.value) and "nu" in str(err.value)


@pytest.mark.parametrize("text,fragment", [
    ("[suite]\nlengths = 1, 2\n", "missing [noise]"),
    ("[noise]\nscenario = leakage\n", "unknown scenario"),
    ("[noise]\nscenario = non_qnd\n", "eta"),
    ("[noise]\nscenario = none\ncolour = red\n", "unknown key"),
    ("[suite]\nlengths = 4, 2\n[noise]\nscenario = none\n", "increasing"),
    ("[suite]\nnum_sequences = 2.5\n[noise]\nscenario = none\n", "integer"),
    ("[other]\n[noise]\nscenario = none\n", "unknown section"),
    ("not an ini file", "malformed"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[")):
        parse_config(text, "x.ini")


def test_seed_defaults_and_overrides():
    cfg = parse_config(SMALL_SUITE + "[noise]\nscenario = none\n")
    assert cfg.suite.seed == DEFAULT_SEED
    assert parse_config(SMALL_SUITE + "[noise]\nscenario = none\n", seed=5, shots=100).suite.shots == 100


@pytest.mark.parametrize("name", bundled_configs())
def test_bundled_configs_parse(name):
    cfg = load_config(name)
    assert cfg.suite.lengths[-1] == 150


def test_zz_sweep_config_units():
    cfg = load_config("sweep_zz")
    assert cfg.suite.ancilla_init == "excited"
    assert cfg.noise_params["nu"] == pytest.approx(2 * math.pi * 0.05)
    assert cfg.sweep_values == pytest.approx([0.1, 1.0, 10.0, 100.0])


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_simulate_then_analyze_round_trip(tmp_path, fmt):
    cfg = write(tmp_path, SMALL_SUITE + "[noise]\nscenario = stark\nphi = 0.05rad\n")
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim"), "--format", fmt]) == 0
    curves = tmp_path / "sim" / f"decay_curves.{fmt}"
    assert cli.main(["analyze", str(curves), "--out", str(tmp_path / "ana")]) == 0
    a = json.loads((tmp_path / "sim" / "fits.json").read_text())
    b = json.loads((tmp_path / "ana" / "fits.json").read_text())
    assert a == b


def test_shot_mode_round_trip_needs_shots(tmp_path):
    cfg = write(tmp_path, SMALL_SUITE + "[noise]\nscenario = non_qnd\neta = 0.05\n")
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "s"), "--shots", "512"]) == 0
    curves = str(tmp_path / "s" / "decay_curves.csv")
    assert cli.main(["analyze", curves, "--out", str(tmp_path / "a"), "--shots", "512"]) == 0
    assert (tmp_path / "s" / "fits.json").read_text() == (tmp_path / "a" / "fits.json").read_text()


def test_curve_file_round_trip_in_memory(tmp_path):
    cfg = parse_config(SMALL_SUITE + "[noise]\nscenario = cross_measurement\np_m = 0.02\n")
    data = run_suite(cfg.suite, cfg.noise_model())
    path = write_curves(data.curves, tmp_path / "c.csv")
    back = read_curves(path)
    for key, curve in data.curves.items():
        assert np.array_equal(curve.lengths, back[key].lengths)
        for x, y in zip(curve.samples, back[key].samples):
            assert np.array_equal(x, y)
        assert np.array_equal(curve.std, back[key].std)


@pytest.mark.parametrize("content,fragment", [
    ("", "empty file"),
    ("protocol,qubit,length,seq_index,probability\n", "no data rows"),
    ("a,b,c\n", "header"),
    ("protocol,qubit,length,seq_index,probability\nmcm_rb,control,1,0,1.5\n", ":2: probability"),
    ("protocol,qubit,length,seq_index,probability\nmcm_rb,qutrit,1,0,0.5\n", "unknown qubit"),
    ("protocol,qubit,length,seq_index,probability\nmcm_rb,control,x,0,0.5\n", ":2:"),
    ("protocol,qubit,length,seq_index,probability\nmcm_rb,control,1,0,0.5\nmcm_rb,control,1,0,0.5\n",
     "duplicate"),
    ("protocol,qubit,length,seq_index,probability\nmcm_rb,control,1,1,0.5\n", "seq_index"),
])
def test_bad_curve_files(tmp_path, content, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    with pytest.raises(DataFormatError, match=fragment):
        read_curves(p)
    assert cli.main(["analyze", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_DATA


def test_analyze_incomplete_suite(tmp_path):
    p = tmp_path / "partial.csv"
    p.write_text("protocol,qubit,length,seq_index,probability\n"
                 + "".join(f"mcm_rb,control,{n},0,0.9\n" for n in (1, 2, 4, 8)))
    assert cli.main(["analyze", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_DATA


def test_exit_code_for_bad_config(tmp_path, capsys):
    cfg = write(tmp_path, "[suite]\nt_m = 0.71\n[noise]\nscenario = none\n")
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert "run.ini:2" in capsys.readouterr().err
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.ini")]) == cli.EXIT_CONFIG


def test_numeric_failure_is_flagged(tmp_path, monkeypatch):
    from mcmrb import analysis

    def broken(*args, **kwargs):
        raise analysis.IRBError("reference decay alpha_del=0 is too small to resolve")

    monkeypatch.setattr(cli, "suite_result_from_fits", broken)
    cfg = write(tmp_path, SMALL_SUITE + "[noise]\nscenario = none\n")
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_NUMERIC
    summary = json.loads((tmp_path / "o" / "suite_result.json").read_text())
    assert summary["status"] == "numeric_failure"
    assert (tmp_path / "o" / "fits.json").exists()


def test_simulate_bundled_configs(tmp_path):
    out = tmp_path / "none"
    assert cli.main(["simulate", "--config", "none", "--out", str(out)]) == 0
    cls = json.loads((out / "classification.json").read_text())
    assert cls["signatures"] == ["NoMeasurementInducedError"]
    assert cli.main(["report", str(out)]) == 0


def test_nonqnd_bundled_config(tmp_path):
    assert cli.main(["simulate", "--config", "nonqnd_eta02", "--out", str(tmp_path)]) == 0
    eps = json.loads((tmp_path / "suite_result.json").read_text())["eps"]
    assert eps["mcm_rb/ancilla"]["value"] == pytest.approx(0.01, rel=0.1)
    assert eps["mcm_rep/ancilla"]["value"] == pytest.approx(0.01, rel=0.1)


def test_sweep_writes_summary(tmp_path):
    cfg = write(tmp_path, SMALL_SUITE + "[noise]\nscenario = cross_measurement\n"
                "[sweep]\nparameter = p_m\nvalues = 0.01, 0.05\n")
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "2"]) == 0
    lines = (tmp_path / "o" / "sweep_summary.csv").read_text().splitlines()
    assert lines[0].split(",") == list(cli.SWEEP_COLUMNS)
    assert len(lines) == 3
    assert len(list((tmp_path / "o" / "points").glob("*_suite_result.json"))) == 2
    cfg2 = write(tmp_path, SMALL_SUITE + "[noise]\nscenario = none\n", "nosweep.ini")
    assert cli.main(["sweep", "--config", cfg2, "--out", str(tmp_path / "p")]) == cli.EXIT_CONFIG


def test_metrics_identity_and_zphase(tmp_path):
    cfg = write(tmp_path, SMALL_SUITE + "[noise]\nscenario = none\n")
    assert cli.main(["metrics", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "error_ptm.csv").read_text().splitlines()
    values = np.array([[float(x) for x in r.split(",")[1:]] for r in rows[1:]])
    assert np.allclose(values, np.eye(16))

    theta = 0.04
    # just below sin(2 theta)**2 / 6 so residual control relaxation keeps the entry
    eps = float(0.99 * np.sin(2 * theta) ** 2 / 6)
    cfg = write(tmp_path, SMALL_SUITE + f"[noise]\nscenario = stark\nphi = {theta}rad\ncontrol_T1 = 1s\n"
                f"control_T2 = 1s\n[metrics]\neps_irb = {eps!r}\n", "stark.ini")
    assert cli.main(["metrics", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    rows = (tmp_path / "s" / "ptm_thresholded.csv").read_text().splitlines()
    labels = rows[0].split(",")[1:]
    m = np.array([[float(x) for x in r.split(",")[1:]] for r in rows[1:]])
    iy, ix = labels.index("IY"), labels.index("IX")
    assert m[iy, ix] == pytest.approx(np.sin(2 * theta), abs=1e-6)
    assert m[labels.index("IZ"), ix] == 0.0


def test_metrics_collision_table(tmp_path):
    assert cli.main(["metrics", "--config", "collision_d20", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "collision_infidelity.csv").read_text().splitlines()[1:]
    table = {float(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
    assert table[20.0] < table[5.0] < table[2.0]
