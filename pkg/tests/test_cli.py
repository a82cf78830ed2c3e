import json
import os

import numpy as np
import pytest

from nonlocal_spectra.cli import main
from nonlocal_spectra.csvio import read_csv
from nonlocal_spectra.svgplot import plot_csv
from nonlocal_spectra.errors import SchemaMismatch

PI = 3.141592653589793

LAPLACE_EIG = f"""
seed = 42

[domain]
dimension = 1
shape = "interval"
left = 0.0
right = {PI}

[grid]
h = {PI / 200}

[coefficients]
a = 1.0
c = 0.0

[kernel]
variant = "none"

[command]
name = "eig"
"""


def write_config(tmp_path, text, name="case.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_cli(*args):
    return main(list(args))


def test_eig_smoke(tmp_path):
    cfg = write_config(tmp_path, LAPLACE_EIG)
    out = tmp_path / "run"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    for name in ("summary.csv", "eigenfunction.csv", "manifest.json"):
        assert (out / name).exists()
    header, rows = read_csv(out / "summary.csv")
    values = {r[0]: float(r[1]) for r in rows}
    assert abs(values["lambda"] - 1.0) < 0.01


def test_missing_kernel_variant_exits_2(tmp_path, capsys):
    broken = LAPLACE_EIG.replace('variant = "none"', "mass = 1.0")
    cfg = write_config(tmp_path, broken)
    assert run_cli("--config", cfg, "--out", str(tmp_path / "x")) == 2
    err = capsys.readouterr().err
    assert "variant" in err and "kernel" in err


def test_unparsable_config_exits_2_with_location(tmp_path, capsys):
    cfg = write_config(tmp_path, "[domain\nshape=")
    assert run_cli("--config", cfg, "--out", str(tmp_path / "x")) == 2
    assert "line" in capsys.readouterr().err


def test_computational_refusal_exits_1(tmp_path, capsys):
    # potential 2 drives the rate negative: the linear solve must refuse
    text = LAPLACE_EIG.replace("c = 0.0", "c = 2.0").replace(
        'name = "eig"', 'name = "semilinear"\nnonlinearity = "-1"\n'
        'sub = "0"\nsuper = "x*(pi - x)/2"')
    cfg = write_config(tmp_path, text)
    code = run_cli("--config", cfg, "--out", str(tmp_path / "x"))
    assert code == 1


def test_rerun_same_seed_byte_identical(tmp_path):
    cfg = write_config(tmp_path, LAPLACE_EIG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli("--config", cfg, "--out", str(out1)) == 0
    assert run_cli("--config", cfg, "--out", str(out2)) == 0
    for name in ("summary.csv", "eigenfunction.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_rerun_from_manifest_byte_identical(tmp_path):
    cfg = write_config(tmp_path, LAPLACE_EIG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli("--config", cfg, "--out", str(out1), "--set",
                   "command.simplicity=true") == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert run_cli("--from-manifest", str(out1 / "manifest.json"),
                   "--out", str(out2)) == 0
    for name in manifest["artifacts"]:
        if name.endswith(".csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_override_changes_result(tmp_path):
    cfg = write_config(tmp_path, LAPLACE_EIG)
    out = tmp_path / "o"
    assert run_cli("--config", cfg, "--out", str(out), "--set",
                   "coefficients.c=-1.0") == 0
    _, rows = read_csv(out / "summary.csv")
    values = {r[0]: float(r[1]) for r in rows}
    assert abs(values["lambda"] - 2.0) < 0.01


def test_sweep_command_with_plot(tmp_path):
    text = """
seed = 1

[domain]
dimension = 1
shape = "ball"
radius = 16.0

[grid]
h = 0.1

[kernel]
variant = "none"

[command]
name = "sweep"
radii = [2.0, 4.0, 8.0, 16.0]

[output]
plot = true
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "sweep"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    svg = (out / "sweep.svg").read_text()
    assert svg.count("<polyline") == 1
    poly = svg.split("<polyline")[1].split('points="')[1].split('"')[0]
    assert len(poly.split()) == 4  # one vertex per sweep radius
    header, rows = read_csv(out / "sweep.csv")
    assert header == ["radius", "lambda", "residual"]
    assert len(rows) == 4


def test_profile_plot_validation(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("x,psi\n0.0,0.1\n0.5,0.9\n1.0,0.2\n")
    plot_csv(good, tmp_path / "good.svg", "profile")
    bad = tmp_path / "bad.csv"
    bad.write_text("x,psi\n0.5,0.1\n0.1,0.9\n")
    with pytest.raises(SchemaMismatch):
        plot_csv(bad, tmp_path / "bad.svg", "profile")
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaMismatch):
        plot_csv(empty, tmp_path / "empty.svg", "line")


def test_exterior_command(tmp_path):
    text = """
[domain]
dimension = 1
shape = "ball"
radius = 9.0

[grid]
h = 0.1

[command]
name = "exterior"
inner_radius = 1.0
outer_radii = [3.0, 5.0, 9.0]
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "ext"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    _, rows = read_csv(out / "exterior.csv")
    values = [float(r[1]) for r in rows]
    assert values == sorted(values, reverse=True)


def test_mp_command(tmp_path):
    text = """
[domain]
dimension = 1
shape = "interval"
left = -40.0
right = 40.0

[grid]
h = 0.1

[command]
name = "mp"
phi_max = 1000.0
phi_max_super = 5.0
bisect_tol = 0.02
bracket = [-1.0, 1.0]
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "mp"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    _, rows = read_csv(out / "mp_report.csv")
    report = {r[0]: r for r in rows}
    assert abs(float(report["positive_subsolution_rate"][1])) <= 0.05
    assert report["ordering_super_ge_sub"][3] == "PASS"
    assert report["floor_minus_sup_c"][3] == "PASS"
    assert report["refined_mp_max_u"][3] == "PASS"
    _, sens = read_csv(out / "cap_sensitivity.csv")
    assert len(sens) == 3


def test_semilinear_command(tmp_path):
    text = f"""
[domain]
dimension = 1
shape = "interval"
left = 0.0
right = {PI}

[grid]
h = {PI / 100}

[command]
name = "semilinear"
nonlinearity = "-1"
sub = "0"
super = "x*(pi - x)/2"
theta = 0.0
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "semi"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    _, rows = read_csv(out / "solution.csv")
    xs = np.array([float(r[0]) for r in rows])
    us = np.array([float(r[1]) for r in rows])
    assert np.abs(us - xs * (PI - xs) / 2).max() < 1e-8


def test_classify_command(tmp_path):
    text = """
[domain]
dimension = 1
shape = "ball"
radius = 2.0

[grid]
h = 0.1

[kernel]
variant = "uniform"
mass = 2.0
radius = 1.0

[command]
name = "classify"
radii = [1.0, 2.0]
alpha = 1.0
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "cls"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    _, rows = read_csv(out / "classification.csv")
    assert all(r[-1] == "1" for r in rows)
    assert "PASS" in (out / "summary.txt").read_text()


def test_oracle_and_compare_commands(tmp_path):
    text = f"""
seed = 7

[domain]
dimension = 1
shape = "interval"
left = 0.0
right = {PI}

[grid]
h = 0.05

[command]
name = "compare"
horizon = 1.0
dt = 0.002
paths = 4000
bootstrap = 50
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "cmp"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    _, rows = read_csv(out / "compare.csv")
    values = {r[0]: float(r[1]) for r in rows}
    assert values["within_tolerance"] == 1.0


def test_harnack_command(tmp_path):
    text = """
seed = 42

[domain]
dimension = 1
shape = "ball"
radius = 8.0

[grid]
h = 0.2

[kernel]
variant = "uniform"
mass = 2.0
radius = 1.0

[command]
name = "harnack"
window_radius = 0.5
samples = 4
refinements = 1
"""
    cfg = write_config(tmp_path, text)
    out = tmp_path / "har"
    assert run_cli("--config", cfg, "--out", str(out)) == 0
    _, rows = read_csv(out / "harnack_verdict.csv")
    values = {r[0]: float(r[1]) for r in rows}
    assert values["failure_flag"] == 0.0
