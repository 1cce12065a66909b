import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hetfade.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_STAT_FAIL, EXIT_USAGE, fmt, main, read_sample_file
from hetfade.config import FIG1_CONFIG, ConfigError, config_from_dict, parse_config


def _write_config(path, cfg):
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture
def fig1(tmp_path):
    return _write_config(tmp_path / "fig1.json", FIG1_CONFIG)


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


# config ------------------------------------------------------------------

def test_parse_fig1_config():
    config, model = parse_config(json.dumps(FIG1_CONFIG))
    assert config.K == 2 and config.alpha == 4
    assert [t.density for t in config.tiers] == [1, 2]
    assert [t.power for t in config.tiers] == [1, 2]
    assert model.m == 1 and model.omega == 1


@pytest.mark.parametrize("mutate, message", [
    (lambda c: c.update(alpha=2), "alpha must exceed 2"),
    (lambda c: c.update(tiers=[]), "tiers: at least one tier is required"),
    (lambda c: c["tiers"][1].update(density=0), "tiers[1].density must be > 0"),
    (lambda c: c["tiers"][0].update(power=-1), "tiers[0].power must be > 0"),
    (lambda c: c["fading"].update(m=0), "fading.m must be > 0"),
    (lambda c: c["fading"].update(type="rayleigh"), "fading.type"),
    (lambda c: c.pop("alpha"), "alpha: missing required field"),
    (lambda c: c.update(extra=1), "unknown top-level field"),
    (lambda c: c.update(alpha="4"), "alpha: expected a number"),
])
def test_config_errors_name_field(mutate, message):
    cfg = json.loads(json.dumps(FIG1_CONFIG))
    mutate(cfg)
    with pytest.raises(ConfigError, match=message.replace("[", r"\[").replace("]", r"\]")):
        config_from_dict(cfg)


def test_config_omega_default():
    cfg = json.loads(json.dumps(FIG1_CONFIG))
    del cfg["fading"]["omega"]
    assert config_from_dict(cfg)[1].omega == 1.0


def test_bad_json():
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("{")


def test_fmt():
    assert fmt(0.41510749651) == "0.415107497"
    assert fmt(1.0) == "1"
    assert fmt(12345.678912345) == "12345.6789"
    assert fmt(math.inf) == "inf"
    assert fmt(3) == "3"


# analytic ----------------------------------------------------------------

def test_analytic_default_grid(fig1):
    code, out, err = run(["analytic", "--config", fig1])
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["y", "f_h", "f_h_star_general", "f_h_star_closed"]
    body = rows[1:]
    assert len(body) == 101
    assert float(body[0][1]) == 1.0 and float(body[0][2]) == 0.0 and float(body[0][3]) == 0.0
    at_one = next(r for r in body if float(r[0]) == 1.0)
    assert float(at_one[3]) == pytest.approx(0.4151075, abs=5e-8)
    assert float(at_one[2]) == pytest.approx(float(at_one[3]), abs=1e-6)
    meta = json.loads(err)
    assert meta["skipped_rows"] == [] and meta["rows"] == 101
    assert meta["config"]["alpha"] == 4


def test_analytic_out_and_json(fig1, tmp_path):
    target = tmp_path / "a.csv"
    assert run(["analytic", "--config", fig1, "--grid", "0:1:0.5", "--out", str(target)])[0] == EXIT_OK
    assert len(_rows(target.read_text())) == 4
    assert json.loads((tmp_path / "a.csv.meta.json").read_text())["rows"] == 3
    code, out, _ = run(["analytic", "--config", fig1, "--grid", "0:1:0.5", "--format", "json"])
    doc = json.loads(out)
    assert doc["columns"][0] == "y" and len(doc["rows"]) == 3


def test_analytic_singular_origin_flags_row(tmp_path):
    cfg = json.loads(json.dumps(FIG1_CONFIG))
    cfg["fading"]["m"] = 0.5
    path = _write_config(tmp_path / "c.json", cfg)
    code, out, err = run(["analytic", "--config", path, "--grid", "0:1:0.25"])
    meta = json.loads(err)
    # f_h is infinite at 0 for m < 1; the row is kept and reported numerically
    assert code in (EXIT_OK, EXIT_NUMERICAL)
    assert len(_rows(out)) - 1 + len(meta["skipped_rows"]) == 5


# simulate ----------------------------------------------------------------

def test_simulate_byte_identical(fig1, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["simulate", "--config", fig1, "--trials", "300", "--seed", "3", "--n-max", "60", "--out", str(p)])[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rows = _rows(a.read_text())
    assert rows[0] == ["h_star", "tier", "order", "distance"] and len(rows) == 301
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["seed"] == 3 and meta["n_max"] == 60 and meta["trials"] == 300
    assert sum(meta["summary"]["tier_fractions"]) == pytest.approx(1.0)


def test_simulate_workers_same_output(fig1):
    one = run(["simulate", "--config", fig1, "--trials", "200", "--n-max", "30"])[1]
    two = run(["simulate", "--config", fig1, "--trials", "200", "--n-max", "30", "--workers", "2"])[1]
    assert one == two


# assoc -------------------------------------------------------------------

def test_assoc_conditional(fig1):
    code, out, err = run(["assoc", "--config", fig1, "--h", "1", "--n-max", "5"])
    assert code == EXIT_OK
    rows = {(int(r[0]), int(r[1])): float(r[2]) for r in _rows(out)[1:]}
    assert len(rows) == 10
    assert rows[(1, 1)] == pytest.approx(0.274270839, abs=1e-9)
    meta = json.loads(err)
    assert meta["tiers"][0]["bias"] == pytest.approx(2 ** -1.5)


def test_assoc_marginal(fig1):
    code, out, err = run(["assoc", "--config", fig1])
    assert code == EXIT_OK
    meta = json.loads(err)
    assert meta["n_max"] == 200
    np.testing.assert_allclose(meta["row_sums"], [0.2612, 0.7388], atol=1e-3)
    assert meta["total_plus_truncation"] == pytest.approx(1.0, abs=1e-6)
    assert len(_rows(out)) == 401


# compare -----------------------------------------------------------------

def _simulate(cfg_path, out, trials=10_000, seed=0, n_max=500):
    code = run(["simulate", "--config", cfg_path, "--trials", str(trials), "--seed", str(seed),
                "--n-max", str(n_max), "--out", str(out)])[0]
    assert code == EXIT_OK
    return str(out)


def test_compare_pass_and_fail(fig1, tmp_path):
    samples = _simulate(fig1, tmp_path / "s.csv", trials=5000, n_max=200)
    code, out, _ = run(["compare", "--samples", samples, "--config", fig1])
    assert code == EXIT_OK and json.loads(out)["report"]["pass"] is True
    code, out, _ = run(["compare", "--samples", samples, "--config", fig1, "--target", "original"])
    assert code == EXIT_STAT_FAIL and json.loads(out)["report"]["pass"] is False


def test_compare_two_sample_across_networks(tmp_path):
    one = _write_config(tmp_path / "one.json", {"alpha": 4, "tiers": [{"density": 1, "power": 1}],
                                                 "fading": {"type": "nakagami", "m": 1}})
    three = _write_config(tmp_path / "three.json", {"alpha": 4, "tiers": [
        {"density": 1, "power": 1}, {"density": 2, "power": 4}, {"density": 5, "power": 0.25}],
        "fading": {"type": "nakagami", "m": 1}})
    a = _simulate(one, tmp_path / "a.csv", trials=5000, seed=1, n_max=200)
    b = _simulate(three, tmp_path / "b.csv", trials=5000, seed=2, n_max=200)
    code, out, _ = run(["compare", "--samples", a, "--against", b])
    assert code == EXIT_OK
    assert json.loads(out)["report"]["sizes"] == [5000, 5000]


def test_read_sample_file_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    code, _, err = run(["compare", "--samples", str(bad), "--against", str(bad)])
    assert code == EXIT_USAGE and "expected header" in err
    good = tmp_path / "good.csv"
    good.write_text("h_star,tier,order,distance\n0.5,1,1,0.2\n1.5,2,3,0.9\n")
    np.testing.assert_array_equal(read_sample_file(str(good)), [0.5, 1.5])
    np.testing.assert_array_equal(read_sample_file(str(good), "order"), [1, 3])


# reproduce-fig1 ----------------------------------------------------------

def test_reproduce_fig1_bundle(fig1, tmp_path):
    out = tmp_path / "bundle"
    code, stdout, _ = run(["reproduce-fig1", "--config", fig1, "--out", str(out), "--trials", "3000",
                           "--n-max", "100", "--m-values", "0.5,1,3,10"])
    assert code == EXIT_OK
    names = sorted(os.listdir(out))
    assert names == ["fig1_m0.5.csv", "fig1_m1.csv", "fig1_m10.csv", "fig1_m3.csv", "manifest.json"]
    manifest = json.loads((out / "manifest.json").read_text())
    runs = {r["m"]: r for r in manifest["runs"]}
    assert runs[10.0]["sup_pdf_gap"] < runs[0.5]["sup_pdf_gap"]
    assert all(r["ks_h_star_vs_effective"]["pass"] for r in runs.values())
    assert all(r["ks_gains_vs_original"]["pass"] for r in runs.values())
    rows = _rows((out / "fig1_m1.csv").read_text())
    assert rows[0] == ["y", "f_h", "f_h_star", "sim_h_star_density", "sim_h_density"]
    assert len(rows) == 51
    assert json.loads(stdout)["all_passed"] is True


def test_default_m_values(fig1, tmp_path):
    out = tmp_path / "d"
    assert run(["reproduce-fig1", "--config", fig1, "--out", str(out), "--trials", "200", "--n-max", "20"])[0] in (EXIT_OK, EXIT_STAT_FAIL)
    assert sorted(os.listdir(out)) == ["fig1_m0.5.csv", "fig1_m1.csv", "fig1_m3.csv", "manifest.json"]


# usage and exit codes ----------------------------------------------------

@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["analytic"],
    ["simulate", "--config", "x.json", "--trials", "ten"],
    ["analytic", "--config", "missing.json"],
])
def test_usage_errors(argv):
    assert run(argv)[0] == EXIT_USAGE


def test_invalid_config_exit(tmp_path):
    cfg = json.loads(json.dumps(FIG1_CONFIG))
    cfg["alpha"] = 2
    path = _write_config(tmp_path / "bad.json", cfg)
    code, _, err = run(["analytic", "--config", path])
    assert code == EXIT_USAGE and "alpha must exceed 2" in err


def test_bad_grid_and_h(fig1):
    assert run(["analytic", "--config", fig1, "--grid", "0:1"])[0] == EXIT_USAGE
    assert run(["assoc", "--config", fig1, "--h", "-1"])[0] == EXIT_USAGE


def test_module_entry_point(fig1):
    proc = subprocess.run([sys.executable, "-m", "hetfade", "assoc", "--config", fig1, "--h", "1", "--n-max", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1] == "1,1,0.274270839"
