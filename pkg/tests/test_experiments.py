import os
import subprocess
import sys

import numpy as np
import pytest

from conslab.cli import main
from conslab.experiments import (ConfigError, ExperimentConfig, fit_slope,
                                 pairwise_slopes, parse_config, run_experiment)


def write_config(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_config_roundtrip(tmp_path):
    path = write_config(tmp_path, """
# comment line
experiment = wente
ns = 17, 33
seed = 5
samples = 4
bc = dirichlet
domain = disk_mask
lam = 0.25
out = results
""")
    cfg = parse_config(path)
    assert cfg.experiment == "wente"
    assert cfg.ns == (17, 33)
    assert cfg.seed == 5
    assert cfg.lam == 0.25


def test_parse_config_rejects_unknown_key(tmp_path):
    path = write_config(tmp_path, "experiment = wente\nwidth = 3\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(path)


def test_parse_config_rejects_bad_value(tmp_path):
    path = write_config(tmp_path, "experiment = wente\nns = a, b\n")
    with pytest.raises(ConfigError):
        parse_config(path)


def test_config_rejects_even_or_descending_sizes(tmp_path):
    path = write_config(tmp_path, "experiment = wente\nns = 18\n")
    with pytest.raises(ConfigError, match="odd"):
        parse_config(path)
    path = write_config(tmp_path, "experiment = wente\nns = 33, 17\n")
    with pytest.raises(ConfigError, match="ascending"):
        parse_config(path)


def test_fit_slope_synthetic_quadratic():
    ns = (33, 65, 129)
    values = [(2.0 / (n - 1)) ** 2 for n in ns]
    assert abs(fit_slope(ns, values) - 2.0) <= 1e-6
    pw = pairwise_slopes(ns, values)
    assert all(abs(s - 2.0) <= 1e-9 for s in pw)


def test_fit_slope_constant_is_zero():
    ns = (33, 65, 129)
    assert abs(fit_slope(ns, [0.7, 0.7, 0.7])) <= 1e-12


def test_wente_experiment_deterministic_bytes(tmp_path):
    cfg = ExperimentConfig(experiment="wente", ns=(17,), seed=9, samples=3,
                           out=str(tmp_path / "a")).validate()
    run_experiment(cfg)
    cfg2 = ExperimentConfig(experiment="wente", ns=(17,), seed=9, samples=3,
                            out=str(tmp_path / "b")).validate()
    run_experiment(cfg2)
    b1 = open(tmp_path / "a" / "wente.csv", "rb").read()
    b2 = open(tmp_path / "b" / "wente.csv", "rb").read()
    assert b1 == b2


def test_wente_jobs_parallel_matches_serial(tmp_path):
    cfg = ExperimentConfig(experiment="wente", ns=(17,), seed=4, samples=4,
                           out=str(tmp_path / "s")).validate()
    run_experiment(cfg)
    cfg2 = ExperimentConfig(experiment="wente", ns=(17,), seed=4, samples=4,
                            jobs=2, out=str(tmp_path / "p")).validate()
    run_experiment(cfg2)
    assert open(tmp_path / "s" / "wente.csv").read() == \
        open(tmp_path / "p" / "wente.csv").read()


def test_cli_run_wente_exit_zero(tmp_path):
    path = write_config(tmp_path, f"""
experiment = wente
ns = 33
seed = 7
samples = 20
out = {tmp_path / 'out'}
""")
    code = main(["run", path])
    assert code == 0
    rows = open(tmp_path / "out" / "wente.csv").read().strip().splitlines()
    assert len(rows) == 21  # header + 20 samples


def test_cli_malformed_config_exit_two_no_csv(tmp_path):
    path = write_config(tmp_path, "experiment = wente\nbanana = 1\n")
    out = tmp_path / "never"
    code = main(["run", path, "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_cli_missing_config_exit_two(tmp_path):
    code = main(["run", str(tmp_path / "nope.txt")])
    assert code == 2


def test_cli_bound_failure_exit_one(tmp_path):
    # the staircase disk cannot meet the quantitative potential-identity
    # bound; the gauge experiment on it must fail its bound and exit 1
    path = write_config(tmp_path, f"""
experiment = gauge
ns = 33
lams = 0.3
domain = disk_mask
out = {tmp_path / 'out'}
""")
    code = main(["run", path])
    assert code == 1
    assert (tmp_path / "out" / "gauge.csv").exists()


def test_cli_gauge_square_passes(tmp_path):
    path = write_config(tmp_path, f"""
experiment = gauge
ns = 33
lams = 0.1, 0.3
domain = square
out = {tmp_path / 'out'}
""")
    code = main(["run", path])
    assert code == 0


def test_cli_heinz_two_grids(tmp_path):
    path = write_config(tmp_path, f"""
experiment = heinz
ns = 33, 65
H = 2.0
lam = 0.5
out = {tmp_path / 'out'}
""")
    code = main(["run", path])
    assert code == 0
    data = open(tmp_path / "out" / "heinz.csv").read()
    assert "antisym_defect" in data


def test_cli_convergence_needs_three_grids(tmp_path):
    path = write_config(tmp_path, f"""
experiment = convergence
payload = harmonic
ns = 33, 65
out = {tmp_path / 'out'}
""")
    code = main(["run", path])
    assert code == 2


def test_cli_seed_override_changes_rows(tmp_path):
    base = f"""
experiment = wente
ns = 17
samples = 2
seed = 1
out = {tmp_path / 'o1'}
"""
    p = write_config(tmp_path, base)
    main(["run", p])
    p2 = write_config(tmp_path, base.replace("o1", "o2"), name="cfg2.txt")
    main(["run", p2, "--seed", "2"])
    assert open(tmp_path / "o1" / "wente.csv").read() != \
        open(tmp_path / "o2" / "wente.csv").read()


def test_cli_env_var_output(tmp_path, monkeypatch):
    out = tmp_path / "envout"
    monkeypatch.setenv("CONSLAB_OUT", str(out))
    path = write_config(tmp_path, "experiment = wente\nns = 17\nsamples = 1\n")
    code = main(["run", path])
    assert code == 0
    assert (out / "wente.csv").exists()


def test_console_entry_point_exists():
    proc = subprocess.run([sys.executable, "-m", "conslab.cli", "run",
                           "/nonexistent-config"], capture_output=True)
    assert proc.returncode == 2


def test_convergence_flags_constant_residuals_fail(monkeypatch):
    import conslab.experiments as ex
    monkeypatch.setattr(ex, "convergence_quantities",
                        lambda cfg, n: {"residual_l2": 0.5})
    cfg = ExperimentConfig(experiment="convergence", ns=(33, 65, 129))
    files, summary = ex.run_convergence(cfg)
    name, ok, detail = summary[0]
    assert not ok
    slope_rows = files["convergence_slopes.csv"][1]
    assert slope_rows[0][-1] == 0  # pass flag cleared


def test_config_tolerance_keys(tmp_path):
    path = write_config(tmp_path, """
experiment = conslaw
ns = 33
tol_div = 1e-6
energy_threshold = 9.0
force = true
tol_fp = 1e-7
max_sweeps = 12
""")
    cfg = parse_config(path)
    assert cfg.gauge_options().tol_div == 1e-6
    assert cfg.gauge_options().energy_threshold == 9.0
    assert cfg.ab_options().max_sweeps == 12
