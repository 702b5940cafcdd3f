import json

import numpy as np
import pytest
from click.testing import CliRunner

from symmetra.cli import main
from symmetra.grid import Domain, load, save


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def ufile(tmp_path):
    u = Domain(2, 9).from_function(lambda x: (1 - (x**2).sum(0)) * (1.5 + x[0]))
    path = tmp_path / "u.json"
    save(u, path)
    return path


def test_solve_small(runner, tmp_path):
    out, sol, trace = tmp_path / "r.json", tmp_path / "u.csv", tmp_path / "t.csv"
    res = runner.invoke(
        main,
        ["solve", "--n", "17", "--k", "12", "--tol-sym", "0.05", "--max-iter", "60",
         "--out", str(out), "--solution", str(sol), "--trace", str(trace), "--plot-dir", str(tmp_path / "plots")],
    )
    assert res.exit_code == 0, res.output
    rep = json.loads(out.read_text())
    assert rep["converged"] and rep["schema_version"] == 1 and rep["n"] == 17
    assert load(sol).domain.n == 17
    assert (tmp_path / "plots" / "profile.csv").exists()


def test_solve_not_converged_exit_2(runner):
    res = runner.invoke(main, ["solve", "--n", "9", "--k", "4", "--max-iter", "1"])
    assert res.exit_code == 2, res.output
    assert json.loads(res.output)["status"] == "max_iter"


def test_solve_with_config(runner, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nn = 9\n\n[solver]\nk = 4\nmax_iter = 0\n")
    res = runner.invoke(main, ["solve", "--config", str(cfg)])
    assert res.exit_code == 2
    assert json.loads(res.output)["config"]["k"] == 4


def test_missing_model_is_error(runner):
    res = runner.invoke(main, ["solve", "--model", "no/such/model.toml", "--n", "9"])
    assert res.exit_code == 1
    assert "error:" in res.output


def test_verify(runner, tmp_path):
    out = tmp_path / "v.json"
    res = runner.invoke(main, ["verify", "--suite", "envelope", "--out", str(out)])
    assert res.exit_code == 0
    assert json.loads(out.read_text())["failures"] == []


def test_symmetrize_and_polarize(runner, ufile, tmp_path):
    s = tmp_path / "s.json"
    assert runner.invoke(main, ["symmetrize", "--in", str(ufile), "--out", str(s)]).exit_code == 0
    p = tmp_path / "p.json"
    res = runner.invoke(main, ["polarize", "--in", str(ufile), "--alpha", "1,0", "--beta", "0", "--out", str(p)])
    assert res.exit_code == 0, res.output
    u, up = load(ufile), load(p)
    np.testing.assert_allclose(np.sort(up.active_values), np.sort(np.abs(u.active_values)))
    res = runner.invoke(main, ["polarize", "--in", str(ufile), "--alpha", "1,0", "--beta", "inf", "--out", str(p)])
    assert res.exit_code == 0
    np.testing.assert_array_equal(load(p).values, np.abs(u.values))


def test_polarize_incompatible_is_error(runner, ufile, tmp_path):
    res = runner.invoke(main, ["polarize", "--in", str(ufile), "--alpha", "0.6,0.8", "--beta", "0.1",
                               "--out", str(tmp_path / "p.json")])
    assert res.exit_code == 1


def test_check_model(runner):
    res = runner.invoke(main, ["check-model", "--model", "semilinear", "--samples", "500"])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["model"] == "semilinear"
    res = runner.invoke(main, ["check-model", "--config", "configs/quasilinear.toml", "--samples", "500"])
    assert res.exit_code == 0, res.output
    assert runner.invoke(main, ["check-model"]).exit_code == 2  # usage error


def test_energy_and_slope(runner, ufile):
    res = runner.invoke(main, ["energy", "--in", str(ufile)])
    assert res.exit_code == 0
    assert "total" in json.loads(res.output)
    res = runner.invoke(main, ["slope", "--in", str(ufile)])
    assert res.exit_code == 0
    assert json.loads(res.output)["slope"] > 0


def test_oracle(runner, tmp_path):
    prof = tmp_path / "o.csv"
    res = runner.invoke(main, ["oracle", "--n", "17", "--profile", str(prof)])
    assert res.exit_code == 0
    assert json.loads(res.output)["c_oracle"] > 0
    assert load(prof).domain.n == 17
