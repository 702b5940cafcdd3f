import numpy as np
import pytest

from symmetra.grid import Domain
from symmetra.minimax import (
    RoundStats,
    SolverConfig,
    SolverError,
    SweepStats,
    barrier_estimate,
    descend_round,
    find_endpoint,
    init_path,
    polarization_sweep,
    solve,
    symmetrize_path,
)
from symmetra.model import FAULT_MODELS, preset
from symmetra.rearrange import asymmetry


@pytest.fixture(scope="module")
def semi():
    return preset("semilinear")


def test_endpoint_negative(semi, dom17):
    e = find_endpoint(semi, dom17)
    path = init_path(e, 8, semi)
    path.check(semi)
    assert path.energies[-1] < 0 and path.energies[0] == 0.0


def test_init_path_straight_segment(semi, dom17):
    e = find_endpoint(semi, dom17)
    path = init_path(e, 4, semi)
    np.testing.assert_array_equal(path.points[2], 0.5 * e.values)
    one = init_path(e, 1, semi)
    assert one.k == 1 and barrier_estimate(one) == 0.0
    with pytest.raises(ValueError):
        init_path(e, 0, semi)
    with pytest.raises(ValueError):
        init_path(e * 1e-6, 4, semi)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol_res=0)
    with pytest.raises(ValueError):
        SolverConfig(k=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=-1)
    with pytest.raises(ValueError):
        SolverConfig(model_check="maybe")
    assert SolverConfig().tol_geom(Domain(2, 33)) == pytest.approx(10 * 2 / 32)


def test_descent_round_lowers_max(semi, dom17):
    cfg = SolverConfig(k=12)
    path = init_path(find_endpoint(semi, dom17), cfg.k, semi)
    before = path.max_energy
    stats = RoundStats()
    for _ in range(5):
        descend_round(path, semi, cfg, stats)
    assert path.max_energy < before
    path.check(semi)
    assert np.all(path.points[0] == 0) and path.energies[-1] < 0


def test_sweep_keeps_radial_path_nearly_radial(semi, dom17):
    # interpolated reflections move a radial function only by interpolation error
    cfg = SolverConfig(k=8)
    path = init_path(find_endpoint(semi, dom17), cfg.k, semi)
    polarization_sweep(path, semi, cfg, np.random.default_rng(0))
    tol = cfg.tol_geom(dom17)
    for u in path.functions():
        assert asymmetry(u) <= 0.05 * tol * max(1.0, np.abs(u.values).max())


def test_sweep_does_not_raise_max(semi, dom17):
    cfg = SolverConfig(k=8)
    dom = dom17
    shift = dom.from_function(lambda x: np.cos(0.5 * np.pi * np.minimum(1, np.hypot(x[0] - 0.3, x[1]) / 0.7)) ** 2)
    e = shift * 1.0
    while True:
        try:
            path = init_path(e, cfg.k, semi)
            break
        except ValueError:
            e = e * 2.0
    before = path.max_energy
    stats = SweepStats()
    for seed in range(5):
        polarization_sweep(path, semi, cfg, np.random.default_rng(seed), stats)
    tol = cfg.tol_geom(dom)
    assert path.max_energy <= before + tol * (1 + abs(before))
    path.check(semi)


def _shifted_path(semi, dom, k):
    shift = dom.from_function(
        lambda x: np.cos(0.5 * np.pi * np.minimum(1, np.hypot(x[0] - 0.25, x[1] + 0.1) / 0.75)) ** 2
    )
    e = shift * 1.0
    while True:
        try:
            return init_path(e, k, semi)
        except ValueError:
            e = e * 2.0


def test_symmetrize_path_reduces_in_band_asymmetry(semi, dom17):
    cfg = SolverConfig(k=8, sweep_budget=120)
    for seed in range(3):
        path = _shifted_path(semi, dom17, cfg.k)
        band = (0.0, np.inf)
        start = max(asymmetry(path.function(i)) for i in range(path.k + 1) if path.energies[i] >= 0)
        _, worst, sweeps = symmetrize_path(path, band, 0.05 * start, semi, cfg, np.random.default_rng(seed))
        assert worst <= 0.05 * start and sweeps <= cfg.sweep_budget
        path.check(semi)


def test_symmetrize_path_vacuous_target(semi, dom17):
    cfg = SolverConfig(k=8, sweep_budget=5)
    path = _shifted_path(semi, dom17, cfg.k)
    _, worst, sweeps = symmetrize_path(path, (0.0, np.inf), np.inf, semi, cfg, np.random.default_rng(0))
    assert sweeps == 0
    _, worst, sweeps = symmetrize_path(path, (0.0, np.inf), 0.0, semi, cfg, np.random.default_rng(0))
    assert sweeps == 5 and worst > 0


def test_max_iter_zero_reports_initial_path(semi, dom17):
    cfg = SolverConfig(k=8, max_iter=0)
    rep = solve(semi, dom17, cfg)
    ref = init_path(find_endpoint(semi, dom17), 8, semi)
    assert not rep.converged and rep.status == "max_iter" and rep.iterations == 0
    assert rep.trace == [] and rep.descent_rounds == 0
    for a, b in zip(rep.path.points, ref.points):
        np.testing.assert_array_equal(a, b)


@pytest.fixture(scope="module")
def small_solve():
    cfg = SolverConfig(k=12, tol_sym=0.05, max_iter=60)
    return solve(preset("semilinear"), Domain(2, 17), cfg), cfg


def test_small_solve_converges(small_solve):
    rep, cfg = small_solve
    assert rep.converged and rep.status == "converged"
    assert rep.slope <= cfg.tol_res
    assert rep.monotonicity_violations == 0
    assert rep.critical_value > 0
    rep.path.check(preset("semilinear"))
    d = rep.to_dict()
    assert "solution" not in d and d["n"] == 17 and d["trace_length"] == len(rep.trace)


def test_solution_is_nearly_radial(small_solve):
    rep, cfg = small_solve
    u = rep.solution
    assert np.all(u.active_values >= -1e-12)
    assert asymmetry(u) <= cfg.tol_sym * np.sqrt(u.domain.cell_volume * np.sum(u.values**2))


def test_solve_bit_reproducible(small_solve):
    rep, cfg = small_solve
    again = solve(preset("semilinear"), Domain(2, 17), cfg)
    assert again.critical_value == rep.critical_value
    np.testing.assert_array_equal(again.solution.values, rep.solution.values)
    assert again.trace == rep.trace


def test_model_check_rejects_fault_model(dom17):
    bad, _ = FAULT_MODELS["F2"]
    with pytest.raises(SolverError):
        solve(bad(), dom17, SolverConfig(k=4, max_iter=0))
    rep = solve(bad(), dom17, SolverConfig(k=4, max_iter=0, model_check="off"))
    assert rep.status == "max_iter"


def test_no_mountain_pass_geometry(dom17):
    m = preset("semilinear")
    m.G = lambda r, s: np.zeros_like(np.asarray(s, dtype=float))
    m.g = lambda r, s: np.zeros_like(np.asarray(s, dtype=float))
    with pytest.raises(SolverError):
        find_endpoint(m, dom17)
