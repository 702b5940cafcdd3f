import numpy as np
import pytest

from symmetra.energy import (
    EnergyError,
    dual_norm,
    energy,
    energy_gradient,
    epigraph_slope_convert,
    epigraph_slope_invert,
    lipschitz_envelope,
    polarization_energy_gap,
    slope,
    sobolev_gradient,
)
from symmetra.grid import Domain, h1_inner
from symmetra.model import preset
from symmetra.rearrange import PolarizerMode, lattice_polarizers, polarize_nonneg
from symmetra.verify import smooth_bump

SEMI, QUASI = preset("semilinear"), preset("quasilinear")


def test_zero_function():
    dom = Domain(2, 17)
    e = energy(dom.zeros(), SEMI)
    assert (e.total, e.quasilinear, e.potential) == (0.0, 0.0, 0.0)
    assert slope(dom.zeros(), QUASI).value == 0.0


def test_single_node_hand_count():
    # a spike of height a: 2d forward/backward differences of size a/h
    dom = Domain(2, 33)
    a = 0.7
    u = dom.zeros()
    u.values[16, 16] = a
    e = energy(u, SEMI)
    assert e.quasilinear == pytest.approx(0.5 * a**2 * 4 * dom.h ** (dom.d - 2), rel=1e-14)
    assert e.potential == pytest.approx(dom.cell_volume * a**4 / 4, rel=1e-14)


def test_quasilinear_part_matches_h1_for_semilinear(dom17, rng):
    u = dom17.from_active(rng.normal(size=dom17.n_active))
    assert energy(u, SEMI).quasilinear == pytest.approx(0.5 * h1_inner(u, u), rel=1e-13)


def test_nonfinite_integrand_is_reported(dom9):
    m = preset("semilinear")
    m.G = lambda r, s: np.where(np.asarray(s) > 0, np.inf, 0.0)
    u = dom9.from_active(np.ones(dom9.n_active))
    with pytest.raises(EnergyError, match="G integrand"):
        energy(u, m)


@pytest.mark.parametrize("m", [SEMI, QUASI], ids=["semilinear", "quasilinear"])
def test_gradient_matches_central_differences(m):
    dom = Domain(2, 9)
    rng = np.random.default_rng(5)
    u = dom.from_active(rng.uniform(-1, 1, dom.n_active))
    res = energy_gradient(u, m)
    step = 1e-6 * np.abs(u.values).max()
    for idx in map(tuple, np.argwhere(dom.active)):
        up, um = u.copy(), u.copy()
        up.values[idx] += step
        um.values[idx] -= step
        fd = (energy(up, m).total - energy(um, m).total) / (2 * step * dom.cell_volume)
        assert fd == pytest.approx(res[idx], rel=1e-5, abs=1e-5 * np.abs(res).max())
    assert np.all(res[~dom.active] == 0)


def test_slope_depends_only_on_residual(dom17, rng):
    u = dom17.from_active(rng.normal(size=dom17.n_active))
    r = energy_gradient(u, SEMI)
    assert slope(u, SEMI).value == dual_norm(r, dom17)[0]


def test_slope_of_lifted_oracle_is_small():
    from symmetra.oracle import oracle_semilinear

    res = oracle_semilinear(2, 4.0, Domain(2, 33))
    noise = Domain(2, 33).from_active(np.random.default_rng(0).normal(size=res.lifted.active_values.size))
    assert slope(res.lifted, SEMI).value < 0.1 * slope(res.lifted + noise, SEMI).value


@pytest.mark.parametrize("m", [SEMI, QUASI], ids=["semilinear", "quasilinear"])
def test_sobolev_step_first_order(m):
    dom = Domain(2, 17)
    rng = np.random.default_rng(8)
    u = dom.from_active(rng.uniform(0, 1, dom.n_active))
    w = sobolev_gradient(u, m)
    s = slope(u, m).value
    sigma = 1e-4
    drop = energy(u, m).total - energy(u - w * sigma, m).total
    assert drop == pytest.approx(sigma * s**2, rel=0.1)


def test_cg_failure_raises(dom17, rng, monkeypatch):
    import scipy.sparse.linalg as spla

    monkeypatch.setattr(spla, "cg", lambda *a, **k: (np.zeros(dom17.n_active), 5))
    with pytest.raises(EnergyError, match="CG"):
        dual_norm(dom17.from_active(rng.normal(size=dom17.n_active)).values, dom17)


def test_polarization_energy_equality_exact_mode():
    dom = Domain(2, 33)
    rng = np.random.default_rng(4)
    tol = 10 * dom.h
    for m in (SEMI, QUASI):
        for H in lattice_polarizers(2, 33, max_offset=6)[::3]:
            u = smooth_bump(dom, rng)
            ju = energy(u, m).quasilinear
            uh = polarize_nonneg(u, H, PolarizerMode.EXACT)
            assert polarization_energy_gap(u, uh, m) <= tol * (1 + ju)
            # potential of an x-independent g is a multiset function
            assert energy(uh, m).potential == pytest.approx(energy(u, m).potential, rel=1e-12)


# -- scalar utilities ---------------------------------------------------------------


def _brute(tau, f, M):
    return np.array([max(f[j] - M * abs(tau[i] - tau[j]) for j in range(len(f))) for i in range(len(f))])


def test_envelope_examples():
    tau = np.linspace(0, 1, 7)
    assert np.array_equal(lipschitz_envelope(tau, np.full(7, 3.0), 1.0), np.full(7, 3.0))
    spike = np.zeros(7)
    spike[3] = 5.0
    assert np.array_equal(lipschitz_envelope(tau, spike, 1e9), spike)
    tau5 = np.array([0.0, 0.1, 0.35, 0.6, 1.0])
    f5 = np.array([1.0, -0.5, 2.0, 0.0, 0.4])
    assert np.array_equal(lipschitz_envelope(tau5, f5, 2.0), _brute(tau5, f5, 2.0))


def test_envelope_validation():
    with pytest.raises(ValueError):
        lipschitz_envelope([0, 1], [0, 0], 0.0)
    with pytest.raises(ValueError):
        lipschitz_envelope([0.5, 0.2], [0, 0], 1.0)
    with pytest.raises(ValueError):
        lipschitz_envelope([0.2, 0.2], [0, 0], 1.0)


def test_epigraph_slope_examples():
    rho = np.geomspace(0.1, 10, 25)
    assert np.allclose(epigraph_slope_convert(np.ones_like(rho), rho), 1 / rho, rtol=1e-15)
    s = np.linspace(0, 1, 11)
    assert np.array_equal(epigraph_slope_convert(s, np.ones_like(s)), s)
    assert epigraph_slope_invert(epigraph_slope_convert(0.3, 2.0), 2.0) == pytest.approx(0.3, abs=1e-15)
    assert isinstance(epigraph_slope_convert(0.5, 2.0), float)


@pytest.mark.parametrize("sigma,rho", [(-0.1, 1.0), (1.1, 1.0), (0.5, 0.0), (0.5, -2.0)])
def test_epigraph_rejects_out_of_range(sigma, rho):
    with pytest.raises(ValueError):
        epigraph_slope_convert(sigma, rho)


def test_epigraph_invert_rejects_out_of_range():
    with pytest.raises(ValueError):
        epigraph_slope_invert(0.6, 2.0)
