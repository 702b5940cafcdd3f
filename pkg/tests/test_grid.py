import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmetra.grid import (
    Domain,
    DomainMismatchError,
    GridFunction,
    dist_L2,
    from_csv,
    from_json,
    gradient,
    h1_inner,
    h1_norm,
    integrate,
    load,
    norm_L2,
    norm_Lp,
    save,
    to_csv,
    to_json,
)


@pytest.mark.parametrize("d,n", [(1, 9), (4, 9), (2, 8), (2, 1), (3, 2)])
def test_domain_rejects_bad_shapes(d, n):
    with pytest.raises(ValueError):
        Domain(d, n)


def test_domain_basics():
    dom = Domain(2, 9)
    assert dom.h == 0.25
    assert dom.shape == (9, 9)
    assert dom.cell_volume == 0.0625
    assert dom.coords[0] == -1.0 and dom.coords[-1] == 1.0
    # |x| < 1 strictly: the four axis endpoints are inactive, centre active
    assert not dom.active[0, 4] and not dom.active[4, 8]
    assert dom.active[4, 4]
    assert dom.n_active == int(np.sum(np.sum(dom.mesh**2, axis=0) < 1 - 1e-12))


def test_active_set_is_lattice_symmetric():
    dom = Domain(2, 33)
    a = dom.active
    assert np.array_equal(a, a[::-1]) and np.array_equal(a, a.T)
    assert np.array_equal(dom.radius, dom.radius[::-1, :])


def test_support_contains_active_and_backward_neighbours(dom9):
    sup = dom9.support
    assert np.all(sup[dom9.active])
    # (0, 4) is inactive but its forward neighbour (1, 4) is active
    assert sup[0, 4] and not dom9.active[0, 4]
    assert not sup[8, 4]


def test_gridfunction_validation(dom9):
    with pytest.raises(ValueError, match="shape"):
        GridFunction(dom9, np.zeros((8, 9)))
    bad = np.zeros(dom9.shape)
    bad[0, 0] = 1.0
    with pytest.raises(ValueError, match="inactive"):
        GridFunction(dom9, bad)
    bad = np.zeros(dom9.shape)
    bad[4, 4] = np.nan
    with pytest.raises(ValueError, match="finite"):
        GridFunction(dom9, bad)


def test_arithmetic_and_domain_mismatch(dom9):
    u = dom9.from_active(np.arange(dom9.n_active, dtype=float))
    v = u * 2.0 - u
    assert np.array_equal(v.values, u.values)
    assert np.array_equal((-u).values, -u.values)
    with pytest.raises(DomainMismatchError):
        dist_L2(u, Domain(2, 11).zeros())


def test_gradient_exact_on_affine_interior():
    dom = Domain(2, 33)
    u = dom.from_function(lambda x: 0.3 * x[0] - 1.7 * x[1] + 0.5)
    g = gradient(u)
    # node whose forward neighbours are all active
    i = j = 16
    assert g[0, i, j] == pytest.approx(0.3, abs=1e-12)
    assert g[1, i, j] == pytest.approx(-1.7, abs=1e-12)


def _centered_oracle(u):
    """Independent centred differences on interior nodes."""
    v = u.values
    h = u.domain.h
    out = np.zeros((2,) + v.shape)
    out[0, 1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * h)
    out[1, :, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * h)
    return out


def test_gradient_matches_centred_oracle_to_order_h():
    dom = Domain(2, 9)
    u = dom.from_function(lambda x: np.cos(x[0]) * np.exp(x[1]) * (1 - np.sum(x**2, axis=0)))
    g, c = gradient(u), _centered_oracle(u)
    interior = dom.active.copy()
    for k in range(2):
        for s in (1, -1):
            interior &= np.roll(dom.active, s, axis=k)
    assert np.max(np.abs(g - c)[:, interior]) <= 4 * dom.h


def test_quadrature_of_one_is_disc_area():
    for n, tol in [(33, 0.2), (129, 0.05)]:
        dom = Domain(2, n)
        assert integrate(np.ones(dom.shape), dom) == pytest.approx(np.pi, abs=tol)


def test_norms(dom17, rng):
    u = dom17.from_active(rng.normal(size=dom17.n_active))
    assert norm_L2(u) == pytest.approx(norm_Lp(u, 2.0))
    assert norm_Lp(u, np.inf) == np.max(np.abs(u.values))
    assert dist_L2(u, u) == 0.0


def test_h1_inner_symmetric_positive(dom17, rng):
    u = dom17.from_active(rng.normal(size=dom17.n_active))
    v = dom17.from_active(rng.normal(size=dom17.n_active))
    assert h1_inner(u, v) == pytest.approx(h1_inner(v, u), rel=1e-14)
    assert h1_norm(u) > 0
    # agrees with the assembled Laplacian
    lap = dom17.cell_volume * u.active_values @ (dom17.laplacian @ v.active_values)
    assert h1_inner(u, v) == pytest.approx(lap, rel=1e-12)


def test_h1_single_node_hand_count(dom9):
    # a unit spike contributes 2d squared unit differences: 4/h^2 * h^2
    u = dom9.zeros()
    u.values[4, 4] = 1.0
    assert h1_inner(u, u) == pytest.approx(4.0)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_subnormal=True)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=25, max_size=25))
def test_csv_json_round_trip_bit_exact(vals):
    dom = Domain(2, 7)
    assert dom.n_active == 25
    u = dom.from_active(np.array(vals))
    for back in (from_csv(to_csv(u)), from_json(to_json(u))):
        assert back.domain == dom
        assert np.array_equal(back.values, u.values)


def test_csv_layout_and_header_tolerance(dom9):
    u = dom9.from_active(np.linspace(0, 1, dom9.n_active))
    text = to_csv(u)
    lines = text.splitlines()
    assert lines[0] == "d,n" and lines[1] == "2,9"
    assert len(lines) == 2 + dom9.n_active
    with_cols = "\n".join(lines[:2] + ["i0,i1,value"] + lines[2:])
    assert np.array_equal(from_csv(with_cols).values, u.values)


def test_json_carries_schema_version(dom9):
    import json

    obj = json.loads(to_json(dom9.zeros()))
    assert obj["schema_version"] == 1 and obj["d"] == 2 and obj["n"] == 9


def test_save_load_by_suffix(tmp_path, dom9, rng):
    u = dom9.from_active(rng.random(dom9.n_active))
    for name in ("u.csv", "u.json"):
        save(u, tmp_path / name)
        assert np.array_equal(load(tmp_path / name).values, u.values)
