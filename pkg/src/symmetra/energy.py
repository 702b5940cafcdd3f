"""Discrete quasi-linear energy, its gradient, and the Sobolev slope.

The energy is

    f(u) = h^d sum_{support} j(u, |D+u|)  -  h^d sum_{active} G(|x|, u)

with forward differences ``D+`` of the zero extension. The sum of the ``j``
term runs over every node where ``D+u`` can be nonzero, i.e. it includes
the inactive nodes sitting just behind the ball, so the discrete Dirichlet
form is the standard one and is invariant under the lattice symmetries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .grid import Domain, GridFunction, forward_differences, integrate
from .model import ModelFunctions


class EnergyError(ArithmeticError):
    """Non-finite integrand or failed linear solve."""


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    quasilinear: float
    potential: float

    def to_dict(self) -> dict:
        return {"total": self.total, "quasilinear": self.quasilinear, "potential": self.potential}


@dataclass
class SlopeEstimate:
    residual: np.ndarray
    value: float
    iterations: int = 0

    @property
    def residual_linf(self) -> float:
        return float(np.abs(self.residual).max())

    def to_dict(self) -> dict:
        return {"slope": self.value, "residual_linf": self.residual_linf, "cg_iterations": self.iterations}


def _check_finite(arr: np.ndarray, what: str, domain: Domain):
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise EnergyError(f"non-finite {what} at node {tuple(int(i) for i in bad)} on {domain}")


def _gradient_parts(values: np.ndarray, dom: Domain):
    grad = forward_differences(values, dom.h)
    t = np.sqrt(np.sum(grad**2, axis=0))
    return grad, t


def energy_values(values: np.ndarray, dom: Domain, m: ModelFunctions) -> EnergyBreakdown:
    """:func:`energy` on a raw full-grid array (no validation)."""
    _, t = _gradient_parts(values, dom)
    sup = dom.support
    act = dom.active
    jv = m.j(values[sup], t[sup])
    Gv = m.G(dom.radius[act], values[act])
    for vals, mask, what in ((jv, sup, "j integrand"), (Gv, act, "G integrand")):
        if not np.all(np.isfinite(vals)):
            full = np.zeros(dom.shape)
            full[mask] = vals
            _check_finite(full, what, dom)
    q = dom.cell_volume * float(np.sum(jv))
    pot = dom.cell_volume * float(np.sum(Gv))
    return EnergyBreakdown(q - pot, q, pot)


def energy(u: GridFunction, m: ModelFunctions) -> EnergyBreakdown:
    """Quadrature of ``j(u, |grad u|)`` minus that of ``G(|x|, u)``."""
    return energy_values(u.values, u.domain, m)


def residual_values(values: np.ndarray, dom: Domain, m: ModelFunctions) -> np.ndarray:
    """Exact gradient of the discrete energy divided by ``h^d``."""
    grad, t = _gradient_parts(values, dom)
    sup = dom.support
    d = dom.d
    res = np.zeros(dom.shape)
    u_s, t_s = values[sup], t[sup]
    res[sup] = m.j_s(u_s, t_s)
    jt = m.j_t(u_s, t_s)
    coef = np.zeros(dom.shape)
    pos = t_s > 0
    coef_s = np.zeros_like(t_s)
    coef_s[pos] = jt[pos] / t_s[pos]
    coef[sup] = coef_s
    for k in range(d):
        q = coef * grad[k]
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[k] = slice(None, -1)
        hi[k] = slice(1, None)
        # -(flux(y) - flux(y - e_k)) / h
        res -= q / dom.h
        res[tuple(hi)] += q[tuple(lo)] / dom.h
    act = dom.active
    res[act] -= m.g(dom.radius[act], values[act])
    res[~act] = 0.0
    _check_finite(res, "residual", dom)
    return res


def energy_gradient(u: GridFunction, m: ModelFunctions) -> np.ndarray:
    """Per-node residual: ``dE/du_i / h^d``, zero on inactive nodes.

    Approximates the Euler-Lagrange density ``-div j_xi + j_s - g``.
    """
    return residual_values(u.values, u.domain, m)


def _to_active(field: np.ndarray, dom: Domain) -> np.ndarray:
    return field.ravel()[dom.active_flat]


def _from_active(vec: np.ndarray, dom: Domain) -> np.ndarray:
    out = np.zeros(dom.n**dom.d)
    out[dom.active_flat] = vec
    return out.reshape(dom.shape)


def dual_norm(residual: np.ndarray, dom: Domain, *, rtol: float = 1e-10) -> tuple[float, int]:
    """``sqrt(int r w)`` with ``-Delta_h w = r``, solved by conjugate gradients.

    Raises :class:`EnergyError` if CG does not reach ``rtol`` within
    ``10 * n_active`` iterations.
    """
    b = _to_active(residual, dom)
    if not np.any(b):
        return 0.0, 0
    count = [0]

    def cb(_):
        count[0] += 1

    w, info = spla.cg(dom.laplacian, b, rtol=rtol, atol=0.0, maxiter=10 * dom.n_active, callback=cb)
    if info != 0:
        raise EnergyError(f"CG did not converge (info={info}) on {dom}")
    val = dom.cell_volume * float(b @ w)
    return float(np.sqrt(max(val, 0.0))), count[0]


def slope(u: GridFunction, m: ModelFunctions) -> SlopeEstimate:
    """Slope surrogate: ``H^{-1}`` norm of the energy residual."""
    res = energy_gradient(u, m)
    val, its = dual_norm(res, u.domain)
    return SlopeEstimate(res, val, its)


def sobolev_gradient_values(residual: np.ndarray, dom: Domain) -> np.ndarray:
    """Riesz representative of the residual in the discrete ``H^1_0`` inner
    product, via the cached sparse factorization of ``-Delta_h``."""
    return _from_active(dom.laplacian_lu.solve(_to_active(residual, dom)), dom)


def sobolev_gradient(u: GridFunction, m: ModelFunctions) -> GridFunction:
    w = sobolev_gradient_values(energy_gradient(u, m), u.domain)
    return GridFunction(u.domain, w, copy=False)


def polarization_energy_gap(u: GridFunction, uh: GridFunction, m: ModelFunctions) -> float:
    """``|int j(u,|grad u|) - int j(u^H, |grad u^H|)|``."""
    return abs(energy(u, m).quasilinear - energy(uh, m).quasilinear)


# -- scalar utilities -------------------------------------------------------------


def lipschitz_envelope(taus, values, M: float) -> np.ndarray:
    """``env_i = max_j (f_j - M |tau_i - tau_j|)`` in two linear passes.

    The best index left of ``i`` maximizes ``f_j + M tau_j`` and the best one
    to the right maximizes ``f_j - M tau_j``; the envelope value is then
    evaluated with the same expression as the quadratic definition.
    """
    if not M > 0:
        raise ValueError("Lipschitz constant must be positive")
    tau = np.asarray(taus, dtype=float)
    f = np.asarray(values, dtype=float)
    if tau.shape != f.shape or tau.ndim != 1:
        raise ValueError("taus and values must be 1D of equal length")
    if np.any(np.diff(tau) <= 0):
        raise ValueError("taus must be sorted and distinct")
    k = tau.size
    left = np.empty(k, dtype=np.int64)
    right = np.empty(k, dtype=np.int64)
    best = 0
    for i in range(k):
        if f[i] + M * tau[i] > f[best] + M * tau[best]:
            best = i
        left[i] = best
    best = k - 1
    for i in range(k - 1, -1, -1):
        if f[i] - M * tau[i] > f[best] - M * tau[best]:
            best = i
        right[i] = best
    from_left = f[left] - M * np.abs(tau - tau[left])
    from_right = f[right] - M * np.abs(tau - tau[right])
    return np.maximum(from_left, from_right)


def epigraph_slope_convert(sigma, rho):
    """Weak slope of the epigraph projection under the ``rho``-weighted metric,
    ``sigma / sqrt(1 + (rho^2 - 1) sigma^2)``."""
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any((sigma < 0) | (sigma > 1)):
        raise ValueError("sigma must lie in [0, 1]")
    if np.any(rho <= 0):
        raise ValueError("rho must be positive")
    out = sigma / np.sqrt(1.0 + (rho**2 - 1.0) * sigma**2)
    return out if out.ndim else float(out)


def epigraph_slope_invert(sigma_rho, rho):
    """Inverse of :func:`epigraph_slope_convert`."""
    sigma_rho = np.asarray(sigma_rho, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be positive")
    if np.any((sigma_rho < 0) | (rho * sigma_rho > 1 + 1e-12)):
        raise ValueError("sigma_rho must lie in [0, 1/rho]")
    out = sigma_rho / np.sqrt(1.0 - (rho**2 - 1.0) * sigma_rho**2)
    return out if out.ndim else float(out)
