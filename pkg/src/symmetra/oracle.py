"""Radial shooting oracle for the semilinear problem on the unit ball.

Solves ``u'' + (d-1)/r u' + u^{p-1} = 0`` with ``u'(0) = 0`` and ``u(1) = 0``
for the positive solution by bisection on ``u(0)``. The discrete reference
value is the energy of the solution sampled on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .energy import energy
from .grid import Domain, GridFunction
from .model import preset


class OracleError(RuntimeError):
    pass


@dataclass
class OracleResult:
    u0: float
    d: int
    p: float
    c_oracle: float
    u_at_1: float
    lifted: GridFunction
    radii: np.ndarray
    profile: np.ndarray
    rtol: float

    def __call__(self, r) -> np.ndarray:
        return np.interp(np.asarray(r, dtype=float), self.radii, self.profile, right=0.0)

    def to_dict(self) -> dict:
        return {"u0": self.u0, "d": self.d, "p": self.p, "c_oracle": self.c_oracle, "u_at_1": self.u_at_1}


_R0 = 1e-4


def _shoot(a: float, d: int, p: float, rtol: float, dense: bool = False):
    """Integrate from the series start; stop at the first zero of ``u``."""

    def rhs(r, y):
        return [y[1], -(d - 1) / r * y[1] - np.abs(y[0]) ** (p - 2) * y[0]]

    def hit(r, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    y0 = [a - a ** (p - 1) * _R0**2 / (2 * d), -(a ** (p - 1)) * _R0 / d]
    sol = solve_ivp(
        rhs,
        (_R0, 1.0),
        y0,
        method="RK45",
        rtol=rtol,
        atol=rtol * 1e-3 * max(a, 1.0),
        events=hit,
        dense_output=dense,
    )
    crossed = sol.t_events[0].size > 0 and sol.t_events[0][0] < 1.0
    return sol, crossed


def shoot_profile(d: int = 2, p: float = 4.0, rtol: float = 1e-10, tol_u1: float = 1e-8):
    """Bisect on ``u(0)`` in ``[1e-3, 1e6]``; returns ``(u0, sol)``."""
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if not p > 2 or (d == 3 and not p < 6):
        raise ValueError("p must be superlinear and subcritical")
    grid = np.geomspace(1e-3, 1e6, 91)
    lo = hi = None
    prev = None
    for a in grid:
        _, crossed = _shoot(a, d, p, rtol)
        if crossed and prev is not None:
            lo, hi = prev, a
            break
        prev = a if not crossed else None
    if lo is None:
        raise OracleError("no bisection bracket for u(0) in [1e-3, 1e6]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        _, crossed = _shoot(mid, d, p, rtol)
        if crossed:
            hi = mid
        else:
            lo = mid
        sol, _ = _shoot(lo, d, p, rtol)
        if abs(sol.y[0, -1]) <= tol_u1 and hi - lo < 1e-12 * hi:
            break
    sol, _ = _shoot(lo, d, p, rtol, dense=True)
    if abs(sol.y[0, -1]) > tol_u1:
        raise OracleError(f"shooting did not reach |u(1)| <= {tol_u1:g} (got {sol.y[0, -1]:.3g})")
    return lo, sol


def oracle_semilinear(d: int = 2, p: float = 4.0, domain: Domain | None = None, rtol: float = 1e-10) -> OracleResult:
    """Shooting solution, its grid lift and ``c_oracle = f(lift)``.

    Examples
    --------
    >>> res = oracle_semilinear(2, 4.0, Domain(2, 33))
    >>> round(res.u0, 6)
    3.573901
    """
    domain = domain or Domain(d, 65)
    if domain.d != d:
        raise ValueError("domain dimension does not match d")
    u0, sol = shoot_profile(d, p, rtol)
    radii = np.concatenate([[0.0], np.linspace(_R0, 1.0, 4001)])
    vals = np.empty_like(radii)
    vals[0] = u0
    vals[1:] = sol.sol(radii[1:])[0]
    vals[-1] = 0.0

    def profile(r):
        out = sol.sol(np.clip(r, _R0, 1.0))[0]
        near = r < _R0
        out[near] = u0 - u0 ** (p - 1) * r[near] ** 2 / (2 * d)
        return out

    lifted = domain.from_radial(profile)
    m = preset("semilinear", p=p)
    return OracleResult(
        u0=float(u0),
        d=d,
        p=float(p),
        c_oracle=energy(lifted, m).total,
        u_at_1=float(sol.y[0, -1]),
        lifted=lifted,
        radii=radii,
        profile=vals,
        rtol=rtol,
    )
