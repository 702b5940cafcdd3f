"""Uniform Cartesian discretization of the unit ball.

A :class:`Domain` is the node lattice ``x_i = -1 + i*h`` (``h = 2/(n-1)``,
``n`` odd) in ``d`` dimensions; nodes with ``|x| < 1`` are *active*.
A :class:`GridFunction` stores one value per lattice node and is identically
zero on inactive nodes, which is the discrete form of extending an
``H^1_0`` function by zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

SCHEMA_VERSION = 1


class DomainMismatchError(ValueError):
    """Two grid functions live on different domains."""


@dataclass(frozen=True)
class Domain:
    """Node lattice over the unit ball ``B_1`` of ``R^d``.

    Parameters
    ----------
    d : int
        Spatial dimension, 2 or 3.
    n : int
        Nodes per axis. Must be odd (so the origin is a node) and >= 3.
    """

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"resolution must be odd and >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 / (self.n - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @cached_property
    def coords(self) -> np.ndarray:
        """1D node coordinates along each axis."""
        return -1.0 + self.h * np.arange(self.n)

    @cached_property
    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``(d, n, ..., n)``."""
        return np.stack(np.meshgrid(*([self.coords] * self.d), indexing="ij"))

    @cached_property
    def radius_sq_index(self) -> np.ndarray:
        """Integer squared distance to the origin in index units.

        Exact, so nodes on a common sphere compare equal.
        """
        c = (self.n - 1) // 2
        offs = np.meshgrid(*([np.arange(self.n) - c] * self.d), indexing="ij")
        return sum(o.astype(np.int64) ** 2 for o in offs)

    @cached_property
    def radius(self) -> np.ndarray:
        return self.h * np.sqrt(self.radius_sq_index)

    @cached_property
    def active(self) -> np.ndarray:
        # |x| < 1  <=>  sum (i-c)^2 < c^2, decided in integers
        c = (self.n - 1) // 2
        return self.radius_sq_index < c * c

    @cached_property
    def n_active(self) -> int:
        return int(self.active.sum())

    @cached_property
    def active_flat(self) -> np.ndarray:
        """Flat indices of active nodes in lexicographic node order."""
        return np.flatnonzero(self.active)

    @cached_property
    def support(self) -> np.ndarray:
        """Nodes where the forward-difference gradient of a grid function can
        be nonzero: active nodes plus inactive nodes with an active forward
        neighbour."""
        sup = self.active.copy()
        for k in range(self.d):
            fwd = np.zeros_like(self.active)
            src = [slice(None)] * self.d
            dst = [slice(None)] * self.d
            src[k] = slice(1, None)
            dst[k] = slice(None, -1)
            fwd[tuple(dst)] = self.active[tuple(src)]
            sup |= fwd
        return sup

    @cached_property
    def radial_order(self) -> np.ndarray:
        """Active flat indices sorted by radius, ties by node order."""
        idx = self.active_flat
        r2 = self.radius_sq_index.ravel()[idx]
        return idx[np.lexsort((idx, r2))]

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Dirichlet 5-point (7-point in 3D) Laplacian ``-Delta_h`` on the
        active unknowns, in active-node order."""
        n_act = self.n_active
        pos = -np.ones(self.n**self.d, dtype=np.int64)
        pos[self.active_flat] = np.arange(n_act)
        pos = pos.reshape(self.shape)
        rows = [np.arange(n_act)]
        cols = [np.arange(n_act)]
        vals = [np.full(n_act, 2.0 * self.d)]
        act_idx = np.nonzero(self.active)
        for k in range(self.d):
            nb = list(act_idx)
            nb[k] = nb[k] + 1
            # boundary rows never reach the box edge: |x|<1 keeps i in 1..n-2
            p_nb = pos[tuple(nb)]
            ok = p_nb >= 0
            p_self = pos[act_idx][ok]
            rows += [p_self, p_nb[ok]]
            cols += [p_nb[ok], p_self]
            vals += [-np.ones(ok.sum()), -np.ones(ok.sum())]
        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_act, n_act),
        )
        return mat / self.h**2

    @cached_property
    def laplacian_lu(self):
        return spla.splu(self.laplacian.tocsc())

    # -- construction helpers -------------------------------------------------

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape))

    def from_active(self, values) -> "GridFunction":
        """Build a grid function from values on the active nodes."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_active,):
            raise ValueError(f"expected {self.n_active} active values, got {values.shape}")
        full = np.zeros(self.n**self.d)
        full[self.active_flat] = values
        return GridFunction(self, full.reshape(self.shape))

    def from_function(self, fn) -> "GridFunction":
        """Sample ``fn(x)`` (``x`` of shape ``(d, ...)``) on active nodes."""
        vals = np.asarray(fn(self.mesh), dtype=float)
        return GridFunction(self, np.where(self.active, vals, 0.0))

    def from_radial(self, profile) -> "GridFunction":
        """Sample a radial profile ``profile(r)`` on active nodes."""
        r = self.radius.ravel()[self.active_flat]
        return self.from_active(profile(r))


class GridFunction:
    """Values on every node of a :class:`Domain`, zero on inactive nodes."""

    __slots__ = ("domain", "values")

    def __init__(self, domain: Domain, values, *, copy: bool = True):
        values = np.array(values, dtype=float, copy=copy)
        if values.shape != domain.shape:
            raise ValueError(f"values shape {values.shape} does not match {domain.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        if np.any(values[~domain.active] != 0.0):
            raise ValueError("grid function must vanish on inactive nodes")
        self.domain = domain
        self.values = values

    @property
    def active_values(self) -> np.ndarray:
        return self.values.ravel()[self.domain.active_flat]

    def _wrap(self, values) -> "GridFunction":
        return GridFunction(self.domain, values, copy=False)

    def _other(self, other) -> np.ndarray:
        if isinstance(other, GridFunction):
            check_same_domain(self, other)
            return other.values
        return other

    def __add__(self, other):
        return self._wrap(self.values + self._other(other))

    def __sub__(self, other):
        return self._wrap(self.values - self._other(other))

    def __mul__(self, scalar):
        if isinstance(scalar, GridFunction):
            return self._wrap(self.values * self._other(scalar))
        return self._wrap(self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)

    def __abs__(self):
        return self._wrap(np.abs(self.values))

    def copy(self) -> "GridFunction":
        return GridFunction(self.domain, self.values)

    def __repr__(self):
        return f"GridFunction(d={self.domain.d}, n={self.domain.n}, max|u|={np.abs(self.values).max():.4g})"


def check_same_domain(*funcs: GridFunction) -> Domain:
    dom = funcs[0].domain
    for f in funcs[1:]:
        if f.domain != dom:
            raise DomainMismatchError(f"domain mismatch: {dom} vs {f.domain}")
    return dom


# -- calculus -------------------------------------------------------------------


def forward_differences(values: np.ndarray, h: float) -> np.ndarray:
    """Forward differences of the zero extension along every axis.

    Returns an array of shape ``(d, *values.shape)``; reads zero beyond the
    last node.
    """
    d = values.ndim
    out = np.empty((d,) + values.shape)
    for k in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        last = [slice(None)] * d
        lo[k] = slice(None, -1)
        hi[k] = slice(1, None)
        last[k] = -1
        out[k][tuple(lo)] = values[tuple(hi)] - values[tuple(lo)]
        out[k][tuple(last)] = -values[tuple(last)]
    out /= h
    return out


def gradient(u: GridFunction) -> np.ndarray:
    """Forward-difference gradient, shape ``(d, n, ..., n)``.

    Nonzero only on ``u.domain.support``.
    """
    return forward_differences(u.values, u.domain.h)


def integrate(w, domain: Domain | None = None, *, mask: np.ndarray | None = None) -> float:
    """Midpoint-type quadrature ``h^d * sum`` over active nodes.

    ``w`` is a :class:`GridFunction` or a full-grid array (then ``domain`` is
    required). ``mask`` overrides the summation set.
    """
    if isinstance(w, GridFunction):
        domain, w = w.domain, w.values
    if domain is None:
        raise TypeError("domain is required for raw arrays")
    if mask is None:
        mask = domain.active
    return float(domain.cell_volume * np.sum(np.asarray(w)[mask]))


def norm_Lp(u: GridFunction, p: float = 2.0) -> float:
    if p == np.inf:
        return float(np.abs(u.values).max())
    return integrate(np.abs(u.values) ** p, u.domain) ** (1.0 / p)


def norm_L2(u: GridFunction) -> float:
    return float(np.sqrt(integrate(u.values**2, u.domain)))


def dist_L2(u: GridFunction, v: GridFunction) -> float:
    check_same_domain(u, v)
    return float(np.sqrt(integrate((u.values - v.values) ** 2, u.domain)))


def h1_inner(u: GridFunction, v: GridFunction) -> float:
    """Discrete ``int grad u . grad v`` over the gradient support."""
    dom = check_same_domain(u, v)
    gu, gv = gradient(u), gradient(v)
    return integrate(np.sum(gu * gv, axis=0), dom, mask=dom.support)


def h1_norm(u: GridFunction) -> float:
    return float(np.sqrt(h1_inner(u, u)))


# -- serialization --------------------------------------------------------------


def to_csv(u: GridFunction) -> str:
    """``d,n`` header, then ``i0,i1[,i2],value`` per active node."""
    dom = u.domain
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "n"])
    w.writerow([dom.d, dom.n])
    idx = np.array(np.unravel_index(dom.active_flat, dom.shape)).T
    for ijk, val in zip(idx, u.active_values):
        w.writerow([*map(int, ijk), repr(float(val))])
    return buf.getvalue()


def from_csv(text: str) -> GridFunction:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or [c.strip() for c in rows[0]] != ["d", "n"]:
        raise ValueError("missing 'd,n' header")
    d, n = int(rows[1][0]), int(rows[1][1])
    dom = Domain(d, n)
    vals = np.zeros(dom.shape)
    for r in rows[2:]:
        if not r[0].strip().lstrip("-").isdigit():
            continue  # tolerate a column header line
        ijk = tuple(int(c) for c in r[:d])
        vals[ijk] = float(r[d])
    return GridFunction(dom, vals, copy=False)


def to_json(u: GridFunction) -> str:
    return json.dumps(
        {
            "schema_version": SCHEMA_VERSION,
            "d": u.domain.d,
            "n": u.domain.n,
            "values": [float(v) for v in u.active_values],
        }
    )


def from_json(text: str) -> GridFunction:
    obj = json.loads(text)
    return Domain(int(obj["d"]), int(obj["n"])).from_active(obj["values"])


def save(u: GridFunction, path) -> None:
    path = Path(path)
    text = to_json(u) if path.suffix == ".json" else to_csv(u)
    path.write_text(text)


def load(path) -> GridFunction:
    path = Path(path)
    text = path.read_text()
    return from_json(text) if path.suffix == ".json" else from_csv(text)
