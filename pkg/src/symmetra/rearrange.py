"""Polarization (two-point rearrangement) and Schwarz symmetrization.

Polarizers are closed half-spaces ``H = {x : alpha . x <= beta}`` with
``|alpha| = 1`` and ``beta >= 0`` so that ``0 in H``; ``beta = +inf`` is the
compactification point ``H_{+inf}``, which acts as the identity.

Two evaluation modes are provided. ``EXACT`` accepts only reflections that map
the node lattice onto itself, so the pointwise identities of polarization
hold to machine precision. ``INTERPOLATED`` accepts any polarizer and reads
the reflected value by multilinear interpolation of the zero extension.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Domain, GridFunction, dist_L2


class PolarizerMode(enum.Enum):
    EXACT = "exact"
    INTERPOLATED = "interp"

    @classmethod
    def parse(cls, mode) -> "PolarizerMode":
        if isinstance(mode, cls):
            return mode
        key = str(mode).lower()
        for m in cls:
            if key in (m.value, m.name.lower()):
                return m
        if key == "interpolated":
            return cls.INTERPOLATED
        raise ValueError(f"unknown polarizer mode {mode!r}")


class IncompatiblePolarizerError(ValueError):
    """The polarizer's reflection does not preserve the node lattice."""


@dataclass(frozen=True)
class Polarizer:
    """Half-space ``{x : alpha . x <= beta}``."""

    alpha: tuple[float, ...]
    beta: float

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1 or a.size not in (2, 3):
            raise ValueError("alpha must be a 2- or 3-vector")
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError(f"|alpha| must be 1, got {np.linalg.norm(a)!r}")
        if not self.beta >= 0.0:
            raise ValueError("beta must be >= 0 so that the origin lies in H")
        object.__setattr__(self, "alpha", tuple(float(x) for x in a))
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def from_normal(cls, normal, beta: float) -> "Polarizer":
        a = np.asarray(normal, dtype=float)
        return cls(tuple(a / np.linalg.norm(a)), beta)

    @classmethod
    def infinity(cls, d: int) -> "Polarizer":
        return cls(tuple([1.0] + [0.0] * (d - 1)), np.inf)

    @property
    def is_infinite(self) -> bool:
        return np.isinf(self.beta)

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(self.alpha)

    def contains(self, x) -> np.ndarray:
        """Membership test for points ``x`` of shape ``(d, ...)``."""
        x = np.asarray(x, dtype=float)
        return np.tensordot(self.normal, x, axes=(0, 0)) <= self.beta

    def to_dict(self) -> dict:
        return {"alpha": list(self.alpha), "beta": "+inf" if self.is_infinite else self.beta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj) -> "Polarizer":
        beta = obj["beta"]
        beta = np.inf if beta in ("+inf", "inf", None) else float(beta)
        return cls(tuple(obj["alpha"]), beta)

    @classmethod
    def from_json(cls, text: str) -> "Polarizer":
        return cls.from_dict(json.loads(text))


def reflect(x, H: Polarizer) -> np.ndarray:
    """Reflection ``x - 2 (alpha.x - beta) alpha`` of points ``x`` (shape ``(d, ...)``)."""
    if H.is_infinite:
        raise ValueError("H_{+inf} has no reflection")
    x = np.asarray(x, dtype=float)
    a = H.normal
    s = np.tensordot(a, x, axes=(0, 0)) - H.beta
    return x - 2.0 * a.reshape((-1,) + (1,) * (x.ndim - 1)) * s


def exact_reflection_index(domain: Domain, H: Polarizer) -> np.ndarray:
    """Integer node indices of the reflected lattice, shape ``(d, n, ..., n)``.

    Raises :class:`IncompatiblePolarizerError` if the reflection does not map
    nodes to (possibly out-of-box) nodes.
    """
    xh = reflect(domain.mesh, H)
    idx = (xh + 1.0) / domain.h
    rounded = np.rint(idx)
    if np.max(np.abs(idx - rounded)) > 1e-9:
        raise IncompatiblePolarizerError(f"{H} is not lattice-compatible on {domain}")
    return rounded.astype(np.int64)


def lattice_polarizers(d: int, n: int, max_offset: int | None = None) -> list[Polarizer]:
    """All lattice-compatible polarizers: axis hyperplanes at half-node
    offsets ``beta = m h/2`` and the through-origin diagonal hyperplanes."""
    h = 2.0 / (n - 1)
    if max_offset is None:
        max_offset = n - 1
    out = []
    for k in range(d):
        for sgn in (1.0, -1.0):
            e = np.zeros(d)
            e[k] = sgn
            out += [Polarizer(tuple(e), m * h / 2) for m in range(max_offset + 1)]
    s = 1.0 / np.sqrt(2.0)
    for a in range(d):
        for b in range(a + 1, d):
            for sa in (1.0, -1.0):
                for sb in (1.0, -1.0):
                    e = np.zeros(d)
                    e[a], e[b] = sa * s, sb * s
                    out.append(Polarizer(tuple(e), 0.0))
    return out


def _reflected_values(u: GridFunction, H: Polarizer, mode: PolarizerMode) -> np.ndarray:
    dom = u.domain
    if mode is PolarizerMode.EXACT:
        idx = exact_reflection_index(dom, H)
        inside = np.all((idx >= 0) & (idx < dom.n), axis=0)
        out = np.zeros(dom.shape)
        out[inside] = u.values[tuple(i[inside] for i in idx)]
        return out
    xh = reflect(dom.mesh, H)
    frac = (xh + 1.0) / dom.h
    vals = ndimage.map_coordinates(u.values, frac, order=1, mode="constant", cval=0.0)
    vals[np.sum(xh**2, axis=0) >= 1.0] = 0.0
    return vals


def polarize_nonneg(u: GridFunction, H: Polarizer, mode=PolarizerMode.EXACT) -> GridFunction:
    """Polarization of a nonnegative grid function.

    ``max(u(x), u(x_H))`` on ``H`` and ``min(u(x), u(x_H))`` off ``H``, with
    ``u`` extended by zero outside the ball.
    """
    mode = PolarizerMode.parse(mode)
    if np.any(u.values < 0):
        raise ValueError("polarize_nonneg needs u >= 0; use polarize_signed")
    if H.is_infinite:
        return u.copy()
    if len(H.alpha) != u.domain.d:
        raise ValueError("polarizer dimension does not match the domain")
    ur = _reflected_values(u, H, mode)
    inH = H.contains(u.domain.mesh)
    out = np.where(inH, np.maximum(u.values, ur), np.minimum(u.values, ur))
    out[~u.domain.active] = 0.0
    return GridFunction(u.domain, out, copy=False)


def polarize_signed(u: GridFunction, H: Polarizer, mode=PolarizerMode.EXACT) -> GridFunction:
    """``u^H := |u|^H``."""
    return polarize_nonneg(abs(u), H, mode)


def symmetrize(u: GridFunction) -> GridFunction:
    """Discrete Schwarz symmetrization of ``|u|``.

    Values of ``|u|`` on active nodes, sorted in decreasing order, are placed on
    the active nodes sorted by increasing radius (ties in node order). The
    value multiset is preserved exactly.
    """
    dom = u.domain
    vals = np.sort(np.abs(u.active_values))[::-1]
    out = np.zeros(dom.n**dom.d)
    out[dom.radial_order] = vals
    return GridFunction(dom, out.reshape(dom.shape), copy=False)


def asymmetry(u: GridFunction) -> float:
    """``|| |u| - u^* ||_{L^2}``."""
    return dist_L2(abs(u), symmetrize(u))


def polarization_score(targets, H: Polarizer, mode=PolarizerMode.INTERPOLATED) -> float:
    """``sum_i ||u_i - u_i^H||^2`` over the target functions."""
    return float(sum(dist_L2(u, polarize_signed(u, H, mode)) ** 2 for u in targets))


def sample_polarizer(
    rng: np.random.Generator,
    d: int,
    strategy: str = "uniform",
    *,
    m: int = 16,
    score=None,
    targets=None,
    sigma_beta: float = 0.25,
    mode=PolarizerMode.INTERPOLATED,
) -> Polarizer:
    """Draw a polarizer from ``rng``.

    ``uniform`` draws ``alpha`` uniformly on the sphere and ``beta = |N(0,
    sigma_beta)|``. ``greedy`` draws ``m`` uniform candidates and returns the
    first maximizer of ``score(H)``; the default score is
    :func:`polarization_score` over ``targets``.
    """
    if strategy == "uniform":
        a = rng.standard_normal(d)
        while not np.any(a):
            a = rng.standard_normal(d)
        return Polarizer.from_normal(a, abs(sigma_beta * rng.standard_normal()))
    if strategy != "greedy":
        raise ValueError(f"unknown strategy {strategy!r}")
    if m < 1:
        raise ValueError("greedy sampling needs m >= 1")
    if score is None:
        if targets is None:
            raise ValueError("greedy sampling needs a score or target functions")
        score = lambda H: polarization_score(targets, H, mode)  # noqa: E731
    best, best_score = None, -np.inf
    for _ in range(m):
        H = sample_polarizer(rng, d, "uniform", sigma_beta=sigma_beta)
        s = score(H)
        if s > best_score:
            best, best_score = H, s
    return best
