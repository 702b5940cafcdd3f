"""Symmetric mountain-pass solver on discrete paths.

A path is a polyline ``u_0 = 0, u_1, ..., u_k = e`` with ``f(e) < 0``. The
solver alternates descent rounds near the highest node with polarization
sweeps of the whole path, and stops when the highest node has a small
Sobolev slope and is close to its own Schwarz symmetrization.

Descent rounds move the nodes around the argmax along the Sobolev gradient
with its component along the local path tangent removed, so that nodes do
not slide off the ridge. The node count is kept fixed while resolution is
moved to the ridge: the maximizer of ``f`` along the polyline next to the
argmax is inserted as a node and the most redundant node away from the
ridge is dropped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .energy import dual_norm, energy_values, residual_values, sobolev_gradient_values
from .grid import Domain, GridFunction, norm_L2
from .model import ModelFunctions, check_assumptions
from .rearrange import PolarizerMode, asymmetry, polarize_signed, sample_polarizer

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """The solve cannot continue (lost mountain-pass geometry, blow-up)."""


@dataclass
class SolverConfig:
    k: int = 40
    tol_res: float = 1e-4
    tol_sym: float = 1e-3
    max_iter: int = 200
    sweep_period: int = 10
    m: int = 16
    seed: int = 7
    armijo: float = 0.5
    step0: float = 1.0
    armijo_c: float = 1e-4
    min_step: float = 1e-14
    window: int = 2
    sigma_beta: float = 0.25
    geom_C: float = 10.0
    sweep_budget: int = 300
    stall_patience: int = 15
    h1_abort: float = 1e6
    model_check: str = "error"  # error | warn | off

    def __post_init__(self):
        for name in ("tol_res", "tol_sym", "geom_C", "armijo", "step0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.k < 1 or self.m < 1 or self.sweep_period < 1:
            raise ValueError("k, m and sweep_period must be >= 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.model_check not in ("error", "warn", "off"):
            raise ValueError("model_check must be one of error, warn, off")

    def tol_geom(self, domain: Domain) -> float:
        return self.geom_C * domain.h

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Path:
    """Discrete path; ``points[i]`` are full-grid arrays."""

    domain: Domain
    points: list
    energies: np.ndarray

    @property
    def k(self) -> int:
        return len(self.points) - 1

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.energies))  # lowest index on ties

    @property
    def max_energy(self) -> float:
        return float(np.max(self.energies))

    def function(self, i: int) -> GridFunction:
        return GridFunction(self.domain, self.points[i])

    def functions(self) -> list[GridFunction]:
        return [self.function(i) for i in range(len(self.points))]

    def copy(self) -> "Path":
        return Path(self.domain, [p.copy() for p in self.points], self.energies.copy())

    def check(self, m: ModelFunctions, tol: float = 1e-12):
        """Verify endpoint membership and cached energies."""
        if np.any(self.points[0] != 0.0):
            raise AssertionError("u_0 must be identically zero")
        fresh = np.array([energy_values(p, self.domain, m).total for p in self.points])
        if not np.allclose(fresh, self.energies, rtol=tol, atol=tol):
            raise AssertionError("cached path energies are stale")
        if not self.energies[-1] < 0:
            raise AssertionError("path endpoint must have negative energy")


@dataclass
class RoundStats:
    stagnated: int = 0
    refinements: int = 0
    refine_gain: float = 0.0


@dataclass
class SolveReport:
    critical_value: float
    slope: float
    asymmetry: float
    relative_asymmetry: float
    max_abs: float
    iterations: int
    descent_rounds: int
    sweeps: int
    monotonicity_violations: int
    sweep_rejections: int
    refinements: int
    stagnations: int
    converged: bool
    status: str
    trace: list = field(default_factory=list)
    solution: GridFunction | None = None
    path: Path | None = None
    model: str = ""
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        skip = {"solution", "path", "trace"}
        out = {k: v for k, v in self.__dict__.items() if k not in skip}
        out["d"] = self.solution.domain.d if self.solution is not None else None
        out["n"] = self.solution.domain.n if self.solution is not None else None
        out["trace_length"] = len(self.trace)
        return out


# -- path construction -----------------------------------------------------------


def _energy(values, dom, m) -> float:
    return energy_values(values, dom, m).total


def find_endpoint(m: ModelFunctions, domain: Domain, t0: float = 1.0) -> GridFunction:
    """Scale the bump ``cos^2(pi |x| / 2)`` by doubling until ``f < 0``."""
    phi = domain.from_radial(lambda r: np.cos(0.5 * np.pi * r) ** 2)
    t = t0
    while t <= 2.0**60:
        e = phi * t
        if _energy(e.values, domain, m) < 0:
            return e
        t *= 2.0
    raise SolverError("no endpoint with negative energy up to t = 2^60; the model lacks mountain-pass geometry")


def init_path(e: GridFunction, k: int, m: ModelFunctions) -> Path:
    """Straight segment ``u_i = (i/k) e``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dom = e.domain
    pts = [(i / k) * e.values for i in range(k + 1)]
    pts[0] = np.zeros(dom.shape)
    pts[-1] = e.values.copy()
    en = np.array([_energy(p, dom, m) for p in pts])
    if not en[-1] < 0:
        raise ValueError("endpoint must have negative energy")
    return Path(dom, pts, en)


def barrier_estimate(path: Path) -> float:
    """Lower estimate of the mountain ridge: the energy at the first interior
    node. Near the origin the quadratic part dominates, so ``f`` is nearly
    constant on the small sphere through ``u_1``, which every path crosses."""
    if path.k < 2:
        return 0.0
    sigma = float(path.energies[1])
    if not sigma > 0:
        raise SolverError("initial path has no positive barrier near the origin")
    return sigma


# -- descent -----------------------------------------------------------------------


def _h1(dom: Domain, a: np.ndarray, b: np.ndarray) -> float:
    """Discrete H^1_0 inner product through the Laplacian."""
    av = a.ravel()[dom.active_flat]
    bv = b.ravel()[dom.active_flat]
    return dom.cell_volume * float(av @ (dom.laplacian @ bv))


def _descend_node(path: Path, i: int, m: ModelFunctions, cfg: SolverConfig, floor: float = -np.inf) -> bool:
    """One projected, Armijo-backtracked Sobolev step on node ``i``.

    Steps ending below ``floor`` are not accepted. Returns False when no
    step above ``min_step`` is acceptable.
    """
    dom = path.domain
    u = path.points[i]
    res = residual_values(u, dom, m)
    if not np.any(res):
        return True
    w = sobolev_gradient_values(res, dom)
    tau = path.points[min(i + 1, path.k)] - path.points[max(i - 1, 0)]
    tt = _h1(dom, tau, tau)
    if tt > 0:
        w = w - (_h1(dom, w, tau) / tt) * tau
    rate = _h1(dom, w, w)
    if rate <= 0:
        return True
    f0 = path.energies[i]
    # trust radius: never move farther than the larger neighbour gap
    gaps = [path.points[j] - u for j in (i - 1, i + 1) if 0 <= j <= path.k]
    radius = max(math.sqrt(max(_h1(dom, g, g), 0.0)) for g in gaps)
    step = min(cfg.step0, radius / math.sqrt(rate))
    while step >= cfg.min_step:
        trial = u - step * w
        f1 = _energy(trial, dom, m)
        if floor <= f1 <= f0 - cfg.armijo_c * step * rate:
            path.points[i] = trial
            path.energies[i] = f1
            return True
        step *= cfg.armijo
    return False


def _segment_max(path: Path, a: int, m: ModelFunctions):
    dom = path.domain
    ua, ub = path.points[a], path.points[a + 1]
    res = minimize_scalar(
        lambda s: -_energy((1 - s) * ua + s * ub, dom, m),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-7},
    )
    return float(res.x), float(-res.fun)


def _refine(path: Path, m: ModelFunctions, cfg: SolverConfig, stats: RoundStats):
    """Insert the polyline maximizer next to the argmax; drop the node whose
    neighbours are closest, away from the ridge, to keep ``k`` fixed."""
    k = path.k
    if k < 4:
        return
    i = path.argmax
    fi = path.energies[i]
    best = None
    for a in (i - 1, i):
        if a < 0 or a + 1 > k:
            continue
        s, val = _segment_max(path, a, m)
        if 1e-6 < s < 1 - 1e-6 and val > fi and (best is None or val > best[2]):
            best = (a, s, val)
    if best is None:
        return
    a, s, val = best
    dom = path.domain
    seg = path.points[a + 1] - path.points[a]
    if math.sqrt(max(_h1(dom, seg, seg), 0.0)) * min(s, 1 - s) < 1e-10:
        return
    new = (1 - s) * path.points[a] + s * path.points[a + 1]
    lo, hi = a - cfg.window, a + 1 + cfg.window
    cands = [j for j in range(1, k) if not lo <= j <= hi]
    if not cands:
        return
    gaps = []
    for j in cands:
        dv = path.points[j + 1] - path.points[j - 1]
        gaps.append(_h1(dom, dv, dv))
    drop = cands[int(np.argmin(gaps))]
    path.points.insert(a + 1, new)
    path.energies = np.insert(path.energies, a + 1, val)
    if drop > a:
        drop += 1
    del path.points[drop]
    path.energies = np.delete(path.energies, drop)
    stats.refinements += 1
    stats.refine_gain += val - fi


def descend_round(path: Path, m: ModelFunctions, cfg: SolverConfig, stats: RoundStats | None = None) -> Path:
    """Projected Sobolev descent on the window around the argmax, then
    ridge refinement. Endpoints never move."""
    stats = stats if stats is not None else RoundStats()
    i = path.argmax
    lo = max(1, i - cfg.window)
    hi = min(path.k - 1, i + cfg.window)
    # the argmax descends freely; its neighbours may not drop below their
    # outer neighbour, which keeps the energy profile unimodal near the ridge
    if not _descend_node(path, i, m, cfg):
        stats.stagnated += 1
    for j in list(range(i - 1, lo - 1, -1)) + list(range(i + 1, hi + 1)):
        outer = j - 1 if j < i else j + 1
        _descend_node(path, j, m, cfg, floor=path.energies[outer])
    _refine(path, m, cfg, stats)
    return path


# -- polarization ---------------------------------------------------------------------


@dataclass
class SweepStats:
    rejected: int = 0
    gap_growth: int = 0


def polarization_sweep(
    path: Path,
    m: ModelFunctions,
    cfg: SolverConfig,
    rng: np.random.Generator,
    stats: SweepStats | None = None,
) -> Path:
    """Polarize every path node by one greedily chosen polarizer.

    A node's update is rejected (and counted) if it raises that node's energy
    by more than ``tol_geom * (1 + |f|)``; the endpoint is updated only if its
    energy stays negative.
    """
    stats = stats if stats is not None else SweepStats()
    dom = path.domain
    funcs = path.functions()
    mode = PolarizerMode.INTERPOLATED
    H = sample_polarizer(rng, dom.d, "greedy", m=cfg.m, targets=funcs[1:], sigma_beta=cfg.sigma_beta, mode=mode)
    tol = cfg.tol_geom(dom)
    before = _max_gap(path)
    for i in range(1, path.k + 1):
        uh = polarize_signed(funcs[i], H, mode).values
        fh = _energy(uh, dom, m)
        f0 = path.energies[i]
        if fh > f0 + tol * (1 + abs(f0)):
            stats.rejected += 1
            continue
        if i == path.k and not fh < 0:
            continue
        path.points[i] = uh
        path.energies[i] = fh
    if _max_gap(path) > before + tol:
        stats.gap_growth += 1
    return path


def _max_gap(path: Path) -> float:
    dom = path.domain
    return max(
        math.sqrt(dom.cell_volume * float(np.sum((a - b) ** 2))) for a, b in zip(path.points[:-1], path.points[1:])
    )


def symmetrize_path(
    path: Path,
    band: tuple[float, float],
    delta: float,
    m: ModelFunctions,
    cfg: SolverConfig,
    rng: np.random.Generator,
    stats: SweepStats | None = None,
) -> tuple[Path, float, int]:
    """Sweep until every node with energy in ``band`` has asymmetry <= delta.

    Returns the path, the achieved maximal in-band asymmetry, and the number
    of sweeps used. Budget exhaustion is reported, not raised.
    """
    lo, hi = band

    def in_band_asym():
        vals = [asymmetry(path.function(i)) for i, f in enumerate(path.energies) if lo <= f <= hi]
        return max(vals) if vals else 0.0

    worst = in_band_asym()
    sweeps = 0
    while worst > delta and sweeps < cfg.sweep_budget:
        polarization_sweep(path, m, cfg, rng, stats)
        sweeps += 1
        worst = in_band_asym()
    return path, worst, sweeps


# -- driver ------------------------------------------------------------------------


def solve(m: ModelFunctions, domain: Domain, config: SolverConfig | None = None) -> SolveReport:
    """Run the symmetric mountain-pass iteration.

    Each outer iteration performs ``sweep_period`` descent rounds, then
    measures the slope and asymmetry of the highest node, then applies one
    polarization sweep. The run converges when slope <= ``tol_res`` and
    asymmetry <= ``tol_sym * ||u||``; it stops as ``stalled`` when the slope
    target holds but the asymmetry stops improving for ``stall_patience``
    iterations, and as ``max_iter`` at the iteration cap.
    """
    cfg = config or SolverConfig()
    if cfg.model_check != "off":
        rep = check_assumptions(m, samples=2000, seed=cfg.seed)
        if rep.failed:
            msg = f"model {m.name!r} fails checks {rep.failed}"
            if cfg.model_check == "error":
                raise SolverError(msg + " (set model_check='warn' to proceed)")
            logger.warning(msg)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tol_geom(domain)
    e = find_endpoint(m, domain)
    path = init_path(e, cfg.k, m)
    barrier = 0.5 * barrier_estimate(path)
    rstats, sstats = RoundStats(), SweepStats()
    trace = []
    violations = 0
    sweeps = 0
    rounds = 0
    status = "max_iter"
    best_asym, stall = np.inf, 0
    prev_max = path.max_energy

    def note_max():
        nonlocal prev_max, violations
        cur = path.max_energy
        if cur > prev_max + tol * (1 + abs(prev_max)):
            violations += 1
        prev_max = cur

    it = 0
    for it in range(1, cfg.max_iter + 1):
        for _ in range(cfg.sweep_period):
            descend_round(path, m, cfg, rstats)
            rounds += 1
            note_max()
        if path.max_energy < barrier:
            raise SolverError(
                f"path maximum {path.max_energy:.6g} fell below the barrier {barrier:.6g}; "
                "the path left the mountain-pass class"
            )
        u = path.function(path.argmax)
        slope_val, _ = dual_norm(residual_values(u.values, domain, m), domain)
        asym = asymmetry(u)
        unorm = norm_L2(u)
        trace.append(
            {
                "iter": it,
                "max_f": path.max_energy,
                "slope": slope_val,
                "asymmetry": asym,
                "sweeps": sweeps,
            }
        )
        logger.debug("iter %d max_f %.10g slope %.3e asym %.3e", it, path.max_energy, slope_val, asym)
        if slope_val <= cfg.tol_res and asym <= cfg.tol_sym * unorm:
            status = "converged"
            break
        if slope_val <= cfg.tol_res:
            if asym < 0.99 * best_asym:
                best_asym, stall = asym, 0
            else:
                stall += 1
            if stall >= cfg.stall_patience:
                status = "stalled"
                break
        h1max = max(math.sqrt(max(_h1(domain, p, p), 0.0)) for p in path.points)
        if h1max > cfg.h1_abort:
            raise SolverError(f"path norm {h1max:.3g} exceeds {cfg.h1_abort:.3g}")
        if it == cfg.max_iter:
            break
        polarization_sweep(path, m, cfg, rng, sstats)
        sweeps += 1
        note_max()

    u = path.function(path.argmax)
    slope_val, _ = dual_norm(residual_values(u.values, domain, m), domain)
    asym = asymmetry(u)
    unorm = norm_L2(u)
    converged = status == "converged"
    if converged:
        # terminal in-band symmetrization runs on a copy; the reported
        # solution stays the converged node
        c = path.energies[path.argmax]
        band = (c - 3 * cfg.tol_res, c + cfg.tol_res)
        symmetrize_path(path.copy(), band, cfg.tol_sym * unorm, m, cfg, rng, SweepStats())
        converged = asym <= cfg.tol_sym * unorm and violations == 0
        if not converged:
            status = "violations"
    return SolveReport(
        critical_value=float(path.energies[path.argmax]),
        slope=slope_val,
        asymmetry=asym,
        relative_asymmetry=asym / unorm if unorm > 0 else 0.0,
        max_abs=float(np.abs(u.values).max()),
        iterations=it if cfg.max_iter else 0,
        descent_rounds=rounds,
        sweeps=sweeps,
        monotonicity_violations=violations,
        sweep_rejections=sstats.rejected,
        refinements=rstats.refinements,
        stagnations=rstats.stagnated,
        converged=converged,
        status=status,
        trace=trace,
        solution=u,
        path=path,
        model=m.name,
        config=cfg.to_dict(),
    )
