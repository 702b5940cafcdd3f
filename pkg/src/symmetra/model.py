"""Integrands of the quasi-linear functional and a sampling assumption checker.

A model supplies ``j(s, t)`` with ``t = |xi|``, its partial derivatives
``j_s`` and ``j_t``, the nonlinearity ``g(r, s)`` with ``r = |x|`` and its
primitive ``G``, the structural constants, and the envelope functions
``alpha``/``beta`` bounding ``j`` and ``j_s``.

:func:`check_assumptions` turns each structural hypothesis into a quantified
test on a deterministic sample; limit hypotheses are tested as decade-wise
decay, so a pass is evidence, not proof.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .expr import compile_expression

HYPOTHESES = (
    "j1",
    "j2",
    "j3",
    "j4",
    "opposite",
    "gg1",
    "gg2",
    "gg3",
    "gg5",
    "gg6",
    "j5",
    "j6",
    "consistency",
)


@dataclass
class ModelFunctions:
    j: Callable
    j_s: Callable
    j_t: Callable
    g: Callable
    G: Callable
    alpha: Callable
    beta: Callable
    p: float
    mu: float
    alpha0: float
    R: float = 1.0
    R_prime: float = 1.0
    R_second: float = 1.0
    delta: float = 1.0
    C: float = 1.0
    name: str = "custom"
    source: dict = field(default_factory=dict, repr=False)


def _semilinear(p: float = 4.0) -> ModelFunctions:
    return ModelFunctions(
        j=lambda s, t: 0.5 * np.asarray(t) ** 2 + 0.0 * np.asarray(s),
        j_s=lambda s, t: np.zeros(np.broadcast(s, t).shape),
        j_t=lambda s, t: np.asarray(t, dtype=float) + 0.0 * np.asarray(s),
        g=lambda r, s: np.abs(s) ** (p - 2) * s + 0.0 * np.asarray(r),
        G=lambda r, s: np.abs(s) ** p / p + 0.0 * np.asarray(r),
        alpha=lambda tau: 0.5 + 0.0 * np.asarray(tau),
        beta=lambda tau: 1.0 + 0.0 * np.asarray(tau),
        p=p,
        mu=p,
        alpha0=0.5,
        delta=p / 2 - 1,
        name="semilinear",
    )


def _quasilinear(p: float = 5.0) -> ModelFunctions:
    # p*j - j_s*s - j_t*t = (p/2 - 1)(1+s^2)t^2 - s^2 t^2; for p = 5 this is
    # (3/2 + s^2/2) t^2 >= (3/2) t^2
    return ModelFunctions(
        j=lambda s, t: 0.5 * (1.0 + np.asarray(s) ** 2) * np.asarray(t) ** 2,
        j_s=lambda s, t: np.asarray(s) * np.asarray(t) ** 2,
        j_t=lambda s, t: (1.0 + np.asarray(s) ** 2) * np.asarray(t),
        g=lambda r, s: np.abs(s) ** (p - 2) * s + 0.0 * np.asarray(r),
        G=lambda r, s: np.abs(s) ** p / p + 0.0 * np.asarray(r),
        alpha=lambda tau: 0.5 * (1.0 + np.asarray(tau) ** 2),
        beta=lambda tau: np.asarray(tau, dtype=float),
        p=p,
        mu=p,
        alpha0=0.5,
        delta=1.5 if p == 5.0 else min(p / 2 - 1, p - 3),
        name="quasilinear",
    )


PRESETS = {"semilinear": _semilinear, "quasilinear": _quasilinear}


# -- fault-injected models ----------------------------------------------------------
# Each breaks exactly one hypothesis of the semilinear preset and adjusts the
# declared constants so that nothing else flips.


def _fault_j2() -> ModelFunctions:
    # j = t^2/4 sits below the claimed alpha0 t^2 = t^2/2
    m = _semilinear()
    m.j = lambda s, t: 0.25 * np.asarray(t) ** 2 + 0.0 * np.asarray(s)
    m.j_t = lambda s, t: 0.5 * np.asarray(t, dtype=float) + 0.0 * np.asarray(s)
    m.delta = 0.5
    m.name = "fault-j2"
    return m


def _fault_gg5() -> ModelFunctions:
    # weight increasing in r: g(rho, s) > g(r, s) for rho > r, s > 0
    m = _semilinear()
    m.g = lambda r, s: (1.0 + np.asarray(r)) * np.asarray(s) ** 3
    m.G = lambda r, s: (1.0 + np.asarray(r)) * np.asarray(s) ** 4 / 4
    m.C = 2.0
    m.name = "fault-gg5"
    return m


def _fault_gg3() -> ModelFunctions:
    # linear part at the origin: g(s)/s -> 1
    m = _semilinear()
    m.g = lambda r, s: np.asarray(s) + np.asarray(s) ** 3 + 0.0 * np.asarray(r)
    m.G = lambda r, s: np.asarray(s) ** 2 / 2 + np.asarray(s) ** 4 / 4 + 0.0 * np.asarray(r)
    m.mu = 3.0
    m.R_prime = 2.0
    m.C = 2.0
    m.name = "fault-gg3"
    return m


#: name -> (factory, the single hypothesis it violates)
FAULT_MODELS = {
    "F1": (_fault_j2, "j2"),
    "F2": (_fault_gg5, "gg5"),
    "F3": (_fault_gg3, "gg3"),
}


def preset(name: str, **kwargs) -> ModelFunctions:
    """Built-in models: ``semilinear`` (``j = t^2/2``, ``g = |s|^{p-2}s``,
    default ``p = 4``) and ``quasilinear`` (``j = (1+s^2)t^2/2``, ``p = 5``)."""
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# -- config files -------------------------------------------------------------

_CONST_KEYS = {
    "p": "p",
    "mu": "mu",
    "alpha0": "alpha0",
    "R": "R",
    "R_prime": "R_prime",
    "R'": "R_prime",
    "R_second": "R_second",
    "R''": "R_second",
    "delta": "delta",
    "C": "C",
}


def _unquote(v: str) -> str:
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def model_from_config(text: str, name: str = "custom") -> ModelFunctions:
    """Parse a model file with ``[constants]`` and ``[functions]`` sections.

    Function keys: ``j, j_s, j_t`` over ``(s, t)``; ``g, G`` over ``(r, s)``;
    ``alpha, beta`` over ``tau``. Constants are also usable inside expressions.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string(text)
    if not cp.has_section("functions"):
        raise ValueError("model config needs a [functions] section")
    consts = {}
    if cp.has_section("constants"):
        for k, v in cp.items("constants"):
            consts[k] = float(_unquote(v))
    funcs = {k: _unquote(v) for k, v in cp.items("functions")}
    missing = {"j", "j_s", "j_t", "g", "G", "alpha", "beta"} - set(funcs)
    if missing:
        raise ValueError(f"model config missing functions: {sorted(missing)}")
    for req in ("p", "mu", "alpha0"):
        if req not in consts:
            raise ValueError(f"model config missing constant {req!r}")

    expr_consts = {k.replace("'", "_"): v for k, v in consts.items()}

    def comp(key, variables):
        return compile_expression(funcs[key], variables, expr_consts)

    kwargs = {attr: consts[k] for k, attr in _CONST_KEYS.items() if k in consts}
    if cp.has_section("model") and cp.has_option("model", "name"):
        name = _unquote(cp.get("model", "name"))
    return ModelFunctions(
        j=comp("j", ("s", "t")),
        j_s=comp("j_s", ("s", "t")),
        j_t=comp("j_t", ("s", "t")),
        g=comp("g", ("r", "s")),
        G=comp("G", ("r", "s")),
        alpha=comp("alpha", ("tau",)),
        beta=comp("beta", ("tau",)),
        name=name,
        source={"constants": consts, "functions": funcs},
        **kwargs,
    )


def load_model(spec: str) -> ModelFunctions:
    """Resolve a preset name or a model config path."""
    if spec in PRESETS:
        return preset(spec)
    path = Path(spec)
    return model_from_config(path.read_text(), name=path.stem)


# -- assumption checker ---------------------------------------------------------


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    witness: dict | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "witness": self.witness, "detail": self.detail}


@dataclass
class AssumptionReport:
    checks: list[HypothesisCheck]
    samples: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.name in HYPOTHESES)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


_REL = 1e-12


def _leq(lhs, rhs, where=None, **coords) -> tuple[bool, dict | None]:
    """Check ``lhs <= rhs`` up to a relative rounding slack; report the
    worst violator."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    lhs, rhs = np.broadcast_arrays(lhs, rhs)
    slack = _REL * (np.abs(lhs) + np.abs(rhs)) + 1e-300
    viol = (lhs - rhs) / slack
    bad = ~(lhs <= rhs + slack)
    if where is not None:
        bad &= np.broadcast_to(where, bad.shape)
    if not np.any(bad):
        return True, None
    viol = np.where(bad, np.nan_to_num(viol, nan=np.inf), -np.inf)
    i = int(np.argmax(viol))
    wit = {k: float(np.broadcast_to(v, bad.shape).ravel()[i]) for k, v in coords.items()}
    wit["lhs"] = float(lhs.ravel()[i])
    wit["rhs"] = float(rhs.ravel()[i])
    return False, wit


def _decade_decay(values: list[float], points) -> tuple[bool, dict | None]:
    for a, b, x in zip(values[:-1], values[1:], points[1:]):
        if a == 0.0:
            if b != 0.0:
                return False, {"at": float(x), "ratio": float("inf")}
            continue
        ratio = b / a
        if not ratio < 0.5:
            return False, {"at": float(x), "ratio": float(ratio)}
    return True, None


def _simpson(fn, upper: np.ndarray, panels: int = 64) -> np.ndarray:
    """Composite Simpson integral of ``fn(sigma)`` over ``[0, upper]``."""
    m = 2 * panels
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    u = np.linspace(0.0, 1.0, m + 1)
    sig = upper[:, None] * u[None, :]
    vals = fn(sig)
    return upper * (vals @ w) / (3.0 * m)


def check_assumptions(m: ModelFunctions, samples: int = 10_000, seed: int = 0) -> AssumptionReport:
    """Test the structural hypotheses of ``m`` on a deterministic sample.

    ``s`` and ``t`` range over log-spaced grids in ``[1e-6, 1e3]`` (``s``
    with random signs), ``r`` is uniform in ``[0, 1]``. Each failing check
    carries the worst witness found. The result depends only on
    ``(samples, seed)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    grid = np.logspace(-6, 3, max(samples, 2))
    sign = np.where(rng.random(grid.size) < 0.5, -1.0, 1.0)
    s = grid[rng.permutation(grid.size)] * sign
    t = grid[rng.permutation(grid.size)]
    r = rng.uniform(0.0, 1.0, grid.size)
    r2 = rng.uniform(0.0, 1.0, grid.size)
    abs_s = np.abs(s)
    checks = []

    def add(name, result, detail=""):
        ok, wit = result
        checks.append(HypothesisCheck(name, ok, wit, detail))

    # (j1) strict convexity and monotonicity of t -> j(s, t)
    t_lo, t_hi = grid[:-1], grid[1:]
    s_pair = s[: t_lo.size]
    j_lo, j_hi = m.j(s_pair, t_lo), m.j(s_pair, t_hi)
    flat = ~(j_hi > j_lo)
    ok_inc, wit = True, None
    if np.any(flat):
        i = int(np.flatnonzero(flat)[0])
        ok_inc = False
        wit = {"s": float(s_pair[i]), "t": float(t_lo[i]), "lhs": float(j_lo[i]), "rhs": float(j_hi[i])}
    if ok_inc:
        # wide pairs exercise convexity away from the diagonal
        ta, tb = np.minimum(t, t[::-1]), np.maximum(t, t[::-1])
        ta, tb = np.concatenate([t_lo, ta]), np.concatenate([t_hi, tb])
        ss = np.concatenate([s_pair, s])
        ja, jb, jm = m.j(ss, ta), m.j(ss, tb), m.j(ss, 0.5 * (ta + tb))
        avg = 0.5 * (ja + jb)
        distinct = tb > ta
        bad = distinct & ~(jm < avg - 1e-12 * np.abs(avg))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            wit = {"s": float(ss[i]), "t": float(ta[i]), "t2": float(tb[i]),
                   "lhs": float(jm[i]), "rhs": float(avg[i])}
            ok_inc = False
    add("j1", (ok_inc, wit))

    # (j2) alpha0 t^2 <= j(s,t) <= alpha(|s|) t^2, including t = 0
    tt = np.concatenate([t, np.zeros(8)])
    s2 = np.concatenate([s, s[:8]])
    jv = m.j(s2, tt)
    ok1, w1 = _leq(m.alpha0 * tt**2, jv, s=s2, t=tt)
    ok2, w2 = _leq(jv, m.alpha(np.abs(s2)) * tt**2, s=s2, t=tt)
    add("j2", (ok1 and ok2, w1 or w2))

    add("j3", _leq(np.abs(m.j_s(s, t)), m.beta(abs_s) * t**2, s=s, t=t))
    add("j4", _leq(0.0, m.j_s(s, t) * s, where=abs_s >= m.R, s=s, t=t))
    sn = -abs_s
    add("opposite", _leq(m.j(-sn, t), m.j(sn, t), s=sn, t=t))

    gv = m.g(r, s)
    Gv = m.G(r, s)
    add("gg1", _leq(np.abs(gv), m.C * (1.0 + abs_s ** (m.p - 1)), r=r, s=s))
    far = abs_s >= m.R_prime
    ok_pos, w_pos = _leq(0.0, m.mu * Gv, where=far, r=r, s=s)
    if ok_pos and np.any(far & (m.mu * Gv == 0.0)):
        i = int(np.flatnonzero(far & (m.mu * Gv == 0.0))[0])
        ok_pos, w_pos = False, {"r": float(r[i]), "s": float(s[i]), "lhs": 0.0, "rhs": 0.0}
    ok_ar, w_ar = _leq(m.mu * Gv, gv * s, where=far, r=r, s=s)
    add("gg2", (ok_pos and ok_ar, w_pos or w_ar))

    # (gg3) g(r,s)/s -> 0: sup over r of |g/s| must decay by >2x per decade
    decades = [1e-4, 1e-5, 1e-6]
    sup = []
    for sd in decades:
        ss = np.concatenate([np.full(r.size, sd), np.full(r.size, -sd)])
        rr = np.concatenate([r, r])
        sup.append(float(np.max(np.abs(m.g(rr, ss) / ss))))
    add("gg3", _decade_decay(sup, decades), detail=f"sup|g/s| = {sup}")

    lo, hi = np.minimum(r, r2), np.maximum(r, r2)
    add("gg5", _leq(m.g(hi, s), m.g(lo, s), r=lo, rho=hi, s=s))
    add("gg6", _leq(m.G(r, sn), m.G(r, -sn), r=r, s=sn))
    comb = m.p * m.j(s, t) - m.j_s(s, t) * s - m.j_t(s, t) * t
    add("j5", _leq(m.delta * t**2, comb, where=abs_s >= m.R_second, s=s, t=t))

    taus = [1e1, 1e2, 1e3]
    ratios = [float(m.alpha(np.asarray(x)) / x ** (m.p - 2)) for x in taus]
    add("j6", _decade_decay(ratios, taus), detail=f"alpha(tau)/tau^(p-2) = {ratios}")

    # G(r, s) = int_0^s g(r, sigma) dsigma and G(r, 0) = 0
    quad = _simpson(lambda sig: m.g(r[:, None], sig), s)
    scale = np.maximum(np.abs(Gv), np.abs(quad))
    err = np.abs(Gv - quad)
    G0 = np.abs(m.G(r, np.zeros_like(r)))
    bad = (err > 1e-6 * scale + 1e-300) | (G0 != 0)
    bad_i = np.flatnonzero(bad)
    if bad_i.size:
        i = int(bad_i[np.argmax(err[bad_i])])
        add("consistency", (False, {"r": float(r[i]), "s": float(s[i]), "lhs": float(Gv[i]), "rhs": float(quad[i])}))
    else:
        add("consistency", (True, None))

    checks.append(_derivative_check(m, rng))
    return AssumptionReport(checks, samples, seed)


def _derivative_check(m: ModelFunctions, rng: np.random.Generator) -> HypothesisCheck:
    """Auxiliary guard: supplied ``j_s``/``j_t`` against central differences."""
    s = rng.uniform(-10, 10, 200)
    t = np.exp(rng.uniform(np.log(1e-2), np.log(10.0), 200))
    eps = 1e-6
    fd_s = (m.j(s + eps * (1 + abs(s)), t) - m.j(s - eps * (1 + abs(s)), t)) / (2 * eps * (1 + abs(s)))
    fd_t = (m.j(s, t + eps * t) - m.j(s, t - eps * t)) / (2 * eps * t)
    for name, fd, an in (("j_s", fd_s, m.j_s(s, t)), ("j_t", fd_t, m.j_t(s, t))):
        scale = np.maximum(1.0, np.abs(an))
        bad = np.abs(fd - an) > 1e-5 * scale
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            return HypothesisCheck(
                "derivatives", False, {"s": float(s[i]), "t": float(t[i]), "lhs": float(an[i]), "rhs": float(fd[i])}, name
            )
    return HypothesisCheck("derivatives", True)
