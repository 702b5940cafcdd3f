"""Plot-ready CSV exports: radial profile, convergence trace, asymmetry."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .grid import GridFunction

TRACE_COLUMNS = ("iter", "max_f", "slope", "asymmetry", "sweeps")
PROFILE_HEADER = "# radial profile: r = bin centre (bins of width h over |x|), u = mean over active nodes, count = nodes"
TRACE_HEADER = "# convergence trace: one row per outer iteration, measured before that iteration's sweep"
ASYM_HEADER = "# asymmetry of the highest path node, ||u| - u*||_L2, per outer iteration"


def radial_profile(u: GridFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bin active-node values by radius with bin width ``h``.

    Returns ``(r, mean, count)`` for nonempty bins, ``r`` the bin centres.
    """
    dom = u.domain
    r = dom.radius.ravel()[dom.active_flat]
    vals = u.active_values
    bins = np.floor(r / dom.h + 1e-9).astype(np.int64)
    nb = int(bins.max()) + 1
    count = np.bincount(bins, minlength=nb)
    total = np.bincount(bins, weights=vals, minlength=nb)
    keep = count > 0
    centres = (np.arange(nb) + 0.5) * dom.h
    return centres[keep], total[keep] / count[keep], count[keep]


def radially_nonincreasing(u: GridFunction, tol: float = 0.0) -> bool:
    """Every bin mean is at least the next bin mean minus ``tol``."""
    _, mean, _ = radial_profile(u)
    return bool(np.all(mean[:-1] >= mean[1:] - tol))


def _write(path, header: str, columns, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(header + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def write_profile(path, u: GridFunction):
    r, mean, count = radial_profile(u)
    return _write(path, PROFILE_HEADER, ("r", "u", "count"), zip(r, mean, (int(c) for c in count)))


def read_profile(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = _read_rows(path)
    if not rows:
        return np.empty(0), np.empty(0), np.empty(0, dtype=np.int64)
    arr = list(zip(*rows))
    return np.array(arr[0], dtype=float), np.array(arr[1], dtype=float), np.array(arr[2], dtype=np.int64)


def _read_rows(path):
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [[float(x) if "." in x or "e" in x or "n" in x else int(x) for x in row] for row in list(csv.reader(lines))[1:]]


def write_trace(path, trace):
    return _write(path, TRACE_HEADER, TRACE_COLUMNS, ([row[c] for c in TRACE_COLUMNS] for row in trace))


def write_asymmetry(path, trace):
    return _write(path, ASYM_HEADER, ("iter", "asymmetry"), ((row["iter"], row["asymmetry"]) for row in trace))


def read_trace(path) -> list[dict]:
    return [dict(zip(TRACE_COLUMNS, row)) for row in _read_rows(path)]


def export_plotdata(report, outdir, prefix: str = "") -> dict:
    """Write ``profile.csv``, ``trace.csv`` and ``asymmetry.csv`` for a
    :class:`~symmetra.minimax.SolveReport` (or anything with ``solution`` and
    ``trace``). An empty trace gives header-only trace files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    out = {
        "trace": write_trace(outdir / f"{prefix}trace.csv", report.trace),
        "asymmetry": write_asymmetry(outdir / f"{prefix}asymmetry.csv", report.trace),
    }
    if report.solution is not None:
        out["profile"] = write_profile(outdir / f"{prefix}profile.csv", report.solution)
    return out
