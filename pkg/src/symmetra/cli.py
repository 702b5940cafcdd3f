"""``symmetra`` command line.

Exit codes: 0 success / converged, 2 ran but did not converge or a check
failed, 1 error.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from .config import RunConfig
from .grid import SCHEMA_VERSION, Domain, load, save

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


def _limit_threads():
    cap = os.environ.get("SYMMETRA_THREADS")
    if not cap:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(cap))


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def _emit(payload: dict, out: str | None):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    text = json.dumps(payload, indent=2, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


class _Command(click.Command):
    """Maps library exceptions to exit code 1 with a one-line message."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as exc:  # noqa: BLE001
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(EXIT_ERROR)


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def main(verbose):
    """Polarization, Schwarz symmetrization and symmetric mountain-pass solves."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    limiter = _limit_threads()
    if limiter is not None:
        click.get_current_context().call_on_close(limiter.unregister)


# -- solve ----------------------------------------------------------------------

_SOLVER_FLAGS = {
    "k": int,
    "tol_res": float,
    "tol_sym": float,
    "max_iter": int,
    "sweep_period": int,
    "m": int,
    "model_check": click.Choice(["error", "warn", "off"]),
}


def _solver_options(fn):
    for name, kind in reversed(_SOLVER_FLAGS.items()):
        fn = click.option(f"--{name.replace('_', '-')}", name, type=kind, default=None)(fn)
    return fn


@main.command(cls=_Command)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Run config file.")
@click.option("--model", default=None, help="Preset name or model config path.")
@click.option("--d", type=click.IntRange(2, 3), default=None)
@click.option("--n", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_solver_options
@click.option("--out", default=None, help="Report JSON (stdout if omitted).")
@click.option("--solution", default=None, help="Write the solution grid function (.csv or .json).")
@click.option("--trace", default=None, help="Write the convergence trace CSV.")
@click.option("--plot-dir", default=None, help="Also write profile/trace/asymmetry CSVs here.")
def solve(config_path, model, d, n, seed, out, solution, trace, plot_dir, **solver_kw):
    """Find a symmetric mountain-pass critical point."""
    from .export import export_plotdata, write_trace
    from .minimax import solve as run_solve
    from .model import load_model

    cfg = RunConfig.load(config_path) if config_path else RunConfig()
    overrides = {"model": model, "d": d, "n": n, "seed": seed, "out": out, "solution": solution, "trace": trace}
    cfg = dataclasses.replace(cfg, command="solve", **{k: v for k, v in overrides.items() if v is not None})
    skw = {k: v for k, v in solver_kw.items() if v is not None}
    skw["seed"] = cfg.seed
    cfg.solver = dataclasses.replace(cfg.solver, **skw)

    rep = run_solve(load_model(cfg.model), Domain(cfg.d, cfg.n), cfg.solver)
    if cfg.solution:
        save(rep.solution, cfg.solution)
    if cfg.trace:
        write_trace(cfg.trace, rep.trace)
    if plot_dir:
        export_plotdata(rep, plot_dir)
    _emit(rep.to_dict(), cfg.out)
    sys.exit(EXIT_OK if rep.converged else EXIT_NOT_CONVERGED)


# -- verify ----------------------------------------------------------------------


@main.command(cls=_Command)
@click.option("--suite", type=click.Choice(["rearrange-axioms", "inequalities", "gradient", "envelope", "slope-formula", "all"]), default="all")
@click.option("--seed", type=int, default=7)
@click.option("--n", type=int, default=33)
@click.option("--out", default=None)
def verify(suite, seed, n, out):
    """Run a deterministic property suite; exit 0 iff no failures."""
    from .verify import verify as run_verify

    rep = run_verify(suite, seed, n)
    _emit(rep.to_dict(), out)
    sys.exit(EXIT_OK if rep.ok else EXIT_NOT_CONVERGED)


# -- rearrangements ----------------------------------------------------------------


@main.command(cls=_Command)
@click.option("--in", "src", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True)
def symmetrize(src, out):
    """Schwarz symmetrization of a grid function."""
    from .rearrange import symmetrize as run

    save(run(load(src)), out)


def _parse_alpha(text: str):
    parts = [p for p in text.replace(",", " ").split() if p]
    return [float(p) for p in parts]


@main.command(cls=_Command)
@click.option("--in", "src", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", required=True, help="Normal, e.g. '1,0' (normalized).")
@click.option("--beta", required=True, help="Offset >= 0, or 'inf'.")
@click.option("--mode", type=click.Choice(["exact", "interp"]), default="exact")
@click.option("--out", required=True)
def polarize(src, alpha, beta, mode, out):
    """Polarize ``|u|`` by the half-space ``alpha . x <= beta``."""
    from .rearrange import Polarizer, polarize_signed

    u = load(src)
    b = np.inf if beta.strip().lstrip("+").lower() in ("inf", "infinity") else float(beta)
    a = _parse_alpha(alpha)
    H = Polarizer.infinity(u.domain.d) if np.isinf(b) else Polarizer.from_normal(a, b)
    save(polarize_signed(u, H, mode), out)


# -- models and energy -------------------------------------------------------------


@main.command("check-model", cls=_Command)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Model config file.")
@click.option("--model", default=None, help="Preset name (alternative to --config).")
@click.option("--samples", type=click.IntRange(min=1), default=10_000)
@click.option("--seed", type=int, default=7)
@click.option("--out", default=None)
def check_model(config_path, model, samples, seed, out):
    """Test the structural hypotheses of a model; exit 0 iff all pass."""
    from .model import check_assumptions, load_model

    if (config_path is None) == (model is None):
        raise click.UsageError("give exactly one of --config or --model")
    m = load_model(config_path or model)
    rep = check_assumptions(m, samples, seed)
    _emit({"model": m.name, **rep.to_dict()}, out)
    sys.exit(EXIT_OK if not rep.failed else EXIT_NOT_CONVERGED)


def _in_and_model(fn):
    fn = click.option("--out", default=None)(fn)
    fn = click.option("--model", default="semilinear", help="Preset name or model config path.")(fn)
    fn = click.option("--in", "src", required=True, type=click.Path(exists=True, dir_okay=False))(fn)
    return fn


@main.command(cls=_Command)
@_in_and_model
def energy(src, model, out):
    """Energy breakdown of a grid function."""
    from .energy import energy as run
    from .model import load_model

    _emit(run(load(src), load_model(model)).to_dict(), out)


@main.command(cls=_Command)
@_in_and_model
def slope(src, model, out):
    """Sobolev-dual slope of the energy at a grid function."""
    from .energy import slope as run
    from .model import load_model

    _emit(run(load(src), load_model(model)).to_dict(), out)


@main.command(cls=_Command)
@click.option("--d", type=click.IntRange(2, 3), default=2)
@click.option("--p", type=float, default=4.0)
@click.option("--n", type=int, default=65)
@click.option("--out", default=None)
@click.option("--profile", default=None, help="Also write the lifted profile grid function.")
def oracle(d, p, n, out, profile):
    """Radial shooting reference for the semilinear preset."""
    from .oracle import oracle_semilinear

    res = oracle_semilinear(d, p, Domain(d, n))
    if profile:
        save(res.lifted, profile)
    _emit({**res.to_dict(), "n": n}, out)


if __name__ == "__main__":  # pragma: no cover
    main()
