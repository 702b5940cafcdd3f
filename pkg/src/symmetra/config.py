"""Run configuration files: flat ``key = value`` lines under sections.

::

    [run]
    command = solve
    model = semilinear
    d = 2
    n = 65

    [solver]
    k = 40
    tol_res = 1e-4
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field

from .minimax import SolverConfig

COMMANDS = ("solve", "verify", "symmetrize", "polarize", "check-model", "oracle", "energy", "slope")


def _coerce(text: str, kind):
    text = text.strip().strip("\"'")
    if kind is bool or kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is int or kind == "int":
        return int(text)
    if kind is float or kind == "float":
        return float(text)
    if kind in (str, "str", "str | None"):
        return None if text == "" else text
    return text


@dataclass
class RunConfig:
    command: str = "solve"
    model: str = "semilinear"
    d: int = 2
    n: int = 65
    seed: int = 7
    out: str | None = None
    solution: str | None = None
    trace: str | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {f.name: _fmt(getattr(self, f.name)) for f in dataclasses.fields(self) if f.name != "solver"}
        cp["solver"] = {f.name: _fmt(getattr(self.solver, f.name)) for f in dataclasses.fields(SolverConfig)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        run_types = {f.name: f.type for f in dataclasses.fields(cls) if f.name != "solver"}
        solver_types = {f.name: f.type for f in dataclasses.fields(SolverConfig)}
        kw = {}
        if cp.has_section("run"):
            for key, val in cp["run"].items():
                if key not in run_types:
                    raise ValueError(f"unknown [run] key {key!r}")
                kw[key] = _coerce(val, run_types[key])
        skw = {}
        if cp.has_section("solver"):
            for key, val in cp["solver"].items():
                if key not in solver_types:
                    raise ValueError(f"unknown [solver] key {key!r}")
                skw[key] = _coerce(val, solver_types[key])
        unknown = set(cp.sections()) - {"run", "solver"}
        if unknown:
            raise ValueError(f"unknown sections {sorted(unknown)}")
        return cls(solver=SolverConfig(**skw), **kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)
