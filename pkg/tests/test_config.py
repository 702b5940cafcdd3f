import pytest

from symmetra.config import RunConfig
from symmetra.minimax import SolverConfig


def test_roundtrip(tmp_path):
    cfg = RunConfig(model="quasilinear", n=33, seed=3, trace="t.csv", solver=SolverConfig(k=12, geom_C=7.5))
    cfg.save(tmp_path / "run.ini")
    back = RunConfig.load(tmp_path / "run.ini")
    assert back == cfg
    assert back.to_text() == cfg.to_text()


def test_bundled_config_loads():
    cfg = RunConfig.load("configs/solve_semilinear.ini")
    assert cfg.model == "semilinear" and cfg.solver.k == 40 and cfg.out is None


@pytest.mark.parametrize(
    "text",
    [
        "[run]\nbogus = 1\n",
        "[solver]\nkk = 3\n",
        "[other]\na = 1\n",
        "[run]\ncommand = launch\n",
        "[solver]\nk = 0\n",
    ],
)
def test_rejects_bad_config(text):
    with pytest.raises(ValueError):
        RunConfig.from_text(text)
