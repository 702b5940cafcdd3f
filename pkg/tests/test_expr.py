import numpy as np
import pytest

from symmetra.expr import ExpressionError, compile_expression


def test_arithmetic_and_power():
    f = compile_expression("0.5*(1+s^2)*t**2", ("s", "t"))
    s, t = np.array([0.0, 2.0]), np.array([1.0, 3.0])
    assert np.allclose(f(s, t), 0.5 * (1 + s**2) * t**2)


def test_functions_and_constants():
    f = compile_expression("abs(s)^(p-2)*s + max(r, 0) - min(r, 0) + exp(0) + log(1) + sqrt(4) + powi(s, 3)", ("r", "s"), {"p": 4.0})
    r, s = np.array([0.5]), np.array([-2.0])
    want = 4 * -2.0 + 0.5 + 1 + 0 + 2 - 8
    assert f(r, s)[0] == pytest.approx(want)


def test_broadcasts_constant_expressions():
    f = compile_expression("2.5", ("tau",))
    assert f(np.zeros(4)).shape == (4,)


@pytest.mark.parametrize("src", ["__import__('os')", "s.real", "s if t else 1", "unknown(s)", "q + 1", "powi(s, t)", "1 +"])
def test_rejects_unsafe_or_bad_syntax(src):
    with pytest.raises(ExpressionError):
        compile_expression(src, ("s", "t"))


def test_arity_checked():
    f = compile_expression("s", ("s", "t"))
    with pytest.raises(TypeError):
        f(1.0)


def test_caret_binds_like_power():
    f = compile_expression("1+s^2*2", ("s",))
    assert f(np.array([3.0]))[0] == 19.0
