"""Tiny vectorized arithmetic-expression compiler for user model files.

Grammar: numbers, variable and constant names, ``+ - * / ^`` (``**`` also
accepted), parentheses, and the functions ``abs min max exp log sqrt powi``.
Expressions are parsed with :mod:`ast` and only the node types above are
accepted; the result evaluates elementwise on numpy arrays.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}

_FUNCS = {
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "powi": lambda x, k: np.power(x, int(k)),
}


class ExpressionError(ValueError):
    pass


def _build(node, names: frozenset):
    if isinstance(node, ast.Expression):
        return _build(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, ast.Name):
        if node.id not in names:
            raise ExpressionError(f"unknown name {node.id!r}")
        key = node.id
        return lambda env: env[key]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _build(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        lhs, rhs = _build(node.left, names), _build(node.right, names)
        return lambda env: op(lhs(env), rhs(env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        fname = node.func.id
        if fname not in _FUNCS:
            raise ExpressionError(f"unknown function {fname!r}")
        fn = _FUNCS[fname]
        args = [_build(a, names) for a in node.args]
        if fname == "powi":
            if len(args) != 2 or not isinstance(node.args[1], ast.Constant):
                raise ExpressionError("powi(x, k) needs a literal integer exponent")
        return lambda env: fn(*(a(env) for a in args))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)}")


def compile_expression(source: str, variables, constants=None):
    """Compile ``source`` into ``f(*variables)``.

    Parameters
    ----------
    source : str
        Expression text, e.g. ``"0.5*(1+s^2)*t^2"``.
    variables : sequence of str
        Positional argument names of the returned callable.
    constants : dict, optional
        Named constants available to the expression.
    """
    constants = dict(constants or {})
    variables = tuple(variables)
    try:
        # '^' is power here; rewriting it keeps the usual precedence
        # (Python's xor binds looser than '+')
        tree = ast.parse(source.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    fn = _build(tree, frozenset(variables) | frozenset(constants))

    def evaluate(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments")
        env = dict(constants)
        env.update(zip(variables, (np.asarray(a, dtype=float) for a in args)))
        out = fn(env)
        shape = np.broadcast(*(env[v] for v in variables)).shape
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    evaluate.source = source
    return evaluate
