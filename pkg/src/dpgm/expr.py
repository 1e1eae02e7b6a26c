"""Tiny arithmetic expression language for data functions.

Grammar: numbers, the variables ``x``, ``y``, ``t`` (as allowed by the
problem), constants ``pi`` and ``e``, ``+ - * /``, ``^`` or ``**`` for powers,
unary minus, parentheses, and the functions ``sin``, ``cos``, ``exp``.

>>> f = parse_expression("2*pi^2*cos(pi*x)*sin(pi*y)", ("x", "y"))
>>> round(float(f([[0.0, 0.5]])[0]), 6)
19.739209
"""
from __future__ import annotations

import ast
import math

import numpy as np

__all__ = ["ExpressionError", "Expression", "parse_expression"]

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


class Expression:
    """A parsed expression, callable on ``(N, len(variables))`` point arrays."""

    def __init__(self, source: str, variables):
        self.source = source
        self.variables = tuple(variables)
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"unsupported literal {node.value!r} in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ExpressionError(
                    f"unknown symbol {node.id!r} in {self.source!r}; "
                    f"allowed: {', '.join(self.variables + tuple(_CONSTS))}"
                )
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"unsupported operator in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"unsupported unary operator in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExpressionError(f"unknown function in {self.source!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            self._check(node.args[0])
        else:
            raise ExpressionError(f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        return _FUNCS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != len(self.variables):
            raise ValueError(
                f"expression over {self.variables} evaluated at {pts.shape[1]}-d points"
            )
        env = {v: pts[:, i] for i, v in enumerate(self.variables)}
        out = self._eval(self._tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse_expression(source, variables=("x", "y")) -> Expression:
    if isinstance(source, (int, float)):
        source = repr(float(source))
    return Expression(str(source), variables)
