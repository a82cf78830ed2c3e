"""Tiny total expression language for coefficients, kernels and nonlinearities.

Grammar: arithmetic over named variables with ``+ - * / ^`` (``^`` is power;
the unicode forms ``×`` and ``÷`` are accepted), unary minus, parentheses,
the constants ``pi`` and ``e``, and the functions ``exp``, ``abs``, ``min``,
``max`` and ``indicator``.  ``indicator(t)`` is 1 where t > 0 and 0 elsewhere.
Every expression is validated against an explicit variable set at compile
time, so evaluation is total: no undefined identifier can appear at runtime.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import ConfigParse

_ALLOWED_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}

_ALLOWED_UNARY = {ast.USub: np.negative, ast.UAdd: lambda v: v}


def _indicator(t):
    return np.where(np.asarray(t, dtype=float) > 0.0, 1.0, 0.0)


def _fold(fn):
    def call(*args):
        if not args:
            raise ValueError("min/max need at least one argument")
        out = args[0]
        for a in args[1:]:
            out = fn(out, a)
        return out

    return call


_FUNCTIONS = {
    "exp": (np.exp, 1, 1),
    "abs": (np.abs, 1, 1),
    "min": (_fold(np.minimum), 1, None),
    "max": (_fold(np.maximum), 1, None),
    "indicator": (_indicator, 1, 1),
}

_CONSTANTS = {"pi": math.pi, "e": math.e}


class Expression:
    """A compiled scalar expression over a fixed set of variables."""

    def __init__(self, source: str, variables: tuple[str, ...]):
        self.source = source
        self.variables = tuple(variables)
        normalized = source.replace("^", "**").replace("×", "*").replace("÷", "/")
        try:
            tree = ast.parse(normalized, mode="eval")
        except SyntaxError as exc:
            raise ConfigParse(
                f"cannot parse expression {source!r}: {exc.msg} "
                f"(line {exc.lineno}, column {exc.offset})"
            ) from None
        self._check(tree.body)
        self._code = compile(tree, f"<expr {source!r}>", "eval")
        self._globals = {"__builtins__": {}}
        self._globals.update({name: fn for name, (fn, _, _) in _FUNCTIONS.items()})
        self._globals.update(_CONSTANTS)

    def _check(self, node: ast.AST) -> None:
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _ALLOWED_BINOPS:
                raise ConfigParse(
                    f"operator {type(node.op).__name__} not allowed in {self.source!r}"
                )
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _ALLOWED_UNARY:
                raise ConfigParse(
                    f"unary {type(node.op).__name__} not allowed in {self.source!r}"
                )
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ConfigParse(f"unknown function call in {self.source!r}")
            _, lo, hi = _FUNCTIONS[node.func.id]
            if len(node.args) < lo or (hi is not None and len(node.args) > hi):
                raise ConfigParse(
                    f"{node.func.id} takes {lo}{'+' if hi is None else ''} "
                    f"argument(s) in {self.source!r}"
                )
            if node.keywords:
                raise ConfigParse(f"keyword arguments not allowed in {self.source!r}")
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTANTS:
                raise ConfigParse(
                    f"undefined identifier {node.id!r} in {self.source!r}; "
                    f"allowed variables: {', '.join(self.variables) or '(none)'}"
                )
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ConfigParse(f"non-numeric constant in {self.source!r}")
        else:
            raise ConfigParse(
                f"syntax element {type(node).__name__} not allowed in {self.source!r}"
            )

    def __call__(self, **values):
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise ValueError(f"missing variables {missing} for {self.source!r}")
        env = dict(self._globals)
        env.update({k: values[k] for k in self.variables})
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return eval(self._code, env)  # noqa: S307 - AST is whitelisted above

    def __repr__(self):
        return f"Expression({self.source!r}, variables={self.variables})"


def compile_expression(source, variables):
    """Compile ``source`` over ``variables``; numbers pass through as constants."""
    if isinstance(source, (int, float)):
        value = float(source)

        def const(**_values):
            return value

        const.source = repr(value)  # type: ignore[attr-defined]
        return const
    return Expression(str(source), tuple(variables))
