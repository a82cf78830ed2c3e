import math
import random

import numpy as np
import pytest

from nonlocal_spectra.expressions import Expression, compile_expression
from nonlocal_spectra.errors import ConfigParse


def test_arithmetic_and_power():
    e = Expression("x^2 + 3*x - 1/2", ("x",))
    assert e(x=2.0) == pytest.approx(4 + 6 - 0.5)


def test_unicode_operators():
    e = Expression("2×x ÷ 4", ("x",))
    assert e(x=6.0) == pytest.approx(3.0)


def test_functions():
    e = Expression("exp(-abs(x)) + max(x, 0) + min(x, 0, -1) + indicator(x)",
                   ("x",))
    assert e(x=2.0) == pytest.approx(math.exp(-2) + 2 - 1 + 1)
    assert e(x=-3.0) == pytest.approx(math.exp(-3) + 0 - 3 + 0)


def test_constants():
    e = Expression("pi + e", ())
    assert e() == pytest.approx(math.pi + math.e)


def test_vectorized():
    e = Expression("indicator(1 - abs(x)) * x^2", ("x",))
    x = np.array([-2.0, -0.5, 0.5, 2.0])
    assert np.allclose(e(x=x), [0.0, 0.25, 0.25, 0.0])


def test_undefined_identifier_rejected():
    with pytest.raises(ConfigParse):
        Expression("x + y", ("x",))


def test_unknown_function_rejected():
    with pytest.raises(ConfigParse):
        Expression("sin(x)", ("x",))


def test_attribute_access_rejected():
    with pytest.raises(ConfigParse):
        Expression("x.__class__", ("x",))


def test_syntax_error_reports_location():
    with pytest.raises(ConfigParse) as err:
        Expression("x + ", ("x",))
    assert "column" in str(err.value)


def test_numeric_passthrough():
    const = compile_expression(2.5, ("x",))
    assert const(x=123.0) == 2.5


# -- randomized agreement with an independent reference evaluator -----------------

_BIN = ["+", "-", "*", "/", "^"]
_FN1 = ["exp", "abs", "indicator"]


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(["x", "y", str(round(rng.uniform(-3, 3), 3))])
    kind = rng.random()
    if kind < 0.55:
        op = rng.choice(_BIN)
        return f"({_random_expr(rng, depth - 1)} {op} " \
               f"{_random_expr(rng, depth - 1)})"
    if kind < 0.8:
        fn = rng.choice(_FN1)
        return f"{fn}({_random_expr(rng, depth - 1)})"
    fn = rng.choice(["min", "max"])
    return f"{fn}({_random_expr(rng, depth - 1)}, " \
           f"{_random_expr(rng, depth - 1)})"


def _reference_eval(src, x, y):
    """Independent reference: plain Python floats, math functions."""
    env = {
        "x": x, "y": y, "exp": math.exp, "abs": abs, "min": min, "max": max,
        "indicator": lambda t: 1.0 if t > 0 else 0.0,
        "pi": math.pi, "e": math.e, "__builtins__": {},
    }
    return eval(src.replace("^", "**"), env)  # noqa: S307 - test-local reference


def test_matches_reference_on_random_expressions():
    rng = random.Random(20240811)
    checked = 0
    while checked < 1000:
        src = _random_expr(rng, 4)
        x = rng.uniform(-4, 4)
        y = rng.uniform(-4, 4)
        try:
            expected = _reference_eval(src, x, y)
        except (OverflowError, ZeroDivisionError, ValueError, TypeError):
            continue  # complex powers or division blowups: not comparable
        if not isinstance(expected, float) or not math.isfinite(expected):
            continue
        compiled = Expression(src, ("x", "y"))
        got = float(compiled(x=x, y=y))
        assert got == pytest.approx(expected, rel=4e-15, abs=5e-307), src
        checked += 1
