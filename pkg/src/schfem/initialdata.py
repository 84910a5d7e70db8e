"""Built-in initial data for the experiment suite.

All profiles are tanh transition layers whose width scales with the
interface parameter epsilon; the zero-level set of each is the named curve.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ConfigError

SQRT2 = math.sqrt(2.0)


class CircleDatum:
    """tanh((x^2 + y^2 - 0.6^2) / (sqrt(2) eps)): circular interface, radius 0.6."""

    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    def __call__(self, x, y):
        return np.tanh((x * x + y * y - 0.36) / (SQRT2 * self.epsilon))


class EllipseDatum:
    """tanh((sqrt((x/0.7)^2 + (y/0.65)^2) - 1) / (sqrt(2) eps)): elliptic interface."""

    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    def __call__(self, x, y):
        r = np.sqrt((x / 0.7) ** 2 + (y / 0.65) ** 2)
        return np.tanh((r - 1.0) / (SQRT2 * self.epsilon))


class CrossDatum:
    """Product of two crossed elliptic distance factors inside the tanh."""

    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    def __call__(self, x, y):
        a = np.sqrt(x * x / 0.7 + y * y / 0.1) - 1.0
        b = np.sqrt(x * x / 0.1 + y * y / 0.7) - 1.0
        return np.tanh(a * b / (SQRT2 * self.epsilon))


class ConstantDatum:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, x, y):
        return np.full_like(np.asarray(x, dtype=np.float64), self.value)


_EXPR_NAMESPACE = {
    "np": np, "pi": math.pi, "e": math.e,
    "sqrt": np.sqrt, "tanh": np.tanh, "exp": np.exp, "log": np.log,
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "abs": np.abs,
    "minimum": np.minimum, "maximum": np.maximum,
}


class ExpressionDatum:
    """Datum from a numpy expression in x and y, e.g. "tanh((x**2+y**2-0.36)/0.14)"."""

    def __init__(self, expression: str):
        self.expression = expression
        try:
            compile(expression, "<initial datum>", "eval")
        except SyntaxError as exc:
            raise ConfigError(f"bad initial expression: {exc}") from exc

    def __call__(self, x, y):
        # Compiled on use so instances stay picklable for worker processes.
        namespace = dict(_EXPR_NAMESPACE, x=x, y=y)
        return eval(self.expression, {"__builtins__": {}}, namespace)


def make_initial(name: str, epsilon: float | None = None,
                 constant: float | None = None,
                 expression: str | None = None) -> Callable:
    """Initial-datum selector used by configs and presets."""
    if name == "test1_circle":
        return CircleDatum(_require_eps(name, epsilon))
    if name == "test2_ellipse":
        return EllipseDatum(_require_eps(name, epsilon))
    if name == "test3_cross":
        return CrossDatum(_require_eps(name, epsilon))
    if name == "constant":
        if constant is None:
            raise ConfigError("initial 'constant' requires initial_constant")
        return ConstantDatum(constant)
    if name == "expression":
        if not expression:
            raise ConfigError("initial 'expression' requires initial_expression")
        return ExpressionDatum(expression)
    raise ConfigError(
        f"unknown initial datum '{name}'; choose from test1_circle, "
        "test2_ellipse, test3_cross, constant, expression")


def _require_eps(name: str, epsilon: float | None) -> float:
    if epsilon is None or epsilon <= 0:
        raise ConfigError(f"initial '{name}' needs a positive epsilon")
    return float(epsilon)
