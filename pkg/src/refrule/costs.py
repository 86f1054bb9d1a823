"""Adjustment costs c(x, y) for moving the action from x to y."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Quadratic:
    def __call__(self, x, y):
        d = np.subtract(y, x)
        return d * d

    def __str__(self):
        return "quad"


@dataclass(frozen=True)
class PseudoHuber:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"huber delta must be > 0, got {self.delta}")

    def __call__(self, x, y):
        r = np.subtract(y, x) / self.delta
        return self.delta ** 2 * (np.sqrt(1.0 + r * r) - 1.0)

    def __str__(self):
        return f"huber({self.delta!r})"


@dataclass(frozen=True)
class AsymmetricQuadratic:
    """Quadratic with weight ``lam_minus`` on downward and ``lam_plus`` on upward moves.

    C1 but not C2 at zero increment.
    """

    lam_minus: float
    lam_plus: float

    def __post_init__(self):
        if not (self.lam_minus > 0 and self.lam_plus > 0):
            raise ValueError("asym weights must both be > 0")

    def __call__(self, x, y):
        d = np.subtract(y, x)
        return np.where(d < 0, self.lam_minus, self.lam_plus) * d * d

    def __str__(self):
        return f"asym({self.lam_minus!r},{self.lam_plus!r})"


@dataclass(frozen=True)
class SquaredDistanceTo:
    """(y - M)^2. Charges for inaction, so it is only valid as a variance objective."""

    m: float

    def __call__(self, x, y):
        d = np.subtract(y, self.m) + 0.0 * np.asarray(x)
        return d * d

    def __str__(self):
        return f"sqdist({self.m!r})"


CostFn = Union[Quadratic, PseudoHuber, AsymmetricQuadratic, SquaredDistanceTo]


def eval_cost(cost: CostFn, x, y):
    out = cost(x, y)
    return float(out) if np.ndim(out) == 0 else out


def is_translation_invariant(cost: CostFn) -> bool:
    return isinstance(cost, (Quadratic, PseudoHuber, AsymmetricQuadratic))


def satisfies_cost_axioms(cost: CostFn) -> bool:
    """Whether ``cost`` is an admissible adjustment cost (zero cost for inaction)."""
    return not isinstance(cost, SquaredDistanceTo)


def check_axioms(cost: CostFn, grid, rtol: float = 1e-8) -> list[str]:
    """Return the list of violated axioms on ``grid`` (empty when all hold).

    Checks zero cost for inaction, monotone growth of c(x, .) away from x and
    convexity of c(x, .) via second differences.
    """
    g = np.sort(np.asarray(grid, dtype=float))
    if g.size < 3:
        raise ValueError("grid needs at least 3 points")
    violations = []
    scale = max(1.0, float(np.max(np.abs(cost(g[:, None], g[None, :])))))
    tol = rtol * scale
    for x in g:
        cxx = float(cost(x, x))
        if abs(cxx) > tol:
            violations.append(f"inaction cost nonzero at x={x:g}")
        vals = np.asarray(cost(x, g), dtype=float)
        right = vals[g >= x]
        left = vals[g <= x]
        if np.any(np.diff(right) < -tol) or np.any(np.diff(left[::-1]) < -tol):
            violations.append(f"not increasing away from x={x:g}")
        # second differences on a possibly non-uniform grid
        h1 = np.diff(g)
        slopes = np.diff(vals) / h1
        if np.any(np.diff(slopes) < -tol * (1.0 / h1[:-1] + 1.0 / h1[1:])):
            violations.append(f"not convex in y at x={x:g}")
    return violations


_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_cost(text: str) -> CostFn:
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse cost {text!r}")
    name, args = m.group(1), m.group(2)
    vals = [] if not args else [float(a) for a in args.split(",")]
    if name == "quad" and not vals:
        return Quadratic()
    if name == "huber" and len(vals) == 1:
        return PseudoHuber(*vals)
    if name == "asym" and len(vals) == 2:
        return AsymmetricQuadratic(*vals)
    if name == "sqdist" and len(vals) == 1:
        return SquaredDistanceTo(*vals)
    raise ValueError(f"unknown cost {text!r}; expected quad, huber(d), asym(lm,lp) or sqdist(M)")
