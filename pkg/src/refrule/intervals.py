"""Feasible-interval dynamics.

The feasible set in period t is ``[A*prev + B + U, A*prev + B + V]`` where
``(A, B)`` are i.i.d. coefficients and ``[U, V]`` is an i.i.d. base interval.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"invalid interval: lo={self.lo} > hi={self.hi}")

    def shifted(self, c: float) -> "Interval":
        return Interval(self.lo + c, self.hi + c)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def project(iv: Interval, x: float) -> float:
    """Closest point of ``iv`` to ``x``."""
    return min(max(x, iv.lo), iv.hi)


# ---------------------------------------------------------------------------
# scalar laws


@dataclass(frozen=True)
class Constant:
    c: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, float(self.c))

    def abs_moment(self, p: float) -> float:
        return abs(self.c) ** p

    def mean(self) -> float:
        return float(self.c)

    def __str__(self):
        return f"const({_fmt(self.c)})"


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not self.a <= self.b:
            raise ValueError(f"uniform({self.a},{self.b}) requires a <= b")

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, n)

    def abs_moment(self, p):
        a, b = self.a, self.b
        if a == b:
            return abs(a) ** p
        # antiderivative of |x|^p is x|x|^p / (p+1)
        return (b * abs(b) ** p - a * abs(a) ** p) / ((p + 1) * (b - a))

    def mean(self):
        return 0.5 * (self.a + self.b)

    def __str__(self):
        return f"uniform({_fmt(self.a)},{_fmt(self.b)})"


@dataclass(frozen=True)
class Normal:
    mean_: float
    sd: float

    def __post_init__(self):
        if not self.sd >= 0:
            raise ValueError(f"normal sd must be >= 0, got {self.sd}")

    def sample(self, rng, n):
        return rng.normal(self.mean_, self.sd, n)

    def abs_moment(self, p):
        return None

    def mean(self):
        return float(self.mean_)

    def __str__(self):
        return f"normal({_fmt(self.mean_)},{_fmt(self.sd)})"


@dataclass(frozen=True)
class TwoPoint:
    x1: float
    p1: float
    x2: float

    def __post_init__(self):
        if not 0.0 <= self.p1 <= 1.0:
            raise ValueError(f"twopoint p1 must lie in [0,1], got {self.p1}")

    def sample(self, rng, n):
        return np.where(rng.random(n) < self.p1, float(self.x1), float(self.x2))

    def abs_moment(self, p):
        return self.p1 * abs(self.x1) ** p + (1 - self.p1) * abs(self.x2) ** p

    def mean(self):
        return self.p1 * self.x1 + (1 - self.p1) * self.x2

    def __str__(self):
        return f"twopoint({_fmt(self.x1)},{_fmt(self.p1)},{_fmt(self.x2)})"


ScalarDist = Union[Constant, Uniform, Normal, TwoPoint]


# ---------------------------------------------------------------------------
# base intervals


@dataclass(frozen=True)
class OrderStatsUniform:
    """Min and max of two i.i.d. uniform draws on [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a <= self.b:
            raise ValueError(f"orderstats({self.a},{self.b}) requires a <= b")

    def sample(self, rng, n):
        x = rng.uniform(self.a, self.b, (2, n))
        return np.minimum(x[0], x[1]), np.maximum(x[0], x[1])

    def __str__(self):
        return f"orderstats({_fmt(self.a)},{_fmt(self.b)})"


@dataclass(frozen=True)
class IndependentSorted:
    du: ScalarDist
    dv: ScalarDist

    def sample(self, rng, n):
        x = self.du.sample(rng, n)
        y = self.dv.sample(rng, n)
        return np.minimum(x, y), np.maximum(x, y)

    def __str__(self):
        return f"sorted({self.du};{self.dv})"


@dataclass(frozen=True)
class FixedWidth:
    center: ScalarDist
    width: float

    def __post_init__(self):
        if not self.width >= 0:
            raise ValueError(f"width must be >= 0, got {self.width}")

    def sample(self, rng, n):
        c = self.center.sample(rng, n)
        half = 0.5 * self.width
        return c - half, c + half

    def __str__(self):
        return f"width({self.center};{_fmt(self.width)})"


BaseIntervalDist = Union[OrderStatsUniform, IndependentSorted, FixedWidth]


@dataclass(frozen=True)
class DynamicsSpec:
    a_dist: ScalarDist
    b_dist: ScalarDist
    base: BaseIntervalDist
    p: float = 2.0
    random_walk: bool = False

    def __post_init__(self):
        if not self.p >= 2:
            raise ValueError(f"moment order p must be >= 2, got {self.p}")
        if self.random_walk and self.a_dist != Constant(1.0):
            raise ValueError("random_walk requires a = const(1)")

    @property
    def exogenous(self) -> bool:
        return self.a_dist == Constant(0.0)


@dataclass(frozen=True)
class Noise:
    """Pre-drawn period shocks; interval in period t is a[t]*prev + b[t] + [u[t], v[t]]."""

    a: np.ndarray
    b: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __len__(self):
        return len(self.a)


def draw_noise(spec: DynamicsSpec, rng: np.random.Generator, n: int) -> Noise:
    # components are drawn independently, in a fixed order: A, B, base
    a = spec.a_dist.sample(rng, n)
    b = spec.b_dist.sample(rng, n)
    u, v = spec.base.sample(rng, n)
    return Noise(a, b, u, v)


def sample_interval(spec: DynamicsSpec, prev_action: float, rng: np.random.Generator) -> Interval:
    nz = draw_noise(spec, rng, 1)
    shift = nz.a[0] * prev_action + nz.b[0]
    return Interval(shift + nz.u[0], shift + nz.v[0])


def sample_exogenous_intervals(spec: DynamicsSpec, rng: np.random.Generator, n: int):
    """Arrays (lo, hi) of ``n`` intervals for dynamics with A identically zero."""
    if not spec.exogenous or spec.random_walk:
        raise ValueError("dynamics are not exogenous (a must be const(0))")
    nz = draw_noise(spec, rng, n)
    return nz.b + nz.u, nz.b + nz.v


@dataclass(frozen=True)
class StabilityReport:
    moment_estimate: float
    standard_error: float
    passes: bool
    closed_form: bool


def stability_check(spec: DynamicsSpec, n_samples: int = 100_000, seed: int = 0) -> StabilityReport:
    """Check E|A|^p < 1, with a 3-standard-error margin when sampled."""
    if spec.random_walk:
        raise ValueError("stability check does not apply to random-walk dynamics")
    if n_samples < 10_000:
        raise ValueError("n_samples must be >= 1e4")
    exact = spec.a_dist.abs_moment(spec.p)
    if exact is not None:
        return StabilityReport(float(exact), 0.0, bool(exact < 1.0), True)
    rng = np.random.default_rng(seed)
    m = np.abs(spec.a_dist.sample(rng, n_samples)) ** spec.p
    est = float(m.mean())
    se = float(m.std(ddof=1) / math.sqrt(n_samples))
    return StabilityReport(est, se, bool(est + 3 * se < 1.0), False)


def uniform_benchmark() -> DynamicsSpec:
    return DynamicsSpec(Constant(0.0), Constant(0.0), OrderStatsUniform(0.0, 1.0), p=2.0)


def random_walk(base: Optional[BaseIntervalDist] = None, drift: Optional[ScalarDist] = None) -> DynamicsSpec:
    return DynamicsSpec(
        Constant(1.0),
        drift if drift is not None else Constant(0.0),
        base if base is not None else OrderStatsUniform(-0.5, 0.5),
        p=2.0,
        random_walk=True,
    )


# ---------------------------------------------------------------------------
# config syntax: const(c), uniform(a,b), normal(m,s), twopoint(x1,p1,x2),
# orderstats(a,b), sorted(d1;d2), width(center;w)

_CALL = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def _fmt(x: float) -> str:
    return repr(float(x))


def _split_call(text: str):
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"expected name(args), got {text!r}")
    return m.group(1), m.group(2)


def _split_top(args: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in args:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _floats(args: str, n: int, name: str) -> list[float]:
    parts = _split_top(args, ",")
    if len(parts) != n or any(not p for p in parts):
        raise ValueError(f"{name}() takes {n} numeric argument(s), got {args!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"{name}(): non-numeric argument in {args!r}") from None


def parse_scalar_dist(text: str) -> ScalarDist:
    name, args = _split_call(text)
    if name == "const":
        return Constant(*_floats(args, 1, name))
    if name == "uniform":
        return Uniform(*_floats(args, 2, name))
    if name == "normal":
        return Normal(*_floats(args, 2, name))
    if name == "twopoint":
        return TwoPoint(*_floats(args, 3, name))
    raise ValueError(f"unknown scalar distribution {name!r}")


def parse_base_dist(text: str) -> BaseIntervalDist:
    name, args = _split_call(text)
    if name == "orderstats":
        return OrderStatsUniform(*_floats(args, 2, name))
    if name in ("sorted", "width"):
        parts = _split_top(args, ";")
        if len(parts) != 2:
            raise ValueError(f"{name}() takes two ';'-separated arguments, got {args!r}")
        if name == "sorted":
            return IndependentSorted(parse_scalar_dist(parts[0]), parse_scalar_dist(parts[1]))
        try:
            w = float(parts[1])
        except ValueError:
            raise ValueError(f"width(): non-numeric width {parts[1]!r}") from None
        return FixedWidth(parse_scalar_dist(parts[0]), w)
    raise ValueError(f"unknown base interval distribution {name!r}")


def dynamics_to_dict(spec: DynamicsSpec) -> dict:
    return {
        "a": str(spec.a_dist),
        "b": str(spec.b_dist),
        "base": str(spec.base),
        "p": spec.p,
        "random_walk": spec.random_walk,
    }
