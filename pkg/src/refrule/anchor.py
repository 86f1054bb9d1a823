"""Variance-minimizing constant target for exogenous interval dynamics.

The optimal anchor z* solves the balance condition

    psi(z) = E[(L - z) 1{L > z}] + E[(R - z) 1{R < z}] = 0,

the first-order condition of J(z) = E[(clip(z, L, R) - z)^2]. ``psi`` is
nonincreasing, so bisection on a fixed sample (common random numbers) finds
the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import uniform
from .intervals import Constant, DynamicsSpec, Interval, OrderStatsUniform, sample_exogenous_intervals


class NoSignChangeError(RuntimeError):
    pass


def _require_exogenous(dynamics: DynamicsSpec):
    if dynamics.random_walk or not dynamics.exogenous:
        raise ValueError("balance condition applies only to exogenous dynamics (a = const(0))")


def _is_unit_benchmark(dynamics: DynamicsSpec) -> bool:
    return dynamics.b_dist == Constant(0.0) and dynamics.base == OrderStatsUniform(0.0, 1.0)


def draw_intervals(dynamics: DynamicsSpec, n_samples: int, seed: int):
    _require_exogenous(dynamics)
    return sample_exogenous_intervals(dynamics, np.random.default_rng(seed), n_samples)


def _psi_terms(lo, hi, z):
    return np.where(lo > z, lo - z, 0.0) + np.where(hi < z, hi - z, 0.0)


def balance_residual_mc(dynamics: DynamicsSpec, z: float, n_samples: int = 1_000_000,
                        seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of psi(z) and its standard error."""
    lo, hi = draw_intervals(dynamics, n_samples, seed)
    t = _psi_terms(lo, hi, z)
    return float(t.mean()), float(t.std(ddof=1) / math.sqrt(t.size))


def balance_residual(dynamics: DynamicsSpec, z: float, n_samples: int = 1_000_000, seed: int = 0) -> float:
    """psi(z); exact for the unit uniform benchmark, Monte Carlo otherwise."""
    _require_exogenous(dynamics)
    if _is_unit_benchmark(dynamics):
        return uniform.balance_residual(z)
    return balance_residual_mc(dynamics, z, n_samples, seed)[0]


@dataclass(frozen=True)
class AnchorSolution:
    z_star: float
    variance_at_z: float
    flat_interval: Optional[Interval]
    residual: float
    iterations: int

    def to_dict(self) -> dict:
        d = {"z_star": self.z_star, "variance": self.variance_at_z, "residual": self.residual}
        if self.flat_interval is not None:
            d["flat_interval"] = [self.flat_interval.lo, self.flat_interval.hi]
        return d


def solve_anchor(dynamics: DynamicsSpec, tol: float = 1e-6, n_samples: int = 1_000_000,
                 seed: int = 0, max_iter: int = 200) -> AnchorSolution:
    lo, hi = draw_intervals(dynamics, n_samples, seed)
    left, right = float(lo.max()), float(hi.min())
    if left < right:
        # every sampled interval contains [left, right]: psi vanishes there
        z = 0.5 * (left + right)
        return AnchorSolution(z, _variance(lo, hi, z), Interval(left, right), 0.0, 0)

    psi = lambda z: float(_psi_terms(lo, hi, z).mean())
    a, b = float(lo.min()), float(hi.max())
    fa, fb = psi(a), psi(b)
    if fa < 0 or fb > 0:
        raise NoSignChangeError(f"psi has no sign change on [{a}, {b}]: psi(a)={fa}, psi(b)={fb}")
    z, fz = a, fa
    it = 0
    for it in range(1, max_iter + 1):
        z = 0.5 * (a + b)
        fz = psi(z)
        if abs(fz) < tol or b - a < 1e-14:
            break
        if fz > 0:
            a = z
        else:
            b = z
    return AnchorSolution(z, _variance(lo, hi, z), None, fz, it)


def _variance(lo, hi, z):
    d = np.clip(z, lo, hi) - z
    return float(np.mean(d * d))


def anchor_loss(dynamics: DynamicsSpec, zs, n_samples: int = 200_000, seed: int = 0) -> np.ndarray:
    """J(z) = E[(clip(z, L, R) - z)^2] on a common sample, for each z in ``zs``."""
    lo, hi = draw_intervals(dynamics, n_samples, seed)
    return np.array([_variance(lo, hi, z) for z in np.atleast_1d(zs)])


def self_consistency_check(dynamics: DynamicsSpec, z: float, n_samples: int = 1_000_000,
                           seed: int = 0) -> tuple[float, float]:
    """|z - E[clip(z, L, R)]| and the standard error of the mean."""
    lo, hi = draw_intervals(dynamics, n_samples, seed)
    p = np.clip(z, lo, hi)
    return float(abs(z - p.mean())), float(p.std(ddof=1) / math.sqrt(p.size))
