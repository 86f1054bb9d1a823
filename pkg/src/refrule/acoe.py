"""Relative value iteration for the average-cost optimality equation.

For exogenous dynamics (A = 0) the Bellman operator is

    (T h)(s) = min_z  mean_m [ c(s, clip(z, L_m, R_m)) + h(clip(z, L_m, R_m)) ]

over a frozen sample of M intervals, with h linearly interpolated off-grid.
After every sweep ``rho = min_s (T h)(s)`` is subtracted. Iteration stops once
the normalized values move by less than the tolerance in sup-norm.

The sample average is never formed by brute force. With the lower and upper
ends sorted, the intervals lying entirely above (below) z form a suffix
(prefix) of the sorted arrays, so each objective evaluation costs two binary
searches and a few prefix-sum lookups.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .costs import CostFn, Quadratic, satisfies_cost_axioms
from .intervals import DynamicsSpec, sample_exogenous_intervals
from .policies import TabulatedReference
from .simulator import PathStats, SimConfig, run

log = logging.getLogger(__name__)

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


class NotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class AcoeConfig:
    grid_size: int = 201
    noise_samples: int = 20_000
    tolerance: float = 1e-9
    max_sweeps: int = 5000
    coarse_points: int = 101
    golden_iters: int = 40
    seed: int = 0
    # reflect the noise sample about the centre of the state range (antithetic pairs)
    symmetrize: bool = False

    def __post_init__(self):
        if self.grid_size < 3:
            raise ValueError("grid_size must be >= 3")
        if self.noise_samples < 100:
            raise ValueError("noise_samples must be >= 100")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.coarse_points < 3:
            raise ValueError("coarse_points must be >= 3")
        if self.max_sweeps < 1 or self.golden_iters < 0:
            raise ValueError("max_sweeps must be >= 1 and golden_iters >= 0")


@dataclass
class ValueSolution:
    grid: np.ndarray
    h: np.ndarray
    rho: float
    targets: np.ndarray
    sweeps: int
    converged: bool
    rho_history: list = field(default_factory=list, repr=False)

    def interior_slope(self, lo: float = 0.25, hi: float = 0.75) -> float:
        """Least-squares slope of the targets over the fraction [lo, hi] of the state range."""
        a, b = self.grid[0], self.grid[-1]
        sel = (self.grid >= a + lo * (b - a)) & (self.grid <= a + hi * (b - a))
        return float(np.polyfit(self.grid[sel], self.targets[sel], 1)[0])


def _prefix(x):
    return np.concatenate([[0.0], np.cumsum(x)])


def _suffix(x):
    return np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])


class BellmanOperator:
    """Exact evaluation of the sample-average Bellman objective on a frozen interval sample."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray, grid: np.ndarray, cost: CostFn):
        self.m = lo.size
        self.grid = grid
        self.cost = cost
        self.ls = np.sort(lo)
        self.rs = np.sort(hi)
        self._quad = isinstance(cost, Quadratic)
        if self._quad:
            self.la1, self.la2 = _suffix(self.ls), _suffix(self.ls ** 2)
            self.rb1, self.rb2 = _prefix(self.rs), _prefix(self.rs ** 2)
        else:
            # sums of c(s_i, .) over suffixes of ls and prefixes of rs, one row per state
            g = grid[:, None]
            self.ca = np.concatenate([np.cumsum(cost(g, self.ls[None, ::-1]), axis=1)[:, ::-1],
                                      np.zeros((grid.size, 1))], axis=1)
            self.cb = np.concatenate([np.zeros((grid.size, 1)),
                                      np.cumsum(cost(g, self.rs[None, :]), axis=1)], axis=1)

    def _split(self, z):
        ka = np.searchsorted(self.ls, z, side="right")  # ls[ka:] > z
        kb = np.searchsorted(self.rs, z, side="left")   # rs[:kb] < z
        n_in = ka - kb  # == M - (M - ka) - kb
        return ka, kb, n_in

    def cost_term(self, i, z):
        """mean_m c(s_i, clip(z, L_m, R_m)) for state indices ``i`` and targets ``z``."""
        ka, kb, n_in = self._split(z)
        s = self.grid[i]
        if self._quad:
            na = self.m - ka
            sa = self.la2[ka] - 2 * s * self.la1[ka] + na * s * s
            sb = self.rb2[kb] - 2 * s * self.rb1[kb] + kb * s * s
            inside = n_in * (z - s) ** 2
        else:
            sa = self.ca[i, ka]
            sb = self.cb[i, kb]
            inside = n_in * self.cost(s, z)
        return (sa + sb + inside) / self.m

    def value_tables(self, h):
        hl = np.interp(self.ls, self.grid, h)
        hr = np.interp(self.rs, self.grid, h)
        return _suffix(hl), _prefix(hr)

    def value_term(self, z, h, tables=None):
        """mean_m h(clip(z, L_m, R_m)) with h interpolated linearly on the grid."""
        ha, hb = tables if tables is not None else self.value_tables(h)
        ka, kb, n_in = self._split(z)
        return (ha[ka] + hb[kb] + n_in * np.interp(z, self.grid, h)) / self.m

    def objective(self, i, z, h, tables=None):
        return self.cost_term(i, z) + self.value_term(z, h, tables)


def _golden(f, a, b, iters):
    """Vectorized golden-section minimization of ``f`` over brackets [a, b]."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + _INV_PHI * (b - a))
        c_new = np.where(left, b - _INV_PHI * (b - a), d)
        fd_new = np.where(left, fc, np.nan)
        fc_new = np.where(left, np.nan, fd)
        c, d = c_new, d_new
        # one fresh evaluation per state
        fresh = f(np.where(left, c, d))
        fc = np.where(left, fresh, fc_new)
        fd = np.where(left, fd_new, fresh)
    z = np.where(fc < fd, c, d)
    return z, np.minimum(fc, fd)


def _noise(dynamics, state_range, cfg):
    s_min, s_max = state_range
    rng = np.random.default_rng(cfg.seed)
    if cfg.symmetrize:
        lo, hi = sample_exogenous_intervals(dynamics, rng, (cfg.noise_samples + 1) // 2)
        c2 = s_min + s_max
        lo, hi = np.concatenate([lo, c2 - hi]), np.concatenate([hi, c2 - lo])
        lo, hi = lo[: cfg.noise_samples], hi[: cfg.noise_samples]
    else:
        lo, hi = sample_exogenous_intervals(dynamics, rng, cfg.noise_samples)
    if lo.min() < s_min or hi.max() > s_max:
        raise ValueError(
            f"sampled intervals leave the state range [{s_min}, {s_max}]: "
            f"observed [{lo.min():.6g}, {hi.max():.6g}]")
    return lo, hi


def solve(dynamics: DynamicsSpec, state_range=(0.0, 1.0), cost: CostFn = Quadratic(),
          cfg: AcoeConfig = AcoeConfig()) -> ValueSolution:
    """Optimal average cost and target function for exogenous interval dynamics."""
    if dynamics.random_walk or not dynamics.exogenous:
        raise ValueError("ACOE solver requires exogenous dynamics (a = const(0))")
    if not satisfies_cost_axioms(cost):
        raise ValueError(f"cost {cost} is not an adjustment cost")
    s_min, s_max = map(float, state_range)
    if not s_min < s_max:
        raise ValueError("state range must have s_min < s_max")
    log.info("solve-acoe: dynamics=%s range=%s cost=%s cfg=%s", dynamics, state_range, cost, cfg)

    lo, hi = _noise(dynamics, (s_min, s_max), cfg)
    grid = np.linspace(s_min, s_max, cfg.grid_size)
    op = BellmanOperator(lo, hi, grid, cost)
    n = grid.size
    idx = np.arange(n)

    zc = np.linspace(s_min, s_max, cfg.coarse_points)
    # the immediate-cost part of the coarse scan does not depend on h
    ii, jj = np.meshgrid(idx, np.arange(zc.size), indexing="ij")
    coarse_cost = op.cost_term(ii, zc[jj])

    h = np.zeros(n)
    targets = np.full(n, 0.5 * (s_min + s_max))
    rho = np.nan
    history = []
    converged = False
    sweep = 0
    for sweep in range(1, cfg.max_sweeps + 1):
        tables = op.value_tables(h)
        jc = coarse_cost + op.value_term(zc, h, tables)[None, :]
        best = np.argmin(jc, axis=1)
        jbest = jc[idx, best]
        a = zc[np.maximum(best - 1, 0)]
        b = zc[np.minimum(best + 1, zc.size - 1)]
        zg, jg = _golden(lambda z: op.objective(idx, z, h, tables), a, b, cfg.golden_iters)
        use_g = jg < jbest
        h_new = np.where(use_g, jg, jbest)
        targets = np.where(use_g, zg, zc[best])

        rho = float(h_new.min())
        h_norm = h_new - rho
        delta = float(np.max(np.abs(h_norm - h)))
        h = h_norm
        history.append(rho)
        if delta < cfg.tolerance:
            converged = True
            break
    log.info("solve-acoe: rho=%.10g sweeps=%d converged=%s", rho, sweep, converged)
    return ValueSolution(grid, h, rho, targets, sweep, converged, history)


def policy_from(sol: ValueSolution, force: bool = False) -> TabulatedReference:
    if not sol.converged and not force:
        raise NotConvergedError("value iteration did not converge; pass force=True to use it anyway")
    return TabulatedReference(sol.grid, sol.targets, label="acoe")


def evaluate_solution(dynamics: DynamicsSpec, sol: ValueSolution, cost: CostFn = Quadratic(),
                      cfg: SimConfig = SimConfig(), threads: Optional[int] = None,
                      force: bool = False) -> PathStats:
    """Simulate the solved target rule; its average cost should match ``sol.rho``."""
    return run(dynamics, policy_from(sol, force), cost, cfg, threads=threads, histogram=False)
