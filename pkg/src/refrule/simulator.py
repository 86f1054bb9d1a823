"""Seeded Monte Carlo evaluation of policies under interval dynamics.

Each replication draws its shocks from ``SeedSequence([seed, replication])``,
so results do not depend on how replications are scheduled across threads.
Estimates are pooled over replications; standard errors come from the spread
across replications (batch means within the single path when there is one).
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .costs import CostFn, Quadratic
from .intervals import DynamicsSpec, Noise, draw_noise, stability_check
from .policies import Anchor, ConvexCombination, Policy, StatusQuo, TabulatedReference

log = logging.getLogger(__name__)

ATOM_THRESHOLD = 0.01
_N_BATCHES = 20


class UnstableDynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    steps: int = 100_000
    burnin: Optional[int] = None  # None -> 10% of steps
    replications: int = 1
    seed: int = 0
    initial_action: Union[float, str] = "auto"
    bins: int = 200

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        b = self.n_burnin
        if b < 0 or b >= self.steps:
            raise ValueError(f"burnin must satisfy 0 <= burnin < steps, got {b}")
        if isinstance(self.initial_action, str) and self.initial_action != "auto":
            raise ValueError("initial_action must be a number or 'auto'")

    @property
    def n_burnin(self) -> int:
        return self.steps // 10 if self.burnin is None else self.burnin


@dataclass
class Histogram:
    edges: np.ndarray
    masses: np.ndarray
    atoms: list = field(default_factory=list)  # (location, mass)

    def cdf_at_edges(self) -> np.ndarray:
        """Empirical CDF (bins plus atoms) evaluated at every bin edge."""
        cont = np.concatenate([[0.0], np.cumsum(self.masses)])
        for loc, mass in self.atoms:
            cont = cont + mass * (self.edges >= loc)
        return cont

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum() + sum(m for _, m in self.atoms))


@dataclass
class PathStats:
    policy: str
    mean: float
    variance: float
    qv: float
    avg_cost: float
    pth_moment: float
    p: float
    se: dict
    n_samples: int
    diverged: bool = False
    histogram: Optional[Histogram] = None
    path: Optional[dict] = None

    @property
    def atom_report(self) -> list:
        return [] if self.histogram is None else self.histogram.atoms

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "mean": self.mean,
            "variance": self.variance,
            "qv": self.qv,
            "avg_cost": self.avg_cost,
            "pth_moment": self.pth_moment,
            "p": self.p,
            "standard_errors": dict(self.se),
            "n_samples": self.n_samples,
            "diverged": self.diverged,
            "atoms": [{"location": a, "mass": m} for a, m in self.atom_report],
        }


# ---------------------------------------------------------------------------
# path kernel

_COMBO, _ANCHOR, _STATUS_QUO, _TABLE = 0, 1, 2, 3


@njit(nogil=True, cache=True)
def _path_kernel(a, b, u, v, p0, kind, param, grid, targets, act, lo_out, hi_out, keep_bounds):
    prev = p0
    act[0] = p0
    for t in range(a.shape[0]):
        shift = a[t] * prev + b[t]
        lo = shift + u[t]
        hi = shift + v[t]
        if kind == 0:
            x = (1.0 - param) * lo + param * hi
        else:
            if kind == 1:
                tgt = param
            elif kind == 2:
                tgt = prev
            else:
                tgt = np.interp(prev, grid, targets)
            x = min(max(tgt, lo), hi)
        act[t + 1] = x
        if keep_bounds:
            lo_out[t] = lo
            hi_out[t] = hi
        prev = x


_EMPTY = np.empty(0)


def _encode(policy: Policy):
    if isinstance(policy, ConvexCombination):
        return _COMBO, float(policy.k), _EMPTY, _EMPTY
    if isinstance(policy, Anchor):
        return _ANCHOR, float(policy.z), _EMPTY, _EMPTY
    if isinstance(policy, StatusQuo):
        return _STATUS_QUO, 0.0, _EMPTY, _EMPTY
    if isinstance(policy, TabulatedReference):
        return _TABLE, 0.0, policy.grid, policy.targets
    raise TypeError(f"unsupported policy {policy!r}")


def replication_noise(dynamics: DynamicsSpec, cfg: SimConfig, rep: int) -> Noise:
    """Shocks for replication ``rep``; entry 0 only seeds the automatic initial action."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, rep]))
    return draw_noise(dynamics, rng, cfg.steps + 1)


def initial_action(noise: Noise, cfg: SimConfig) -> float:
    if cfg.initial_action == "auto":
        # midpoint of the first interval, drawn with previous action 0
        return float(noise.b[0] + 0.5 * (noise.u[0] + noise.v[0]))
    return float(cfg.initial_action)


def simulate_path(policy: Policy, noise: Noise, p0: float, keep_bounds: bool = False):
    """Run ``policy`` over the shocks ``noise[1:]``; returns (actions, lo, hi).

    ``actions[0]`` is ``p0`` and ``actions[t]`` is the period-t action.
    """
    kind, param, grid, targets = _encode(policy)
    n = len(noise) - 1
    act = np.empty(n + 1)
    lo = np.empty(n if keep_bounds else 0)
    hi = np.empty(n if keep_bounds else 0)
    _path_kernel(noise.a[1:], noise.b[1:], noise.u[1:], noise.v[1:], p0, kind, param,
                 grid, targets, act, lo, hi, keep_bounds)
    return act, (lo if keep_bounds else None), (hi if keep_bounds else None)


# ---------------------------------------------------------------------------
# statistics


def _moments(x, prev, cost: CostFn, p: float) -> np.ndarray:
    d = x - prev
    return np.array([
        x.mean(),
        (x * x).mean(),
        (d * d).mean(),
        np.asarray(cost(prev, x)).mean(),
        (np.abs(x) ** p).mean(),
    ])


def _se(rows: np.ndarray) -> np.ndarray:
    # rows: (k, 5) of [mean, E x^2, qv, cost, |x|^p] per replication/batch
    k = rows.shape[0]
    var = rows[:, 1] - rows[:, 0] ** 2
    cols = np.column_stack([rows[:, 0], var, rows[:, 2], rows[:, 3], rows[:, 4]])
    if k < 2:
        return np.full(5, np.nan)
    return cols.std(axis=0, ddof=1) / math.sqrt(k)


def _batch_rows(x, prev, cost, p, n_batches=_N_BATCHES) -> np.ndarray:
    idx = np.array_split(np.arange(x.size), min(n_batches, max(x.size, 1)))
    return np.array([_moments(x[i], prev[i], cost, p) for i in idx if i.size])


def _stats_from_rows(label, rows, se_rows, p, n, diverged) -> PathStats:
    m = rows.mean(axis=0)
    with np.errstate(invalid="ignore", over="ignore"):
        se = _se(se_rows)
    names = ["mean", "variance", "qv", "avg_cost", "pth_moment"]
    return PathStats(
        policy=label,
        mean=float(m[0]),
        variance=float(max(m[1] - m[0] * m[0], 0.0)) if np.all(np.isfinite(m[:2])) else math.nan,
        qv=float(m[2]),
        avg_cost=float(m[3]),
        pth_moment=float(m[4]),
        p=p,
        se={k: float(s) for k, s in zip(names, se)},
        n_samples=n,
        diverged=diverged,
    )


def find_atoms(x: np.ndarray, threshold: float = ATOM_THRESHOLD) -> list:
    """Values whose exact floating representation recurs with frequency above ``threshold``."""
    n = x.size
    if n == 0:
        return []
    probe = x[: min(n, 200_000)]
    vals, counts = np.unique(probe, return_counts=True)
    cands = vals[counts > 0.5 * threshold * probe.size]
    atoms = []
    for c in cands:
        mass = float(np.count_nonzero(x == c)) / n
        if mass > threshold:
            atoms.append((float(c), mass))
    return atoms


def build_histogram(x: np.ndarray, bins: int = 200, atoms: Optional[list] = None) -> Histogram:
    n = x.size
    if atoms is None:
        atoms = find_atoms(x)
    rest = x
    for loc, _ in atoms:
        rest = rest[rest != loc]
    if rest.size == 0:
        lo = hi = atoms[0][0] if atoms else 0.0
    else:
        lo, hi = float(rest.min()), float(rest.max())
    if hi <= lo:
        hi = lo + 1e-12
    counts, edges = np.histogram(rest, bins=bins, range=(lo, hi))
    return Histogram(edges, counts / n, atoms)


# ---------------------------------------------------------------------------
# engine


def _check_stable(dynamics: DynamicsSpec) -> None:
    if dynamics.random_walk:
        return
    rep = stability_check(dynamics)
    if not rep.passes:
        raise UnstableDynamicsError(
            f"dynamics fail the stability check: E|A|^p = {rep.moment_estimate:.6g} is not < 1")


def _default_threads() -> int:
    return os.cpu_count() or 1


def _simulate_rep(dynamics, policies, cost, cfg, rep, keep_actions, keep_path):
    noise = replication_noise(dynamics, cfg, rep)
    p0 = initial_action(noise, cfg)
    b = cfg.n_burnin
    out = []
    for j, pol in enumerate(policies):
        want_path = keep_path and rep == 0 and j == 0
        act, lo, hi = simulate_path(pol, noise, p0, keep_bounds=want_path)
        diverged = not bool(np.all(np.isfinite(act)))
        x, prev = act[b + 1:], act[b:-1]
        with np.errstate(invalid="ignore", over="ignore"):  # divergence is flagged, not warned
            row = _moments(x, prev, cost, dynamics.p)
            batches = _batch_rows(x, prev, cost, dynamics.p) if cfg.replications == 1 else None
        path = {"lo": lo, "hi": hi, "action": act[1:]} if want_path else None
        out.append((row, batches, x.copy() if keep_actions else None, path, diverged))
    return out


def _simulate(dynamics, policies, cost, cfg, threads, keep_actions, keep_path):
    _check_stable(dynamics)
    log.info("simulate: dynamics=%s policies=%s cost=%s cfg=%s",
             dynamics, [str(p) for p in policies], cost, cfg)
    threads = threads or _default_threads()
    reps = range(cfg.replications)
    job = lambda r: _simulate_rep(dynamics, policies, cost, cfg, r, keep_actions, keep_path)
    if threads > 1 and cfg.replications > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, reps))
    else:
        results = [job(r) for r in reps]

    n = (cfg.steps - cfg.n_burnin) * cfg.replications
    stats = []
    for j, pol in enumerate(policies):
        per = [res[j] for res in results]
        rows = np.array([r[0] for r in per])
        se_rows = per[0][1] if cfg.replications == 1 else rows
        diverged = any(r[4] for r in per)
        st = _stats_from_rows(str(pol), rows, se_rows, dynamics.p, n, diverged)
        if keep_actions and not diverged:
            pooled = np.concatenate([r[2] for r in per])
            st.histogram = build_histogram(pooled, cfg.bins)
        if keep_path:
            st.path = per[0][3]
        stats.append(st)
    return stats


def run(dynamics: DynamicsSpec, policy: Policy, cost: CostFn = Quadratic(), cfg: SimConfig = SimConfig(),
        threads: Optional[int] = None, keep_path: bool = False, histogram: bool = True) -> PathStats:
    """Long-run statistics of ``policy``: mean, variance, quadratic variation and average cost."""
    return _simulate(dynamics, [policy], cost, cfg, threads, histogram, keep_path)[0]


def stationary_histogram(dynamics: DynamicsSpec, policy: Policy, cfg: SimConfig = SimConfig(),
                         threads: Optional[int] = None) -> Histogram:
    return run(dynamics, policy, Quadratic(), cfg, threads=threads).histogram


def compare(dynamics: DynamicsSpec, policies: Sequence[Policy], cost: CostFn = Quadratic(),
            cfg: SimConfig = SimConfig(), threads: Optional[int] = None,
            histogram: bool = False) -> list[PathStats]:
    """Evaluate several policies on common shocks, one row per policy."""
    return _simulate(dynamics, list(policies), cost, cfg, threads, histogram, False)


@dataclass(frozen=True)
class MomentBoundReport:
    running_max_moment: float
    bounded: bool
    window_moments: np.ndarray


def moment_bound_check(dynamics: DynamicsSpec, policy: Policy, cfg: SimConfig = SimConfig(),
                       p: Optional[float] = None, n_windows: int = 10,
                       threads: Optional[int] = None) -> MomentBoundReport:
    """Track E|P_t|^p over consecutive time windows (burn-in included).

    Bounded when the last window does not exceed 1.05 times the largest earlier window.
    """
    p = dynamics.p if p is None else p
    _check_stable(dynamics)
    if n_windows < 2:
        raise ValueError("need at least two windows")

    def job(rep):
        noise = replication_noise(dynamics, cfg, rep)
        act, _, _ = simulate_path(policy, noise, initial_action(noise, cfg))
        m = np.abs(act[1:]) ** p
        return np.array([w.mean() for w in np.array_split(m, n_windows)])

    threads = threads or _default_threads()
    if threads > 1 and cfg.replications > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(job, range(cfg.replications)))
    else:
        rows = [job(r) for r in range(cfg.replications)]
    w = np.mean(rows, axis=0)
    finite = bool(np.all(np.isfinite(w)))
    bounded = finite and bool(w[-1] <= 1.05 * w[:-1].max())
    return MomentBoundReport(float(w.max()) if finite else math.inf, bounded, w)
