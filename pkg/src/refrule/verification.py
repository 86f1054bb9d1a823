"""Reproduction checks for the benchmark numbers.

Each ``criterion_*`` function returns a list of :class:`Check`. ``fast=True``
shrinks sample sizes for a quick smoke run; tolerances never change.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import acoe, anchor, bilateral, uniform
from .costs import Quadratic
from .intervals import (Constant, DynamicsSpec, FixedWidth, IndependentSorted, Normal,
                        OrderStatsUniform, Uniform, random_walk, uniform_benchmark)
from .policies import Anchor, ConvexCombination, StatusQuo, check_nonexpansive, damped
from .simulator import (SimConfig, compare, moment_bound_check, replication_noise, run,
                        simulate_path)


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] C{self.criterion} {self.name}: {self.detail}"


def _sim_cfg(fast: bool, seed: int = 20240601) -> SimConfig:
    return SimConfig(steps=200_000 if fast else 2_000_000, replications=8, seed=seed)


def benchmark_rows(fast: bool = False, threads=None):
    pols = [ConvexCombination(0.5), Anchor(0.5), StatusQuo()]
    return compare(uniform_benchmark(), pols, Quadratic(), _sim_cfg(fast), threads=threads)


def criterion_1(fast: bool = False, threads=None, rows=None) -> list[Check]:
    rows = rows or benchmark_rows(fast, threads)
    exact = uniform.analytic_table()
    out = []
    for row, tag in zip(rows, ("mid", "anchor", "inertia")):
        for stat, key in (("qv", f"qv_{tag}"), ("variance", f"var_{tag}")):
            est, se, ref = getattr(row, stat), row.se[stat], exact[key]
            err = abs(est - ref)
            ok = err <= 3 * se and err <= 5e-4
            out.append(Check(1, key, ok, f"sim={est:.6f} exact={ref:.6f} |err|={err:.2e} 3SE={3 * se:.2e}"))
    return out


def criterion_2(fast: bool = False, threads=None) -> list[Check]:
    cfg = _sim_cfg(fast, seed=7)
    dyn = uniform_benchmark()
    sq = run(dyn, StatusQuo(), cfg=cfg, threads=threads)
    mid = run(dyn, ConvexCombination(0.5), cfg=cfg, threads=threads)
    anc = run(dyn, Anchor(0.5), cfg=cfg, threads=threads)
    ks_sq = uniform.ks_distance(sq.histogram, "inertia")
    ks_mid = uniform.ks_distance(mid.histogram, "mid")
    atoms = dict(anc.atom_report)
    mass = atoms.get(0.5, 0.0)
    return [
        Check(2, "ks_statusquo_vs_inertia", ks_sq < 0.01, f"KS={ks_sq:.4g} (< 0.01)"),
        Check(2, "anchor_atom_mass", abs(mass - 0.5) <= 0.01 and len(atoms) == 1,
              f"atoms={anc.atom_report} (mass 0.5 +- 0.01 at 0.5)"),
        Check(2, "ks_midpoint_vs_triangular", ks_mid < 0.01, f"KS={ks_mid:.4g} (< 0.01)"),
    ]


def criterion_3(fast: bool = False, threads=None, sq_qv=None) -> list[Check]:
    cfg = acoe.AcoeConfig(grid_size=101, noise_samples=5000) if fast else acoe.AcoeConfig()
    dyn = uniform_benchmark()
    t0 = time.perf_counter()
    sol = acoe.solve(dyn, (0.0, 1.0), Quadratic(), cfg)
    elapsed = time.perf_counter() - t0
    if sq_qv is None:
        sq_qv = run(dyn, StatusQuo(), cfg=_sim_cfg(fast), threads=threads, histogram=False).qv
    slope = sol.interior_slope()
    ne = check_nonexpansive(acoe.policy_from(sol, force=True))
    ev = acoe.evaluate_solution(dyn, sol, cfg=SimConfig(steps=1_000_000 if not fast else 200_000,
                                                         replications=4, seed=11),
                                threads=threads, force=True)
    gap = abs(ev.avg_cost - sol.rho)
    return [
        Check(3, "acoe_converged", sol.converged and elapsed <= 120,
              f"converged={sol.converged} sweeps={sol.sweeps} time={elapsed:.1f}s"),
        Check(3, "acoe_rho_range", 0.0388 <= sol.rho <= 0.0397, f"rho={sol.rho:.6f} (in [0.0388, 0.0397])"),
        Check(3, "acoe_rho_below_statusquo", sol.rho <= sq_qv + 5e-4,
              f"rho={sol.rho:.6f} statusquo qv={sq_qv:.6f}"),
        Check(3, "acoe_interior_slope", 0.84 <= slope <= 0.92, f"slope={slope:.4f} (in [0.84, 0.92])"),
        Check(3, "acoe_nonexpansive", ne.monotone and ne.nonexpansive,
              f"monotone={ne.monotone} nonexpansive={ne.nonexpansive} max_slope={ne.max_slope:.4f}"),
        Check(3, "acoe_evaluate_solution", gap < 1e-3,
              f"simulated={ev.avg_cost:.6f} rho={sol.rho:.6f} |gap|={gap:.2e} (< 1e-3)"),
    ]


def criterion_4(fast: bool = False) -> list[Check]:
    n = 200_000 if fast else 1_000_000
    dyn = uniform_benchmark()
    sol = anchor.solve_anchor(dyn, n_samples=n, seed=3)
    gap, se = anchor.self_consistency_check(dyn, sol.z_star, n_samples=n, seed=4)
    p0, se0 = anchor.balance_residual_mc(dyn, 0.0, n_samples=n, seed=5)
    p1, se1 = anchor.balance_residual_mc(dyn, 1.0, n_samples=n, seed=6)
    return [
        Check(4, "anchor_z_star", abs(sol.z_star - 0.5) <= 1e-3, f"z*={sol.z_star:.6f} (0.5 +- 1e-3)"),
        Check(4, "anchor_variance", abs(sol.variance_at_z - 1 / 48) <= 1e-3,
              f"variance={sol.variance_at_z:.6f} (1/48 +- 1e-3)"),
        Check(4, "anchor_self_consistency", gap < 3 * se, f"gap={gap:.2e} 3SE={3 * se:.2e}"),
        Check(4, "psi_at_0", abs(p0 - 1 / 3) <= 3 * se0, f"psi(0)={p0:.6f} 3SE={3 * se0:.2e}"),
        Check(4, "psi_at_1", abs(p1 + 1 / 3) <= 3 * se1, f"psi(1)={p1:.6f} 3SE={3 * se1:.2e}"),
    ]


def random_walk_rivals():
    rivals = [Anchor(float(z)) for z in np.linspace(-2.0, 2.0, 9)]
    rivals += [ConvexCombination(float(k)) for k in np.linspace(0.0, 1.0, 11)]
    rivals += [damped(0.0, w, lo=-1e3, hi=1e3) for w in (0.25, 0.5, 0.75, 0.9, 0.99)]
    return rivals


def increment_rounding(path: np.ndarray, incr: np.ndarray) -> np.ndarray:
    """Bound on the rounding error of squared increments recomputed along ``path``.

    Forming the interval as prev + u and differencing loses up to a few ulps of |prev|.
    """
    level = np.maximum(np.abs(path[1:]), np.abs(path[:-1]))
    return 8 * np.finfo(float).eps * np.maximum(level, 1.0) * (np.abs(incr) + 1e-300)


def criterion_5(fast: bool = False) -> list[Check]:
    steps = 20_000 if fast else 100_000
    dyn = random_walk(OrderStatsUniform(-0.5, 0.5))
    cfg = SimConfig(steps=steps, burnin=0, seed=17, initial_action=0.0)
    noise = replication_noise(dyn, cfg, 0)
    sq, _, _ = simulate_path(StatusQuo(), noise, 0.0)
    d_sq = np.diff(sq)
    sq_cost = d_sq ** 2
    worst = -np.inf
    failures = []
    for pol in random_walk_rivals():
        path, _, _ = simulate_path(pol, noise, 0.0)
        d = np.diff(path)
        slack = increment_rounding(sq, d_sq) + increment_rounding(path, d)
        excess = sq_cost - d ** 2
        worst = max(worst, float(np.max(excess)))
        if np.any(excess > slack):
            failures.append(str(pol))
    return [Check(5, "random_walk_statusquo_pathwise_minimal", not failures,
                  f"{len(random_walk_rivals())} rivals x {steps} periods; max(sq-rival)={worst:.2e}"
                  + (f"; violated by {failures}" if failures else ""))]


def criterion_6(fast: bool = False) -> list[Check]:
    vhat = bilateral.threshold(0.5).vhat
    out = [Check(6, "threshold", abs(vhat - math.sqrt(2) / 2) <= 1e-6, f"vhat={vhat:.9f} (sqrt(2)/2)")]
    exact = {"first_best": 1 / 6, "linear_eq": 9 / 64, "posted": 1 / 8}
    for mech, ref in exact.items():
        cf = bilateral.welfare_closed_form(mech, 0.5)
        out.append(Check(6, f"welfare_closed_{mech}", cf == ref, f"{cf!r} == {ref!r}"))
    for mech in bilateral.MECHANISMS:
        t0 = time.perf_counter()
        w = bilateral.welfare(mech, 0.5, n=1_000_000, seed=21)
        dt = time.perf_counter() - t0
        err = abs(w.mc_estimate - w.closed_form)
        out.append(Check(6, f"welfare_mc_{mech}", err <= 3 * w.mc_se and dt < 5,
                         f"mc={w.mc_estimate:.6f} closed={w.closed_form:.6f} |err|={err:.2e} "
                         f"3SE={3 * w.mc_se:.2e} time={dt:.2f}s"))
    vs = np.linspace(0.0, 1.0, 10_000)
    bids = np.array([bilateral.best_response(v, 0.5).bid for v in vs])
    in_hole = (bids > vhat / 2) & (bids < vhat)
    out.append(Check(6, "bid_hole", not in_hole.any(),
                     f"{int(in_hole.sum())} of {vs.size} bids in ({vhat / 2:.4f}, {vhat:.4f})"))
    rows = bilateral.simulate_prices(T=10_000, seed=22, R=0.5)
    pool = [r.price_pooling for r in rows if r.price_pooling is not None]
    out.append(Check(6, "pooling_prices", len(pool) > 0 and all(p == 0.5 for p in pool),
                     f"{len(pool)} pooling trades, distinct prices={sorted(set(pool))}"))
    return out


def criterion_7(fast: bool = False) -> list[Check]:
    opts = dict(epsabs=1e-12, epsrel=1e-12, limit=200)
    t0 = time.perf_counter()
    mass = integrate.quad(uniform.density_inertia, 0, 1, **opts)[0]
    var = integrate.quad(lambda x: (x - 0.5) ** 2 * uniform.density_inertia(x), 0, 1, **opts)[0]
    qv = integrate.quad(lambda x: uniform.conditional_qv_inertia(x) * uniform.density_inertia(x), 0, 1, **opts)[0]
    dt = time.perf_counter() - t0
    t = uniform.analytic_table()
    return [
        Check(7, "integral_density", abs(mass - 1) <= 1e-8 and dt < 1, f"{mass:.12f} (time {dt:.3f}s)"),
        Check(7, "integral_variance", abs(var - t["var_inertia"]) <= 1e-8, f"{var:.12f} vs {t['var_inertia']:.12f}"),
        Check(7, "integral_qv", abs(qv - t["qv_inertia"]) <= 1e-8, f"{qv:.12f} vs {t['qv_inertia']:.12f}"),
    ]


def dissipativity_matrix():
    bases = [
        OrderStatsUniform(0.0, 1.0),
        IndependentSorted(Uniform(-1.0, 1.0), Normal(0.0, 1.0)),
        FixedWidth(Normal(0.0, 1.0), 0.5),
    ]
    for a in (0.0, 0.5, -0.5, 0.9):
        for p in (2.0, 4.0):
            for base in bases:
                yield DynamicsSpec(Constant(a), Uniform(-0.5, 0.5), base, p=p)


def criterion_8(fast: bool = False, threads=None) -> list[Check]:
    cfg = SimConfig(steps=20_000, replications=100, seed=31)
    pols = [ConvexCombination(0.5), StatusQuo(), Anchor(0.5)]
    failures = []
    n = 0
    for dyn in dissipativity_matrix():
        for pol in pols:
            rep = moment_bound_check(dyn, pol, cfg, threads=threads)
            n += 1
            if not rep.bounded:
                failures.append(f"a={dyn.a_dist} p={dyn.p} base={dyn.base} {pol}")
    rw = moment_bound_check(random_walk(OrderStatsUniform(-0.5, 0.5)), ConvexCombination(0.5),
                            SimConfig(steps=5_000, replications=200, seed=32), p=2.0, threads=threads)
    return [
        Check(8, "stable_specs_bounded", not failures, f"{n - len(failures)}/{n} bounded"
              + (f"; unbounded: {failures[:3]}" if failures else "")),
        Check(8, "random_walk_unbounded", not rw.bounded,
              f"window moments first={rw.window_moments[0]:.3g} last={rw.window_moments[-1]:.3g}"),
    ]


def run_all(fast: bool = False, threads=None, echo=None) -> list[Check]:
    checks = []

    def add(cs):
        checks.extend(cs)
        if echo:
            for c in cs:
                echo(c.line())

    rows = benchmark_rows(fast, threads)
    add(criterion_1(fast, threads, rows))
    add(criterion_2(fast, threads))
    add(criterion_3(fast, threads, sq_qv=rows[2].qv))
    add(criterion_4(fast))
    add(criterion_5(fast))
    add(criterion_6(fast))
    add(criterion_7(fast))
    add(criterion_8(fast, threads))
    return checks
