"""``refrule`` command-line interface.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(divergence, non-convergence), 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import acoe, anchor, bilateral, uniform
from .config import ConfigError, RunConfig, config_to_dict, load_config
from .simulator import UnstableDynamicsError

log = logging.getLogger("refrule")

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class NumericalFailure(RuntimeError):
    pass


def _g(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _emit(payload: dict) -> None:
    print(json.dumps({"schema": SCHEMA, **payload}, indent=2, allow_nan=True))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.sim = dataclasses.replace(cfg.sim, seed=args.seed)
        cfg.acoe = dataclasses.replace(cfg.acoe, seed=args.seed)
        cfg.anchor = dataclasses.replace(cfg.anchor, seed=args.seed)
    log.info("resolved config (%s): %s", args.config, json.dumps(config_to_dict(cfg), default=str))
    return cfg


def write_histogram(path, hist) -> None:
    rows = [(_g(lo), _g(hi), _g(m)) for lo, hi, m in zip(hist.edges[:-1], hist.edges[1:], hist.masses)]
    if hist.atoms:
        rows.append(("atom_location", "mass"))
        rows += [(_g(loc), _g(m)) for loc, m in hist.atoms]
    _write_csv(path, ["bin_lo", "bin_hi", "mass"], rows)


def write_path(path, stats_path: dict) -> None:
    lo, hi, act = stats_path["lo"], stats_path["hi"], stats_path["action"]
    _write_csv(path, ["t", "lo", "hi", "action"],
               ((t + 1, _g(lo[t]), _g(hi[t]), _g(act[t])) for t in range(act.size)))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    from .simulator import run

    cfg = _load(args)
    st = run(cfg.dynamics, cfg.policy, cfg.cost, cfg.sim, threads=args.threads,
             keep_path=bool(args.out_path))
    out = {"command": "simulate", "config": config_to_dict(cfg), "stats": st.to_dict()}
    if args.out_stats:
        Path(args.out_stats).write_text(json.dumps({"schema": SCHEMA, **out}, indent=2))
    if args.out_hist and st.histogram is not None:
        write_histogram(args.out_hist, st.histogram)
    if args.out_path and st.path is not None:
        write_path(args.out_path, st.path)
    _emit(out)
    if st.diverged:
        raise NumericalFailure("divergence: non-finite action in simulated path")
    return EXIT_OK


def cmd_compare(args) -> int:
    from .simulator import compare

    cfg = _load(args)
    rows = compare(cfg.dynamics, cfg.compare, cfg.cost, cfg.sim, threads=args.threads)
    table = [{"policy": r.policy, "qv": r.qv, "variance": r.variance, "avg_cost": r.avg_cost,
              "standard_errors": r.se, "diverged": r.diverged} for r in rows]
    out = {"command": "compare", "config": config_to_dict(cfg), "table": table}
    if args.out_stats:
        Path(args.out_stats).write_text(json.dumps({"schema": SCHEMA, **out}, indent=2))
    _emit(out)
    if any(r.diverged for r in rows):
        raise NumericalFailure("divergence: non-finite action in simulated path")
    return EXIT_OK


def cmd_solve_acoe(args) -> int:
    cfg = _load(args)
    sol = acoe.solve(cfg.dynamics, cfg.state_range, cfg.cost, cfg.acoe)
    side = {"rho": sol.rho, "sweeps": sol.sweeps, "converged": sol.converged,
            "interior_slope": sol.interior_slope()}
    if args.out_solution:
        _write_csv(args.out_solution, ["s", "h", "r_star"],
                   ((_g(s), _g(h), _g(r)) for s, h, r in zip(sol.grid, sol.h, sol.targets)))
        Path(args.out_solution).with_suffix(".json").write_text(json.dumps({"schema": SCHEMA, **side}, indent=2))
    _emit({"command": "solve-acoe", **side})
    if not sol.converged:
        raise NumericalFailure(f"value iteration did not converge in {sol.sweeps} sweeps")
    return EXIT_OK


def cmd_anchor(args) -> int:
    cfg = _load(args)
    a = cfg.anchor
    sol = anchor.solve_anchor(cfg.dynamics, tol=a.tol, n_samples=a.n_samples, seed=a.seed)
    gap, se = anchor.self_consistency_check(cfg.dynamics, sol.z_star, a.n_samples, a.seed + 1)
    _emit({"command": "anchor", **sol.to_dict(), "self_consistency_gap": gap, "self_consistency_se": se})
    return EXIT_OK


def cmd_analytic(args) -> int:
    _emit({"command": "analytic", "environment": args.environment, **uniform.analytic_table()})
    return EXIT_OK


def cmd_bilateral(args) -> int:
    if args.action == "best-response":
        br = bilateral.best_response(args.v, args.ref)
        _emit({"command": "bilateral best-response", "v": args.v, "ref": args.ref, **dataclasses.asdict(br)})
    elif args.action == "threshold":
        th = bilateral.threshold(args.ref)
        _emit({"command": "bilateral threshold", "ref": args.ref, "vhat": th.vhat, "switches": th.switches,
               "max_monopsony_bid": th.vhat / 2})
    elif args.action == "welfare":
        ws = [bilateral.welfare(m, args.ref, args.n, args.seed) for m in bilateral.MECHANISMS]
        _emit({"command": "bilateral welfare", "ref": args.ref,
               "welfare": [dataclasses.asdict(w) for w in ws],
               "optimal_posted_price": bilateral.optimal_posted_price()})
    else:
        rows = bilateral.simulate_prices(args.steps, args.seed, args.ref)
        if args.out:
            _write_csv(args.out, ["t", "v", "c", "price_kda", "price_pooling"],
                       ((r.t, _g(r.v), _g(r.c), _g(r.price_kda), _g(r.price_pooling)) for r in rows))
        kda = [r.price_kda for r in rows if r.price_kda is not None]
        pool = [r.price_pooling for r in rows if r.price_pooling is not None]
        _emit({"command": "bilateral simulate", "steps": args.steps, "seed": args.seed,
               "kda_trades": len(kda), "pooling_trades": len(pool)})
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_all

    log.info("verify: fast=%s threads=%s", args.fast, args.threads)
    checks = run_all(fast=args.fast, threads=args.threads, echo=lambda s: print(s, file=sys.stderr))
    failed = [c for c in checks if not c.passed]
    _emit({"command": "verify", "fast": args.fast, "passed": len(checks) - len(failed),
           "failed": len(failed), "checks": [dataclasses.asdict(c) for c in checks]})
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for replications (default: %(default)s)")
    common.add_argument("--seed", type=int, default=None, help="override every seed in the config")
    common.add_argument("-q", "--quiet", action="store_true", help="log warnings only")

    p = argparse.ArgumentParser(prog="refrule", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--config", required=True, help="INI-style run configuration")
        return sp

    sp = with_config("simulate", "simulate one policy")
    sp.add_argument("--out-stats", help="JSON statistics")
    sp.add_argument("--out-hist", help="CSV histogram (bin_lo,bin_hi,mass; then atom_location,mass rows)")
    sp.add_argument("--out-path", help="CSV path of the first replication (t,lo,hi,action)")
    sp.set_defaults(func=cmd_simulate)

    sp = with_config("compare", "compare policies on common random numbers")
    sp.add_argument("--out-stats", help="JSON table")
    sp.set_defaults(func=cmd_compare)

    sp = with_config("solve-acoe", "solve the average-cost optimality equation")
    sp.add_argument("--out-solution", help="CSV s,h,r_star; a .json sidecar holds rho/sweeps/converged")
    sp.set_defaults(func=cmd_solve_acoe)

    sp = with_config("anchor", "variance-minimizing anchor")
    sp.set_defaults(func=cmd_anchor)

    sp = sub.add_parser("analytic", parents=[common], help="closed-form benchmark values")
    sp.add_argument("environment", choices=["uniform"])
    sp.set_defaults(func=cmd_analytic)

    sp = sub.add_parser("bilateral", help="reference-price bilateral trade")
    bsub = sp.add_subparsers(dest="action", required=True)
    b = bsub.add_parser("best-response", parents=[common])
    b.add_argument("--v", type=float, required=True)
    b.add_argument("--ref", type=float, default=0.5)
    b = bsub.add_parser("threshold", parents=[common])
    b.add_argument("--ref", type=float, default=0.5)
    b = bsub.add_parser("welfare", parents=[common])
    b.add_argument("--ref", type=float, default=0.5)
    b.add_argument("--n", type=int, default=1_000_000, help="Monte Carlo draws")
    b = bsub.add_parser("simulate", parents=[common])
    b.add_argument("--steps", type=int, default=50)
    b.add_argument("--ref", type=float, default=0.5)
    b.add_argument("--out", help="CSV t,v,c,price_kda,price_pooling")
    sp.set_defaults(func=cmd_bilateral)

    sp = sub.add_parser("verify", parents=[common], help="run the reproduction checks")
    sp.add_argument("--fast", action="store_true", help="reduced sample sizes")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "seed", None) is None and args.command == "bilateral":
        args.seed = 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"refrule: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableDynamicsError as exc:
        print(f"refrule: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, acoe.NotConvergedError, anchor.NoSignChangeError) as exc:
        print(f"refrule: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # model-level invariant violations (e.g. non-exogenous dynamics for the solvers)
        print(f"refrule: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
