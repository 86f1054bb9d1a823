"""Run configuration files.

INI-style key-value files with ``[section]`` headers::

    [dynamics]
    a = const(0)
    b = const(0)
    base = orderstats(0,1)
    p = 2
    random_walk = false

    [policy]
    rule = statusquo
    compare = mid; anchor(0.5); statusquo

    [cost]
    fn = quad

    [sim]
    steps = 1000000
    burnin = 100000
    replications = 8
    seed = 1
    initial_action = auto
    bins = 200

Optional ``[acoe]`` and ``[anchor]`` sections configure the solvers. Unknown
sections and keys are errors.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .acoe import AcoeConfig
from .costs import CostFn, Quadratic, parse_cost
from .intervals import Constant, DynamicsSpec, parse_base_dist, parse_scalar_dist, uniform_benchmark
from .policies import Anchor, ConvexCombination, Policy, StatusQuo, parse_policy
from .simulator import SimConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnchorConfig:
    n_samples: int = 1_000_000
    tol: float = 1e-6
    seed: int = 0


@dataclass
class RunConfig:
    dynamics: DynamicsSpec = field(default_factory=uniform_benchmark)
    policy: Policy = field(default_factory=StatusQuo)
    cost: CostFn = field(default_factory=Quadratic)
    sim: SimConfig = field(default_factory=SimConfig)
    acoe: AcoeConfig = field(default_factory=AcoeConfig)
    state_range: tuple = (0.0, 1.0)
    anchor: AnchorConfig = field(default_factory=AnchorConfig)
    compare: list = field(default_factory=lambda: [ConvexCombination(0.5), Anchor(0.5), StatusQuo()])


_KEYS = {
    "dynamics": {"a", "b", "base", "p", "random_walk"},
    "policy": {"rule", "compare"},
    "cost": {"fn"},
    "sim": {f.name for f in fields(SimConfig)},
    "acoe": {f.name for f in fields(AcoeConfig)} | {"state_min", "state_max"},
    "anchor": {f.name for f in fields(AnchorConfig)},
}

_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    idx, sec = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        m = _SECTION.match(line)
        if m:
            sec = m.group(1).strip()
            continue
        m = _KEY.match(line)
        if m and sec is not None:
            idx.setdefault((sec, m.group(1).strip().lower()), n)
    return idx


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        f = float(text)  # allow 1e6
        if not f.is_integer():
            raise ValueError(f"expected an integer, got {text!r}") from None
        return int(f)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = _line_index(text)

    def where(sec, key):
        n = lines.get((sec, key))
        return f"{path}:{n}: [{sec}] {key}" if n else f"{path}: [{sec}] {key}"

    for sec in cp.sections():
        if sec not in _KEYS:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _KEYS[sec]:
                raise ConfigError(f"{where(sec, key)}: unknown key")

    def get(sec, key):
        if not cp.has_option(sec, key):
            return None
        return cp[sec][key].strip().strip('"').strip("'")

    def parsed(sec, key, fn, default):
        raw = get(sec, key)
        if raw is None:
            return default
        try:
            return fn(raw)
        except (ValueError, TypeError, OSError) as exc:
            raise ConfigError(f"{where(sec, key)} = {raw!r}: {exc}") from None

    def build(sec, ctor, **kw):
        try:
            return ctor(**kw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: invalid [{sec}] section: {exc}") from None

    cfg = RunConfig()
    d = cfg.dynamics
    rw = parsed("dynamics", "random_walk", _bool, d.random_walk)
    dyn = dict(
        a_dist=parsed("dynamics", "a", parse_scalar_dist, Constant(1.0) if rw else d.a_dist),
        b_dist=parsed("dynamics", "b", parse_scalar_dist, d.b_dist),
        base=parsed("dynamics", "base", parse_base_dist, d.base),
        p=parsed("dynamics", "p", float, d.p),
        random_walk=rw,
    )
    cfg.dynamics = build("dynamics", DynamicsSpec, **dyn)

    base_dir = path.parent
    cfg.policy = parsed("policy", "rule", lambda s: parse_policy(s, base_dir), cfg.policy)
    cfg.compare = parsed("policy", "compare",
                         lambda s: [parse_policy(p, base_dir) for p in s.split(";") if p.strip()],
                         cfg.compare)
    cfg.cost = parsed("cost", "fn", parse_cost, cfg.cost)

    def initial(s):
        return "auto" if s == "auto" else float(s)

    cfg.sim = build("sim", SimConfig,
                    steps=parsed("sim", "steps", _int, SimConfig.steps),
                    burnin=parsed("sim", "burnin", _int, None),
                    replications=parsed("sim", "replications", _int, SimConfig.replications),
                    seed=parsed("sim", "seed", _int, SimConfig.seed),
                    initial_action=parsed("sim", "initial_action", initial, "auto"),
                    bins=parsed("sim", "bins", _int, SimConfig.bins))

    ac = AcoeConfig()
    cfg.acoe = build("acoe", AcoeConfig,
                     grid_size=parsed("acoe", "grid_size", _int, ac.grid_size),
                     noise_samples=parsed("acoe", "noise_samples", _int, ac.noise_samples),
                     tolerance=parsed("acoe", "tolerance", float, ac.tolerance),
                     max_sweeps=parsed("acoe", "max_sweeps", _int, ac.max_sweeps),
                     coarse_points=parsed("acoe", "coarse_points", _int, ac.coarse_points),
                     golden_iters=parsed("acoe", "golden_iters", _int, ac.golden_iters),
                     seed=parsed("acoe", "seed", _int, ac.seed),
                     symmetrize=parsed("acoe", "symmetrize", _bool, ac.symmetrize))
    cfg.state_range = (parsed("acoe", "state_min", float, 0.0), parsed("acoe", "state_max", float, 1.0))
    if not cfg.state_range[0] < cfg.state_range[1]:
        raise ConfigError(f"{path}: [acoe] state_min must be < state_max")

    an = AnchorConfig()
    cfg.anchor = build("anchor", AnchorConfig,
                       n_samples=parsed("anchor", "n_samples", _int, an.n_samples),
                       tol=parsed("anchor", "tol", float, an.tol),
                       seed=parsed("anchor", "seed", _int, an.seed))
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    from .intervals import dynamics_to_dict

    return {
        "dynamics": dynamics_to_dict(cfg.dynamics),
        "policy": str(cfg.policy),
        "compare": [str(p) for p in cfg.compare],
        "cost": str(cfg.cost),
        "sim": {f.name: getattr(cfg.sim, f.name) for f in fields(SimConfig)} | {"burnin": cfg.sim.n_burnin},
        "acoe": {f.name: getattr(cfg.acoe, f.name) for f in fields(AcoeConfig)},
        "state_range": list(cfg.state_range),
        "anchor": {f.name: getattr(cfg.anchor, f.name) for f in fields(AnchorConfig)},
    }
