"""Action-selection rules.

Every rule returns a point of the current feasible interval. Reference rules
pick the feasible point closest to a target computed from the previous action.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .intervals import Interval, project


@dataclass(frozen=True)
class ConvexCombination:
    """Action at relative position ``k`` inside the interval; k = 0.5 is the midpoint rule."""

    k: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.k <= 1.0:
            raise ValueError(f"combo(k) requires 0 <= k <= 1, got {self.k}")

    def __str__(self):
        return "mid" if self.k == 0.5 else f"combo({self.k!r})"


@dataclass(frozen=True)
class Anchor:
    z: float

    def __str__(self):
        return f"anchor({self.z!r})"


@dataclass(frozen=True)
class StatusQuo:
    def __str__(self):
        return "statusquo"


@dataclass(frozen=True, eq=False)
class TabulatedReference:
    """Target given by piecewise-linear interpolation of (grid, targets), clamped outside the grid."""

    grid: np.ndarray
    targets: np.ndarray
    label: str = field(default="table", compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        r = np.asarray(self.targets, dtype=float)
        if g.ndim != 1 or g.shape != r.shape or g.size < 2:
            raise ValueError("table needs matching 1-d grid and targets with at least 2 points")
        if np.any(np.diff(g) <= 0):
            raise ValueError("table grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "targets", r)

    def target(self, prev):
        return np.interp(prev, self.grid, self.targets)

    def __str__(self):
        return self.label


Policy = Union[ConvexCombination, Anchor, StatusQuo, TabulatedReference]


def target_of(policy: Policy, prev_action: float) -> Optional[float]:
    if isinstance(policy, Anchor):
        return policy.z
    if isinstance(policy, StatusQuo):
        return prev_action
    if isinstance(policy, TabulatedReference):
        return float(policy.target(prev_action))
    return None


def apply(policy: Policy, prev_action: float, iv: Interval) -> float:
    if isinstance(policy, ConvexCombination):
        return (1.0 - policy.k) * iv.lo + policy.k * iv.hi
    return project(iv, target_of(policy, prev_action))


@dataclass(frozen=True)
class NonexpansiveReport:
    monotone: bool
    nonexpansive: bool
    max_slope: float


def check_nonexpansive(policy: TabulatedReference, slack: float = 1e-6) -> NonexpansiveReport:
    ds = np.diff(policy.grid)
    dr = np.diff(policy.targets)
    return NonexpansiveReport(
        monotone=bool(np.all(dr >= 0)),
        nonexpansive=bool(np.all(dr <= ds * (1 + slack))),
        max_slope=float(np.max(dr / ds)),
    )


def damped(z: float, weight: float, lo: float = -10.0, hi: float = 10.0) -> TabulatedReference:
    """Target ``weight*prev + (1-weight)*z``: interpolates between anchoring and status quo."""
    g = np.array([lo, hi])
    return TabulatedReference(g, weight * g + (1 - weight) * z, label=f"damped({z!r},{weight!r})")


def load_table(path) -> TabulatedReference:
    path = Path(path)
    s, r = [], []
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                s.append(float(row[0]))
                r.append(float(row[1]))
            except (ValueError, IndexError):
                if s:  # only a leading header row is tolerated
                    raise ValueError(f"{path}: bad table row {row!r}") from None
    return TabulatedReference(np.array(s), np.array(r), label=f"table({path})")


_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_policy(text: str, base_dir=None) -> Policy:
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse policy {text!r}")
    name, args = m.group(1), m.group(2)
    if name == "mid" and args is None:
        return ConvexCombination(0.5)
    if name == "statusquo" and args is None:
        return StatusQuo()
    if name == "combo" and args:
        return ConvexCombination(float(args))
    if name == "anchor" and args:
        return Anchor(float(args))
    if name == "table" and args:
        p = Path(args.strip())
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        return load_table(p)
    raise ValueError(f"unknown policy {text!r}; expected mid, combo(k), anchor(z), statusquo or table(path)")
