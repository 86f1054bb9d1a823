"""Closed forms for the uniform benchmark.

Intervals are the order statistics of two independent U(0,1) draws, with no
dependence on the previous action. Three rules have explicit stationary laws:
midpoint (triangular), anchoring at 1/2 (half the mass as an atom at 1/2) and
status quo (``f_in`` below).
"""

from __future__ import annotations

import math

import numpy as np

LAWS = ("mid", "anchor", "inertia")


def _check_unit(x, open_=False):
    x = np.asarray(x, dtype=float)
    bad = (x <= 0) | (x >= 1) if open_ else (x < 0) | (x > 1)
    if np.any(bad):
        dom = "(0,1)" if open_ else "[0,1]"
        raise ValueError(f"argument outside {dom}: {x[bad].ravel()[:3]}")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def density_midpoint(x):
    x = _check_unit(x)
    return _out(np.where(x <= 0.5, 4 * x, 4 * (1 - x)))


def density_anchor(x):
    """Continuous part of the anchoring law and the atom mass at 1/2."""
    x = _check_unit(x)
    return _out(2 * np.minimum(x, 1 - x)), 0.5


def density_inertia(x):
    x = _check_unit(x, open_=True)
    q = 1 - 2 * x + 2 * x * x
    return _out(2 * x * (1 - x) / (q * q))


def conditional_qv_inertia(x):
    """Expected squared increment of the status quo rule from action ``x``."""
    x = _check_unit(x)
    return _out(x ** 4 / 6 + (1 - x) ** 4 / 6)


def cdf(law: str, x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    if law == "mid":
        return _out(np.where(x <= 0.5, 2 * x * x, 1 - 2 * (1 - x) ** 2))
    if law == "anchor":
        return _out(np.where(x < 0.5, x * x, 1 - (1 - x) ** 2))
    if law == "inertia":
        # f_in(x) dx = d[w / (1 + w^2)] with w = 2x - 1
        w = 2 * x - 1
        return _out(0.5 + w / (1 + w * w))
    raise ValueError(f"unknown law {law!r}; expected one of {LAWS}")


def analytic_table() -> dict:
    return {
        "qv_mid": 1 / 12,
        "var_mid": 1 / 24,
        "qv_anchor": 1 / 24,
        "var_anchor": 1 / 48,
        "qv_inertia": math.pi / 12 - 2 / 9,
        "var_inertia": (math.pi - 3) / 4,
    }


def ks_distance(hist, law: str) -> float:
    """Sup distance between a histogram's CDF (bins plus atoms) and an analytic CDF, at bin edges."""
    emp = hist.cdf_at_edges()
    ref = np.asarray(cdf(law, hist.edges))
    return float(np.max(np.abs(emp - ref)))


def balance_residual(z: float) -> float:
    """E[(L-z) 1{L>z}] + E[(R-z) 1{R<z}] for the benchmark intervals."""
    if z <= 0:
        return 1 / 3 - z
    if z >= 1:
        return 2 / 3 - z
    return ((1 - z) ** 3 - z ** 3) / 3
