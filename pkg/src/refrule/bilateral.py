"""Bilateral trade at a reference price, with uniform valuations and costs on [0, 1].

Trade happens when the ask ``s`` does not exceed the bid ``b``; the price is
the reference ``R`` projected onto ``[s, b]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

MONOPSONY = "monopsony"
PRICE_TAKING = "price_taking"

# linear equilibrium of the 1/2 double auction with uniform laws
LINEAR_BID = (2 / 3, 1 / 12)
LINEAR_ASK = (2 / 3, 1 / 4)


def price(s: float, b: float, R: float) -> Optional[float]:
    if s > b:
        return None
    return min(max(R, s), b)


def monopsony_utility(v: float, R: float) -> tuple[float, float]:
    """Best bid at or below R and its utility; the bid sets the price there."""
    bid = min(v / 2, R)
    return bid, (v - bid) * bid


def price_taking_utility(v: float, R: float) -> float:
    """Utility of a truthful bid: pay R when the seller's cost is below R, the cost otherwise."""
    if v < R:
        return 0.0
    return (v - R) * R + 0.5 * (v - R) ** 2


@dataclass(frozen=True)
class BestResponse:
    bid: float
    regime: str
    utility: float


def best_response(v: float, R: float) -> BestResponse:
    """Buyer's best bid against a truthful seller with cost ~ U(0,1); ties go to price taking."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"valuation must lie in [0,1], got {v}")
    if not 0.0 < R < 1.0:
        raise ValueError(f"reference price must lie in (0,1), got {R}")
    bid, u_mono = monopsony_utility(v, R)
    u_stat = price_taking_utility(v, R)
    if u_stat >= u_mono:
        return BestResponse(v, PRICE_TAKING, u_stat)
    return BestResponse(bid, MONOPSONY, u_mono)


@dataclass(frozen=True)
class Threshold:
    vhat: float
    switches: bool


def threshold(R: float, tol: float = 1e-10) -> Threshold:
    """Valuation in (R, 1] where v^2/4 equals the price-taking utility."""
    if not 0.0 < R < 1.0:
        raise ValueError(f"reference price must lie in (0,1), got {R}")
    gap = lambda v: price_taking_utility(v, R) - v * v / 4
    a, b = R, 1.0
    if gap(b) < 0:
        return Threshold(1.0, False)
    while b - a > tol:
        m = 0.5 * (a + b)
        if gap(m) < 0:
            a = m
        else:
            b = m
    return Threshold(0.5 * (a + b), True)


def pooling_bid(v: float, R: float) -> float:
    return R if v >= R else 0.0


def pooling_ask(c: float, R: float) -> float:
    return R if c <= R else 1.0


def pooling_strategies(R: float) -> tuple[Callable[[float], float], Callable[[float], float]]:
    if not 0.0 < R < 1.0:
        raise ValueError(f"reference price must lie in (0,1), got {R}")
    return (lambda v: pooling_bid(v, R)), (lambda c: pooling_ask(c, R))


def linear_bid(v):
    return LINEAR_BID[0] * np.asarray(v) + LINEAR_BID[1]


def linear_ask(c):
    return LINEAR_ASK[0] * np.asarray(c) + LINEAR_ASK[1]


MECHANISMS = ("first_best", "linear_eq", "posted", "pooling")


def welfare_closed_form(mechanism: str, R: float = 0.5) -> float:
    if mechanism == "first_best":
        return 1 / 6
    if mechanism == "linear_eq":
        return 9 / 64
    if mechanism in ("posted", "pooling"):
        return R * (1 - R) / 2
    raise ValueError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")


def _trades(mechanism, v, c, R):
    if mechanism == "first_best":
        return v >= c
    if mechanism == "linear_eq":
        return linear_bid(v) >= linear_ask(c)
    if mechanism == "posted":
        return (v >= R) & (c <= R)
    if mechanism == "pooling":
        b = np.where(v >= R, R, 0.0)
        s = np.where(c <= R, R, 1.0)
        return s <= b
    raise ValueError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")


@dataclass(frozen=True)
class Welfare:
    mechanism: str
    closed_form: float
    mc_estimate: float
    mc_se: float


def welfare(mechanism: str, R: float = 0.5, n: int = 1_000_000, seed: int = 0) -> Welfare:
    rng = np.random.default_rng(seed)
    v = rng.random(n)
    c = rng.random(n)
    surplus = np.where(_trades(mechanism, v, c, R), v - c, 0.0)
    return Welfare(mechanism, welfare_closed_form(mechanism, R),
                   float(surplus.mean()), float(surplus.std(ddof=1) / math.sqrt(n)))


def optimal_posted_price(F: Callable[[float], float] = lambda x: x,
                         G: Callable[[float], float] = lambda x: x, tol: float = 1e-12) -> float:
    """Root of 1 - F(R) = G(R) (buyer CDF F, seller CDF G) by bisection on [0, 1]."""
    a, b = 0.0, 1.0
    gap = lambda r: 1 - F(r) - G(r)
    if gap(a) < 0 or gap(b) > 0:
        raise ValueError("1 - F - G has no sign change on [0, 1]")
    while b - a > tol:
        m = 0.5 * (a + b)
        if gap(m) > 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


@dataclass(frozen=True)
class PriceRow:
    t: int
    v: float
    c: float
    price_kda: Optional[float]
    price_pooling: Optional[float]


def simulate_prices(T: int = 50, seed: int = 0, R: float = 0.5) -> list[PriceRow]:
    """Per-period prices under the linear 1/2 double auction and the pooling equilibrium."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.random(T)
    c = rng.random(T)
    b, s = linear_bid(v), linear_ask(c)
    rows = []
    for t in range(T):
        kda = 0.5 * (b[t] + s[t]) if b[t] >= s[t] else None
        pool = price(pooling_ask(c[t], R), pooling_bid(v[t], R), R)
        rows.append(PriceRow(t + 1, float(v[t]), float(c[t]),
                             None if kda is None else float(kda), pool))
    return rows


def kda_trade_frequency(n: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    v, c = rng.random(n), rng.random(n)
    hit = (linear_bid(v) >= linear_ask(c)).astype(float)
    return float(hit.mean()), float(hit.std(ddof=1) / math.sqrt(n))
