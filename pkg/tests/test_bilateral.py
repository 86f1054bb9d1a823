import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from refrule import bilateral as bt


@pytest.mark.parametrize("s, b, R, expected", [(0.3, 0.7, 0.5, 0.5), (0.6, 0.7, 0.5, 0.6), (0.3, 0.4, 0.5, 0.4)])
def test_price_examples(s, b, R, expected):
    assert bt.price(s, b, R) == expected


def test_price_no_trade():
    assert bt.price(0.8, 0.7, 0.5) is None


@given(s=st.floats(0, 1), b=st.floats(0, 1), R=st.floats(0, 1))
def test_price_in_spread(s, b, R):
    p = bt.price(s, b, R)
    assert (p is None) == (s > b)
    if p is not None:
        assert s <= p <= b


def test_best_response_examples():
    br = bt.best_response(0.6, 0.5)
    assert br.regime == bt.MONOPSONY and br.bid == pytest.approx(0.3) and br.utility == pytest.approx(0.09)
    br = bt.best_response(0.8, 0.5)
    assert br.regime == bt.PRICE_TAKING and br.bid == 0.8 and br.utility == pytest.approx(0.195)
    v = math.sqrt(2) / 2
    assert bt.monopsony_utility(v, 0.5)[1] == pytest.approx(bt.price_taking_utility(v, 0.5))


def _expected_utility(v, bid, R):
    # truthful seller with cost c ~ U(0,1); price is R projected onto [c, bid]
    if bid <= 0:
        return 0.0
    f = lambda c: v - min(max(R, c), bid)
    pts = [R] if 0 < R < bid else None
    return quad(f, 0, bid, points=pts)[0]


@pytest.mark.parametrize("v", [0.2, 0.45, 0.6, 0.69, 0.75, 0.95])
def test_best_response_against_grid_search(v):
    R = 0.5
    bids = np.linspace(0, 1, 2001)
    u = np.array([_expected_utility(v, b, R) for b in bids])
    br = bt.best_response(v, R)
    assert br.utility == pytest.approx(u.max(), abs=1e-6)
    assert _expected_utility(v, br.bid, R) == pytest.approx(br.utility, abs=1e-9)


def test_best_response_domain():
    with pytest.raises(ValueError):
        bt.best_response(1.2, 0.5)


def test_threshold():
    th = bt.threshold(0.5)
    assert th.switches
    assert th.vhat == pytest.approx(0.7071068, abs=1e-6)
    assert th.vhat / 2 == pytest.approx(0.3536, abs=1e-4)
    for R in (0.3, 0.4, 0.6):
        t = bt.threshold(R)
        assert R < t.vhat <= 1.0


def test_threshold_no_switch():
    th = bt.threshold(0.9)
    assert (th.vhat, th.switches) == (1.0, False)


def test_pooling():
    buy, sell = bt.pooling_strategies(0.5)
    assert bt.price(sell(0.3), buy(0.7), 0.5) == 0.5
    assert bt.price(sell(0.3), buy(0.4), 0.5) is None
    w = bt.welfare("pooling", 0.5, 400_000, seed=1)
    assert w.closed_form == pytest.approx(1 / 8)
    rng = np.random.default_rng(0)
    v, c = rng.random(400_000), rng.random(400_000)
    trade = (np.where(v >= 0.5, 0.5, 0) >= np.where(c <= 0.5, 0.5, 1.0))
    assert trade.mean() == pytest.approx(0.25, abs=4 * 0.5 / math.sqrt(v.size))


def _linear_best_bid(v):
    # seller asks s = 2c/3 + 1/4, i.e. s ~ U(1/4, 11/12) with density 3/2; price (b + s)/2
    def eu(b):
        top = min(b, 11 / 12)
        if top <= 0.25:
            return 0.0
        return 1.5 * quad(lambda s: v - 0.5 * (b + s), 0.25, top)[0]
    bids = np.linspace(0, 1, 4001)
    return bids[np.argmax([eu(b) for b in bids])]


@pytest.mark.parametrize("v", [0.3, 0.5, 0.8])
def test_linear_bid_is_best_response(v):
    assert _linear_best_bid(v) == pytest.approx(float(bt.linear_bid(v)), abs=5e-4)


@pytest.mark.parametrize("mech, value", [("first_best", 1 / 6), ("linear_eq", 9 / 64), ("posted", 1 / 8), ("pooling", 1 / 8)])
def test_welfare(mech, value):
    w = bt.welfare(mech, 0.5, 1_000_000, seed=3)
    assert w.closed_form == pytest.approx(value)
    assert w.mc_estimate == pytest.approx(value, abs=4 * w.mc_se)


def test_welfare_unknown():
    with pytest.raises(ValueError):
        bt.welfare_closed_form("vcg")


def test_posted_price_optimum():
    assert bt.optimal_posted_price() == pytest.approx(0.5, abs=1e-9)
    best = bt.welfare_closed_form("posted", 0.5)
    for R in np.linspace(0.05, 0.95, 19):
        assert best >= bt.welfare_closed_form("posted", R)
    assert best / bt.welfare_closed_form("linear_eq") == pytest.approx(0.889, abs=1e-3)


def test_simulate_prices():
    rows = bt.simulate_prices(2_000, seed=4)
    assert len(rows) == 2_000 and rows[0].t == 1
    for r in rows:
        assert r.price_pooling in (None, 0.5)
        assert (r.price_kda is not None) == (r.v >= r.c + 0.25 - 1e-12)
    assert rows == bt.simulate_prices(2_000, seed=4)


def test_kda_frequency():
    f, se = bt.kda_trade_frequency(1_000_000, seed=0)
    assert f == pytest.approx(9 / 32, abs=3 * se)
