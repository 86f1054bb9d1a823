import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from refrule.costs import (
    AsymmetricQuadratic, PseudoHuber, Quadratic, SquaredDistanceTo, check_axioms, eval_cost,
    is_translation_invariant, parse_cost,
)

TI_COSTS = [Quadratic(), PseudoHuber(1.0), PseudoHuber(0.1), AsymmetricQuadratic(1.0, 2.0)]
real = st.floats(-100, 100, allow_nan=False)


def test_eval_examples():
    assert eval_cost(Quadratic(), 0.2, 0.5) == pytest.approx(0.09)
    assert eval_cost(PseudoHuber(1.0), 0.0, 1.0) == pytest.approx(math.sqrt(2) - 1)
    assert eval_cost(PseudoHuber(1.0), 0.0, 1.0) == pytest.approx(0.414214, abs=1e-6)
    assert eval_cost(AsymmetricQuadratic(1, 2), 0, -0.5) == pytest.approx(0.25)
    assert eval_cost(AsymmetricQuadratic(1, 2), 0, 0.5) == pytest.approx(0.5)
    assert eval_cost(SquaredDistanceTo(0.5), 0.0, 1.0) == pytest.approx(0.25)


def test_translation_invariance_flags():
    assert is_translation_invariant(Quadratic())
    assert is_translation_invariant(AsymmetricQuadratic(1, 2))
    assert is_translation_invariant(PseudoHuber(0.3))
    assert not is_translation_invariant(SquaredDistanceTo(0.5))


@pytest.mark.parametrize("cost", TI_COSTS)
@given(x=real, y=real, s=real)
def test_translation_invariant_costs(cost, x, y, s):
    assert eval_cost(cost, x + s, y + s) == pytest.approx(eval_cost(cost, x, y), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("cost", TI_COSTS)
@given(x=real, y=real)
def test_nonnegative_and_zero_for_inaction(cost, x, y):
    assert eval_cost(cost, x, y) >= 0
    assert eval_cost(cost, x, x) == 0


@pytest.mark.parametrize("cost", [Quadratic(), PseudoHuber(0.7)])
@given(x=real, y=real)
def test_symmetric_costs(cost, x, y):
    assert eval_cost(cost, x, y) == pytest.approx(eval_cost(cost, y, x))


@pytest.mark.parametrize("cost", TI_COSTS)
def test_submodularity_on_grid(cost):
    g = np.linspace(-1, 1, 41)
    h = g[1] - g[0]
    c = cost(g[:, None], g[None, :])
    mixed = (c[1:, 1:] - c[1:, :-1] - c[:-1, 1:] + c[:-1, :-1]) / h ** 2
    dyy = (c[:, 2:] - 2 * c[:, 1:-1] + c[:, :-2]) / h ** 2
    assert np.all(mixed <= 1e-9)
    assert np.all(dyy >= -1e-9)


def test_check_axioms_examples():
    assert check_axioms(Quadratic(), [-1, 0, 1]) == []
    v = check_axioms(SquaredDistanceTo(0.5), [0, 0.5, 1])
    assert "inaction cost nonzero at x=0" in v
    assert check_axioms(PseudoHuber(0.1), np.linspace(-1, 1, 101)) == []
    assert check_axioms(AsymmetricQuadratic(1, 3), np.linspace(-1, 1, 51)) == []


def test_check_axioms_needs_three_points():
    with pytest.raises(ValueError):
        check_axioms(Quadratic(), [0, 1])


@pytest.mark.parametrize("text, expected", [
    ("quad", Quadratic()), ("huber(0.5)", PseudoHuber(0.5)), ("asym(1,2)", AsymmetricQuadratic(1, 2)),
    ("sqdist(0.5)", SquaredDistanceTo(0.5)),
])
def test_parse_cost(text, expected):
    assert parse_cost(text) == expected
    assert parse_cost(str(expected)) == expected


@pytest.mark.parametrize("text", ["cubic", "huber()", "huber(-1)", "asym(1)"])
def test_parse_cost_errors(text):
    with pytest.raises(ValueError):
        parse_cost(text)
