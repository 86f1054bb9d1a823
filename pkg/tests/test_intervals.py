import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from refrule.intervals import (
    Constant, DynamicsSpec, FixedWidth, IndependentSorted, Interval, Normal, OrderStatsUniform,
    TwoPoint, Uniform, dynamics_to_dict, parse_base_dist, parse_scalar_dist, project, random_walk,
    sample_exogenous_intervals, sample_interval, stability_check, uniform_benchmark,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


@pytest.mark.parametrize("x, expected", [(0.5, 0.5), (0.7, 0.6), (0.1, 0.3)])
def test_project_examples(x, expected):
    assert project(Interval(0.3, 0.6), x) == expected


def test_interval_rejects_inverted():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


@st.composite
def intervals(draw):
    a, b = draw(finite), draw(finite)
    return Interval(min(a, b), max(a, b))


@given(intervals(), finite)
def test_project_idempotent_and_feasible(iv, x):
    y = project(iv, x)
    assert iv.lo <= y <= iv.hi
    assert project(iv, y) == y


@given(intervals(), finite, finite)
def test_project_is_1_lipschitz(iv, x, y):
    assert abs(project(iv, x) - project(iv, y)) <= abs(x - y)


@given(intervals(), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_project_translation_covariant(iv, x, c):
    lhs = project(iv.shifted(c), x + c)
    rhs = project(iv, x) + c
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(c) + abs(x) + abs(iv.lo) + abs(iv.hi)))


def test_sample_interval_constants():
    spec = DynamicsSpec(Constant(0), Constant(0), FixedWidth(Constant(0.5), 0.2))
    iv = sample_interval(spec, 123.0, np.random.default_rng(0))
    assert iv.lo == pytest.approx(0.4) and iv.hi == pytest.approx(0.6)


def test_sample_interval_random_walk_shift():
    spec = random_walk(FixedWidth(Constant(0.0), 0.2))
    iv = sample_interval(spec, 1.0, np.random.default_rng(0))
    assert iv.lo == pytest.approx(0.9) and iv.hi == pytest.approx(1.1)


def test_sample_interval_deterministic():
    spec = uniform_benchmark()
    a = sample_interval(spec, 0.3, np.random.default_rng(42))
    b = sample_interval(spec, 0.3, np.random.default_rng(42))
    assert a == b


@pytest.mark.parametrize("base", [
    OrderStatsUniform(0, 1),
    IndependentSorted(Normal(0, 1), Uniform(-1, 3)),
    FixedWidth(TwoPoint(-1, 0.3, 2), 0.7),
])
def test_sampled_intervals_ordered(base):
    spec = DynamicsSpec(Constant(0.5), Normal(0, 1), base)
    rng = np.random.default_rng(1)
    lo, hi = base.sample(rng, 10_000)
    assert np.all(lo <= hi)
    for _ in range(50):
        iv = sample_interval(spec, float(rng.normal()), rng)
        assert iv.lo <= iv.hi


def test_uniform_benchmark_moments():
    # min/max of two U(0,1): means 1/3 and 2/3; P(lo <= 1/2 <= hi) = 1/2
    n = 400_000
    lo, hi = sample_exogenous_intervals(uniform_benchmark(), np.random.default_rng(3), n)
    tol = 4 * 0.5 / math.sqrt(n)
    assert lo.mean() == pytest.approx(1 / 3, abs=tol)
    assert hi.mean() == pytest.approx(2 / 3, abs=tol)
    assert np.mean((lo <= 0.5) & (0.5 <= hi)) == pytest.approx(0.5, abs=tol)


def test_uniform_benchmark_fields():
    spec = uniform_benchmark()
    assert spec.a_dist == Constant(0) and spec.b_dist == Constant(0)
    assert spec.base == OrderStatsUniform(0, 1) and spec.p == 2


def _uniform_second_moment(a, b, n=200_000):
    # midpoint-rule quadrature of x^2 / (b - a)
    x = a + (np.arange(n) + 0.5) * (b - a) / n
    return float(np.mean(x * x))


def test_stability_examples():
    r = stability_check(DynamicsSpec(Constant(0), Constant(0), OrderStatsUniform(0, 1), p=2))
    assert r.moment_estimate == 0 and r.passes
    r = stability_check(DynamicsSpec(Uniform(0.9, 1.1), Constant(0), OrderStatsUniform(0, 1), p=2))
    assert r.moment_estimate == pytest.approx(_uniform_second_moment(0.9, 1.1), rel=1e-8)
    assert r.moment_estimate == pytest.approx(3.01 / 3)
    assert not r.passes
    r = stability_check(DynamicsSpec(Constant(0.5), Constant(0), OrderStatsUniform(0, 1), p=4))
    assert r.moment_estimate == pytest.approx(0.0625) and r.passes


def test_uniform_abs_moment_straddling_zero():
    d = Uniform(-1.0, 0.5)
    x = np.linspace(-1.0, 0.5, 2_000_001)
    assert d.abs_moment(3.0) == pytest.approx(np.trapezoid(np.abs(x) ** 3, x) / 1.5, rel=1e-9)


def test_stability_normal_is_sampled_with_margin():
    r = stability_check(DynamicsSpec(Normal(0.0, 0.5), Constant(0), OrderStatsUniform(0, 1), p=2))
    assert not r.closed_form
    assert r.moment_estimate == pytest.approx(0.25, abs=5 * r.standard_error)
    assert r.passes


def test_stability_rejects_random_walk():
    with pytest.raises(ValueError):
        stability_check(random_walk())


def test_random_walk_requires_unit_persistence():
    with pytest.raises(ValueError):
        DynamicsSpec(Constant(0.9), Constant(0), OrderStatsUniform(0, 1), random_walk=True)


@pytest.mark.parametrize("bad", [
    lambda: Uniform(1, 0), lambda: TwoPoint(0, 1.5, 1), lambda: Normal(0, -1),
    lambda: FixedWidth(Constant(0), -0.1), lambda: DynamicsSpec(Constant(0), Constant(0), OrderStatsUniform(0, 1), p=1.5),
])
def test_parameter_validation(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("text", [
    "const(0.5)", "uniform(0,1)", "normal(0.1, 2)", "twopoint(-1,0.25,3)",
])
def test_scalar_syntax_roundtrip(text):
    d = parse_scalar_dist(text)
    assert parse_scalar_dist(str(d)) == d


@pytest.mark.parametrize("text", [
    "orderstats(0,1)", "sorted(uniform(0,1); normal(0,1))", "width(normal(0.5,0.1);0.2)",
])
def test_base_syntax_roundtrip(text):
    d = parse_base_dist(text)
    assert parse_base_dist(str(d)) == d


@pytest.mark.parametrize("text", ["const()", "gamma(1,2)", "uniform(1)", "width(const(0))", "sorted(const(0))", "const(x)"])
def test_syntax_errors(text):
    with pytest.raises(ValueError):
        try:
            parse_scalar_dist(text)
        except ValueError:
            parse_base_dist(text)


def test_dynamics_to_dict():
    d = dynamics_to_dict(uniform_benchmark())
    assert d["base"] == "orderstats(0.0,1.0)" and d["random_walk"] is False
