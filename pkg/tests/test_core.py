import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from netslice.core import (McPlan, SearchBracket, binomial_halfwidth, empirical_quantile,
                           exp_integral_e1, map_batches, max_feasible, quantile_rank,
                           sample_exp_gain, smallest_k)

# mpmath at 30 digits
E1_AT_0_0010005 = 6.331039988844519


def test_e1_reference_point():
    assert exp_integral_e1(0.0010005) == pytest.approx(E1_AT_0_0010005, rel=1e-12)


def test_e1_small_argument_series():
    x = 1e-6
    assert exp_integral_e1(x) == pytest.approx(-0.5772156649015329 - math.log(x) + x, rel=1e-12)


@given(st.floats(min_value=1e-10, max_value=600.0))
def test_e1_matches_scipy(x):
    assert exp_integral_e1(x) == pytest.approx(float(special.exp1(x)), rel=1e-12)


@given(st.floats(min_value=1e-6, max_value=500.0))
def test_e1_below_envelope(x):
    assert exp_integral_e1(x) < math.exp(-x) / x


def test_e1_rejects_nonpositive():
    with pytest.raises(ValueError):
        exp_integral_e1(0.0)


def test_exp_gain_mean():
    rng = np.random.default_rng(5)
    draws = sample_exp_gain(1.0, rng, 10**6)
    assert abs(draws.mean() - 1.0) < 0.005


def test_quantile_rank_convention():
    assert quantile_rank(1000, 1e-3) == 1
    assert quantile_rank(1000, 0.0015) == 2
    assert quantile_rank(10, 0.5) == 5


def test_empirical_quantile_lower_order_statistic():
    assert empirical_quantile([5.0, 1.0, 3.0, 2.0, 4.0], 0.4) == 2.0
    assert empirical_quantile([5.0, 1.0, 3.0, 2.0, 4.0], 0.41) == 3.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.integers(1, 5))
def test_smallest_k_chunks(values, parts):
    k = max(1, len(values) // 3)
    chunks = np.array_split(np.array(values), parts)
    assert np.array_equal(smallest_k(chunks, k), np.sort(values)[:k])


@settings(max_examples=200)
@given(st.floats(0.0, 100.0), st.floats(0.001, 1.0))
def test_max_feasible_finds_threshold(threshold, tol):
    bracket = SearchBracket(0.0, 100.0, tol)
    found = max_feasible(lambda x: x <= threshold, bracket)
    assert found <= threshold + 1e-12
    assert threshold - found <= tol or threshold >= 100.0


def test_max_feasible_infeasible_and_full():
    assert max_feasible(lambda x: False, SearchBracket(0.0, 1.0, 1e-6)) is None
    assert max_feasible(lambda x: True, SearchBracket(0.0, 1.0, 1e-6)) == 1.0


@settings(max_examples=200)
@given(st.floats(1e-5, 1e3))
def test_geometric_bracket_relative_accuracy(threshold):
    found = max_feasible(lambda x: x <= threshold, SearchBracket.scaled(1e3, rel_tol=1e-6, floor=1e-9))
    if threshold >= 1e3:
        return
    assert found <= threshold
    assert found >= threshold * (1 - 2e-6)


def test_geometric_bracket_nothing_feasible():
    assert max_feasible(lambda x: False, SearchBracket.scaled(10.0, floor=1e-6)) in (None, 0.0)


def test_plan_batches_and_seeds():
    plan = McPlan(10, master_seed=3, batch=4)
    assert plan.batch_sizes() == [4, 4, 2]
    a = plan.rng("x", 1).random(3)
    b = McPlan(10, master_seed=3, batch=4, workers=8).rng("x", 1).random(3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, plan.rng("y", 1).random(3))


@pytest.mark.parametrize("bad", [dict(trials=0), dict(trials=5, master_seed=-1),
                                 dict(trials=5, master_seed=2**64), dict(trials=5, batch=6),
                                 dict(trials=5, workers=0)])
def test_plan_rejects(bad):
    with pytest.raises(ValueError):
        McPlan(**bad)


def test_map_batches_order_independent_of_workers():
    fn = lambda i, n: (i, float(McPlan(100, 9, batch=7).rng("t", i).random(n).sum()))
    assert map_batches(McPlan(100, 9, batch=7), fn) == map_batches(McPlan(100, 9, batch=7, workers=4), fn)


def test_binomial_halfwidth():
    assert binomial_halfwidth(0.25, 10_000) == pytest.approx(3 * math.sqrt(0.25 * 0.75 / 10_000))
