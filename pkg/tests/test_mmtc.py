import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netslice.core import McPlan, SearchBracket
from netslice.mmtc import (DeviceDraws, TrialOutcome, _orth_totals, error_rate_orth, max_arrival_orth,
                           orth_run_lengths, sic_decode_orth, single_device_error, sinr_threshold,
                           suffix_sums)

# mpmath at 30 digits: 1 - exp(-(2^0.04 - 1)/10^0.5)
LONE_DEVICE_ERROR = 0.008850970089288018

gains_st = st.lists(st.floats(1e-3, 1e3), min_size=0, max_size=30)


def test_decode_examples():
    assert sic_decode_orth([1.0], 1.0) == 1
    assert sic_decode_orth([1.0, 3.0], 1.0) == 2
    assert sic_decode_orth([1.0, 0.5], 1.0) == 0
    assert sic_decode_orth([], 0.3) == 0


@given(gains_st, st.floats(0.01, 3.0))
def test_kernel_matches_reference(gains, r_m):
    g = np.sort(np.array(gains, dtype=float))[::-1].copy()
    runs = orth_run_lengths(g, suffix_sums(g), sinr_threshold(r_m))
    assert runs[0] == sic_decode_orth(gains, r_m)


@given(gains_st, st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_decoded_nonincreasing_in_rate(gains, r1, r2):
    lo, hi = sorted((r1, r2))
    assert sic_decode_orth(gains, hi) <= sic_decode_orth(gains, lo)


@given(gains_st, st.floats(0.01, 2.0), st.floats(1.0, 100.0))
def test_scaling_up_keeps_decodability(gains, r_m, c):
    # with less relative noise every prefix device keeps its SINR margin
    assert sic_decode_orth([c * g for g in gains], r_m) >= sic_decode_orth(gains, r_m)


def test_trial_outcome_invariants():
    with pytest.raises(ValueError):
        TrialOutcome(2, 3)
    with pytest.raises(ValueError):
        TrialOutcome(2, 1, embb_decoded=True, embb_active=False)


def test_lone_device_closed_form():
    assert single_device_error(0.04, 10 ** 0.5) == pytest.approx(LONE_DEVICE_ERROR, rel=1e-12)


def test_batch_totals_match_scalar_reference():
    plan = McPlan(3000, master_seed=3, batch=1000)
    draws = DeviceDraws(3.0, plan)
    lam, r_m = 4.0, 0.3
    tot = _orth_totals(draws, lam, r_m)
    decoded = active = 0
    for i, n in enumerate(plan.batch_sizes()):
        batch = draws.batch(i, n, lam)
        for t in range(n):
            g = batch.active(t)
            active += g.size
            decoded += sic_decode_orth(g, r_m)
    assert (tot.decoded, tot.active) == (decoded, active)


def test_arrivals_poisson_counts():
    plan = McPlan(200_000, master_seed=9)
    draws = DeviceDraws(3.0, plan)
    lam = 2.5
    counts = np.concatenate([draws.batch(i, n, lam).counts for i, n in enumerate(plan.batch_sizes())])
    assert abs(counts.mean() - lam) < 4 * math.sqrt(lam / plan.trials)
    assert abs(counts.var() - lam) < 0.05


def test_arrivals_do_not_depend_on_query_order():
    plan = McPlan(500, master_seed=1)
    a = DeviceDraws(3.0, plan)
    b = DeviceDraws(3.0, plan)
    a.arrivals(0, 500, 200.0)
    small_a = a.batch(0, 500, 0.7)
    small_b = b.batch(0, 500, 0.7)
    for t in range(500):
        assert np.array_equal(small_a.active(t), small_b.active(t))


def test_error_rate_edges(small_plan):
    assert error_rate_orth(0.0, 0.04, 3.0, small_plan) == 0.0
    assert error_rate_orth(3.0, 40.0, 3.0, small_plan) == 1.0
    with pytest.raises(ValueError):
        error_rate_orth(-1.0, 0.04, 3.0, small_plan)


def test_error_rate_small_lambda_limit():
    plan = McPlan(10**6, master_seed=2)
    lam = 0.005
    err = error_rate_orth(lam, 0.04, 10 ** 0.5, plan)
    sigma = math.sqrt(LONE_DEVICE_ERROR / (lam * plan.trials))
    assert abs(err - LONE_DEVICE_ERROR) <= 3 * sigma + lam


def test_error_rate_nondecreasing_in_lambda():
    plan = McPlan(50_000, master_seed=4)
    draws = DeviceDraws(10 ** 0.5, plan)
    errs = [error_rate_orth(lam, 0.04, 10 ** 0.5, plan, draws) for lam in (1, 5, 20, 50, 80, 120)]
    assert all(a <= b + 0.005 for a, b in zip(errs, errs[1:]))


def test_error_rate_variance_shrinks():
    spread = []
    for trials in (2_000, 50_000):
        vals = [error_rate_orth(20.0, 0.04, 3.0, McPlan(trials, master_seed=s)) for s in range(6)]
        spread.append(np.std(vals))
    assert spread[1] < spread[0]


def test_max_arrival_infeasible_lone_device(small_plan):
    assert max_arrival_orth(3.0, 0.1, 3.0, small_plan) is None


def test_max_arrival_always_feasible(small_plan):
    bracket = SearchBracket(0.0, 50.0, 1e-3)
    assert max_arrival_orth(0.04, 0.999999, 3.0, small_plan, bracket) == 50.0


def test_max_arrival_is_the_boundary():
    plan = McPlan(50_000, master_seed=7)
    draws = DeviceDraws(10 ** 0.5, plan)
    lam = max_arrival_orth(0.04, 0.1, 10 ** 0.5, plan, draws=draws)
    assert 10.0 < lam < 500.0
    assert error_rate_orth(lam, 0.04, 10 ** 0.5, plan, draws) <= 0.1
    assert error_rate_orth(lam * 1.01, 0.04, 10 ** 0.5, plan, draws) > 0.1
