import math

import pytest
from hypothesis import given, strategies as st
from scipy.stats import binom

from netslice.core import McPlan
from netslice.embb import orth_rate, power_cap_for_activation
from netslice.region import Scheme
from netslice.slicing_embb_urllc import (InfeasibleError, UrllcContext, _puncture_solution, _sic_solution,
                                         activation_floor, embb_error_bound, noma_puncture_point,
                                         noma_sic_point, oma_rate_at, oma_region, puncture_activation,
                                         region_noma, sic_ab_constraint, sic_embb_error_bound)
from conftest import urllc_cfg

# mpmath at 30 digits: (1 - 1e-3)/(1 - 1e-5 (1 - 0.9^5))
SIC_AB_FIG4 = 0.9990040910216531
# Bin(5, 0.1) tail beyond 3 by hand: 5 * 0.1^4 * 0.9 + 0.1^5
TAIL_BEYOND_3 = 4.6e-4

PLAN = McPlan(100_000, master_seed=21)


def quick_cfg(**kw):
    base = dict(eps_b=0.05, eps_u=0.01)
    base.update(kw)
    return urllc_cfg(**base)


@pytest.fixture(scope="module")
def ctx():
    return UrllcContext(quick_cfg(), PLAN)


def test_sic_ab_reference():
    assert sic_ab_constraint(urllc_cfg()) == pytest.approx(SIC_AB_FIG4, rel=1e-14)


def test_activation_floor_trivial_cases():
    assert activation_floor(1e-3, 0.0, 0.1, 5) == 1 - 1e-3
    assert activation_floor(1e-3, 1e-5, 0.0, 5) == 1 - 1e-3


def test_activation_floor_infeasible():
    with pytest.raises(InfeasibleError):
        activation_floor(1e-3, 0.5, 1.0, 1)
    with pytest.raises(InfeasibleError):
        activation_floor(0.125, 0.125, 1.0, 1)


# configs require eps_u < eps_b; eps_u = eps_b with a_u = 1 makes the floor exactly 1
@given(st.floats(1e-6, 0.2), st.floats(0.0, 0.99), st.floats(0.0, 1.0), st.integers(1, 20))
def test_floor_meets_eps_b_exactly(eps_b, ratio, a_u, s):
    eps_u = ratio * eps_b
    a_b = activation_floor(eps_b, eps_u, a_u, s)
    assert embb_error_bound(a_b, eps_u, a_u, s) == pytest.approx(eps_b, abs=1e-12)


def test_error_bound_trivial_cases():
    assert embb_error_bound(0.97, 1e-5, 0.0, 5) == pytest.approx(0.03)
    assert embb_error_bound(0.3, 1.0, 1.0, 3) == 1.0
    cfg = urllc_cfg()
    assert sic_embb_error_bound(sic_ab_constraint(cfg), cfg) == pytest.approx(cfg.eps_b, abs=1e-12)


def test_puncture_activation_fig4():
    cfg = urllc_cfg()
    assert [puncture_activation(k, cfg) is None for k in range(4)] == [True, True, True, False]
    assert float(binom.sf(3, 5, 0.1)) == pytest.approx(TAIL_BEYOND_3, rel=1e-12)
    expected = 1 - (1e-3 - TAIL_BEYOND_3) / (1 - TAIL_BEYOND_3)
    assert puncture_activation(3, cfg) == pytest.approx(expected, rel=1e-12)


def test_puncture_activation_without_urllc():
    assert puncture_activation(0, urllc_cfg(a_u=0.0)) == pytest.approx(1 - 1e-3, rel=1e-15)


def test_oma_region_shape(ctx):
    cfg = ctx.cfg
    curve = oma_region(cfg, PLAN, ctx)
    assert curve.scheme is Scheme.H_OMA and len(curve) == cfg.f + 1
    per = orth_rate(cfg.gamma_b, cfg.eps_b)
    by_fu = sorted(zip(curve.diagnostics, curve.points), key=lambda t: t[0]["f_u"])
    assert by_fu[0][1] == (cfg.f * per, 0.0)
    assert by_fu[-1][1] == (0.0, ctx.orth_rate(cfg.f))
    xs = [p[0] for _, p in by_fu]
    ys = [p[1] for _, p in by_fu]
    assert all(a > b for a, b in zip(xs, xs[1:]))
    assert all(a <= b for a, b in zip(ys, ys[1:]))
    assert all(abs((xs[i] - xs[i + 1]) - per) < 1e-9 for i in range(cfg.f))


def test_oma_interpolation(ctx):
    curve = oma_region(ctx.cfg, PLAN, ctx)
    assert oma_rate_at(curve, 0.0) == pytest.approx(ctx.cfg.f * orth_rate(ctx.cfg.gamma_b, ctx.cfg.eps_b))
    assert oma_rate_at(curve, ctx.orth_rate(ctx.cfg.f) * 1.01) is None


def test_sic_zero_rate_uses_full_cap(ctx):
    cfg = ctx.cfg
    expected = cfg.f * math.log2(1 + power_cap_for_activation(1 - cfg.eps_b, cfg.gamma_b))
    assert noma_sic_point(0.0, cfg, PLAN, ctx) == pytest.approx(expected, rel=1e-12)


def test_sic_power_bound_when_urllc_loose(ctx):
    cfg = ctx.cfg
    cap = power_cap_for_activation(sic_ab_constraint(cfg), cfg.gamma_b)
    assert noma_sic_point(0.05, cfg, PLAN, ctx) == pytest.approx(cfg.f * math.log2(1 + cap), rel=1e-12)


def test_sic_boundary(ctx):
    top = ctx.orth_rate(ctx.cfg.f)
    assert noma_sic_point(top * 1.0001, ctx.cfg, PLAN, ctx) is None
    near = noma_sic_point(top * 0.995, ctx.cfg, PLAN, ctx)
    assert 0 < near < 0.2 * noma_sic_point(0.0, ctx.cfg, PLAN, ctx)
    sol = _sic_solution(top, ctx.cfg, ctx)
    assert sol.rate == 0.0 and sol.diagnostics["binding"] == "URLLC-binding"


def test_sic_nonincreasing_and_puncture_below(ctx):
    top = ctx.orth_rate(ctx.cfg.f)
    grid = [top * i / 12 for i in range(13)]
    sic = [noma_sic_point(r, ctx.cfg, PLAN, ctx) for r in grid]
    pun = [noma_puncture_point(r, ctx.cfg, PLAN, ctx) for r in grid]
    assert all(a >= b for a, b in zip(sic, sic[1:]))
    assert all(p <= s + 1e-12 for p, s in zip(pun, sic))


def test_puncture_reports_k(ctx):
    sol = _puncture_solution(0.5, ctx.cfg, ctx)
    k = sol.diagnostics["k"]
    assert puncture_activation(k, ctx.cfg) is not None
    assert sol.rate == pytest.approx((1 - k / ctx.cfg.s) * ctx.cfg.f * math.log2(1 + sol.g_tar))


def test_puncture_without_urllc_matches_full_rate():
    cfg = quick_cfg(a_u=0.0)
    c = UrllcContext(cfg, PLAN)
    expected = cfg.f * math.log2(1 + power_cap_for_activation(1 - cfg.eps_b, cfg.gamma_b))
    assert noma_puncture_point(0.0, cfg, PLAN, c) == pytest.approx(expected, rel=1e-12)


def test_exact_activity_grid_is_feasible(ctx):
    r_u = 0.9 * ctx.orth_rate(ctx.cfg.f)
    sol = _sic_solution(r_u, ctx.cfg, ctx, exact_activity=True)
    assert sol is not None
    assert ctx.full.rate_quantile(ctx.cfg.eps_u, sol.g_tar, sol.a_b) >= r_u


def test_region_noma_curves(ctx):
    top = ctx.orth_rate(ctx.cfg.f)
    grid = [top * i / 8 for i in range(9)]
    sic, pun, lb = region_noma(ctx.cfg, PLAN, grid, ctx)
    assert (sic.scheme, pun.scheme, lb.scheme) == (Scheme.H_NOMA_SIC, Scheme.H_NOMA_PUNCTURE, Scheme.APPENDIX_A_LB)
    sic_at = dict((y, x) for x, y in sic.points)
    for x, y in lb.points:
        assert x <= sic_at[y] + 1e-9
    for curve in (sic, pun, lb):
        frontier = sorted(curve.points, key=lambda p: p[1])
        assert all(a[0] >= b[0] - 1e-9 for a, b in zip(frontier, frontier[1:]))
        for d in curve.diagnostics:
            assert {"g_tar", "a_b", "f_u"} <= set(d)


def test_region_noma_empty_grid(ctx):
    assert all(len(c) == 0 for c in region_noma(ctx.cfg, PLAN, [], ctx))


def test_region_noma_rejects_infeasible_sic():
    cfg = urllc_cfg(eps_b=2e-3, eps_u=1e-3, a_u=1.0, s=1, fast=1).replace(eps_u=2e-3)
    with pytest.raises(InfeasibleError):
        region_noma(cfg, McPlan(100_000, 1), [0.1])
