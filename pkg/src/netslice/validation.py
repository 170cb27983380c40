"""Closed-form checks run by the ``validate`` command."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import special

from .core import McPlan, exp_integral_e1
from .embb import orth_rate, simulate_outage, threshold_snr
from .mmtc import error_rate_orth, single_device_error
from .slicing_embb_urllc import embb_error_bound, puncture_activation, activation_floor
from .urllc import closed_form_rate_single_channel, inverse_moment, max_rate, rate_lower_bound_markov


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def check_e1() -> Check:
    xs = [1e-8, 1e-3, 0.0010005, 0.5, 1.0, 1.5, 7.0, 40.0]
    worst = max(_rel(exp_integral_e1(x), float(special.exp1(x))) for x in xs)
    return Check("exponential integral E1", worst < 1e-12, f"max rel err {worst:.2e}")


def check_embb_chain() -> Check:
    worst = 0.0
    for gamma_b in (10.0, 100.0, 316.23):
        for eps_b in (1e-2, 1e-3, 1e-4):
            g_min = -gamma_b * math.log1p(-eps_b)
            ref = math.log2(1.0 + gamma_b / float(special.exp1(g_min / gamma_b)))
            worst = max(worst, _rel(orth_rate(gamma_b, eps_b), ref))
    return Check("eMBB orthogonal rate chain", worst < 1e-9, f"max rel err {worst:.2e}")


def check_embb_outage(plan: McPlan) -> Check:
    eps_b = 1e-2
    sim = simulate_outage(10.0, eps_b, plan)
    sigma = math.sqrt(eps_b * (1 - eps_b) / plan.trials)
    return Check("eMBB simulated outage", abs(sim - eps_b) <= 3 * sigma,
                 f"{sim:.6g} vs {eps_b} (3 sigma {3 * sigma:.2g})")


def check_urllc_single_channel(plan: McPlan) -> Check:
    eps_u = 1e-2
    mc = max_rate(1, 100.0, eps_u, None, plan)
    ref = closed_form_rate_single_channel(100.0, eps_u)
    return Check("URLLC single-channel rate", _rel(mc, ref) < 0.05, f"{mc:.6g} vs {ref:.6g}")


def check_markov_expectation() -> Check:
    got = inverse_moment(1.0, 0.0, 1.0)
    ref = math.e * float(special.exp1(1.0))
    return Check("Markov bound expectation", _rel(got, ref) < 1e-9, f"{got:.12g} vs {ref:.12g}")


def check_markov_below_mc(plan: McPlan) -> Check:
    eps_u, g_tar = 1e-2, 1.0
    lb = rate_lower_bound_markov(100.0, eps_u, 2, g_tar).rate
    mc = max_rate(2, 100.0, eps_u, (g_tar, 1.0), plan)
    return Check("Markov bound below simulated rate", lb <= mc, f"{lb:.6g} <= {mc:.6g}")


def check_sic_activation() -> Check:
    eps_b, eps_u, a_u, s = 1e-3, 1e-5, 0.1, 5
    a_b = activation_floor(eps_b, eps_u, a_u, s)
    err = embb_error_bound(a_b, eps_u, a_u, s)
    return Check("SIC activation meets eps_b", abs(err - eps_b) < 1e-12, f"bound {err:.15g}")


def check_puncture_no_urllc() -> Check:
    from .config import ScenarioConfig

    cfg = ScenarioConfig(10.0, 100.0, 1.0, 1e-3, 1e-5, 0.1, 10, 5, 0.0, 0.04)
    a_b = puncture_activation(0, cfg)
    return Check("puncturing without URLLC", a_b is not None and abs(a_b - (1 - 1e-3)) < 1e-15,
                 f"a_b={a_b}")


def check_mmtc_lone_device(plan: McPlan) -> Check:
    lam, r_m, gamma_m = 0.01, 0.04, 10 ** 0.5
    sim = error_rate_orth(lam, r_m, gamma_m, plan)
    ref = single_device_error(r_m, gamma_m)
    sigma = math.sqrt(ref * (1 - ref) / max(lam * plan.trials, 1.0))
    # second devices interfere with probability about lam
    tol = 3 * sigma + lam
    return Check("mMTC lone-device limit", abs(sim - ref) <= tol, f"{sim:.6g} vs {ref:.6g} (tol {tol:.2g})")


def check_threshold_small_eps() -> Check:
    got = threshold_snr(10.0, 1e-12)
    return Check("eMBB threshold precision", _rel(got, 1e-11) < 1e-9, f"{got:.15g}")


def run_checks(plan: McPlan) -> list[Check]:
    checks: list[Callable[[], Check]] = [
        check_e1,
        check_embb_chain,
        lambda: check_embb_outage(plan),
        lambda: check_urllc_single_channel(plan),
        check_markov_expectation,
        lambda: check_markov_below_mc(plan),
        check_sic_activation,
        check_puncture_no_urllc,
        lambda: check_mmtc_lone_device(plan),
        check_threshold_small_eps,
    ]
    return [c() for c in checks]
