"""eMBB and mMTC sharing one channel: rate vs supported arrival rate.

Orthogonal slicing splits time between the services. Non-orthogonal slicing
lets the eMBB user transmit on top of the mMTC devices and slots its
decoding into the strongest-first cancellation order. Bounds on the
non-orthogonal curve come from an eMBB-first decoder (lower) and from the
devices that can never be decoded ahead of the eMBB (upper).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy.special import gammaincc
from scipy.stats import poisson

from .config import ScenarioConfig
from .core import McPlan, SearchBracket, map_batches, max_feasible
from .embb import EmbbPolicy, orth_rate, power_cap_for_activation
from .mmtc import (
    DeviceDraws,
    TrialOutcome,
    error_rate_orth,
    max_arrival_orth,
    orth_run_lengths,
    sic_decode_orth,
    single_device_error,
    sinr_threshold,
    suffix_sums,
    trial_gains,
)
from .region import RegionCurve, Scheme

log = logging.getLogger(__name__)

DEFAULT_RHO = tuple(np.logspace(-3.0, 0.0, 24))
POISSON_TAIL = 1e-12


def activation_grid(eps_b: float) -> tuple[float, ...]:
    return (1.0 - eps_b, 1.0 - eps_b / 2, 1.0 - eps_b / 10, 1.0 - eps_b / 100)


def default_policy_grid(cfg: ScenarioConfig, rho: Sequence[float] = DEFAULT_RHO) -> list[EmbbPolicy]:
    """Activation levels crossed with target SNRs as fractions of the power cap."""
    return [EmbbPolicy.from_activation(a, cfg.gamma_b, r) for a in activation_grid(cfg.eps_b) for r in rho]


# ---------------------------------------------------------------------------
# joint decoding


def joint_sic_trial(mmtc_gains: Sequence[float], embb_active: bool, g_tar: float,
                    r_b: float, r_m: float) -> TrialOutcome:
    """Decode one slot step by step.

    mMTC devices go strongest first with the eMBB signal as extra noise. At the
    first mMTC failure the eMBB is tried against all undecoded devices; if it
    decodes, its signal is removed and the failed device is retried as in the
    plain SIC receiver. An eMBB failure ends the slot.
    """
    ordered = sorted((float(g) for g in mmtc_gains), reverse=True)
    n_active = len(ordered)
    if not embb_active:
        return TrialOutcome(n_active, sic_decode_orth(ordered, r_m))
    if g_tar <= 0:
        raise ValueError("an active eMBB user needs g_tar > 0")
    decoded = 0
    embb_done = False
    while decoded < n_active:
        rest = sum(ordered[decoded + 1:])
        noise = 1.0 + rest + (0.0 if embb_done else g_tar)
        if math.log2(1.0 + ordered[decoded] / noise) >= r_m:
            decoded += 1
            continue
        if embb_done:
            break
        if math.log2(1.0 + g_tar / (1.0 + sum(ordered[decoded:]))) < r_b:
            return TrialOutcome(n_active, decoded, False, True)
        embb_done = True
    if not embb_done:
        embb_done = math.log2(1.0 + g_tar) >= r_b
    return TrialOutcome(n_active, decoded, embb_done, True)


@njit(cache=True, nogil=True)
def _joint_batch(epochs, lam, gamma, need, beta, xs):
    """Joint decoding of every trial for each eMBB target SNR in ``xs`` (ascending).

    With the eMBB active at target x, device k decodes ahead of it while
    g_k/need - 1 - rest_k >= x holds for k and all stronger devices, so the
    decoded prefix length n1(x) follows from a running minimum. The eMBB then
    sees the suffix sum at n1 and, once cancelled, the plain SIC run resumes
    at n1. chi(x) sums the devices too weak to decode ahead of the eMBB even
    alone.
    """
    n = epochs.shape[0]
    k_pol = xs.shape[0]
    decoded = np.zeros(k_pol, dtype=np.int64)
    fails = np.zeros(k_pol, dtype=np.int64)
    chi_fails = np.zeros(k_pol, dtype=np.int64)
    orth = 0
    active = 0
    for i in range(n):
        g = trial_gains(epochs[i], lam, gamma)
        count = g.shape[0]
        suffix = suffix_sums(g)
        runs = orth_run_lengths(g, suffix, need)
        orth += runs[0]
        active += count
        headroom = np.empty(count)
        low = np.inf
        for k in range(count):
            h = g[k] / need - 1.0 - suffix[k + 1]
            if h < low:
                low = h
            headroom[k] = low
        p = count
        q = count
        for j in range(k_pol):
            x = xs[j]
            while p > 0 and headroom[p - 1] < x:
                p -= 1
            if x >= beta * (1.0 + suffix[p]):
                decoded[j] += p + runs[p]
            else:
                decoded[j] += p
                fails[j] += 1
            cut = need * (1.0 + x)
            while q > 0 and g[q - 1] <= cut:
                q -= 1
            if x <= beta * (1.0 + suffix[q]):
                chi_fails[j] += 1
    return orth, active, decoded, fails, chi_fails


@dataclass
class JointStats:
    """Monte Carlo sums for a set of eMBB policies at one arrival rate.

    The eMBB activity is averaged out analytically: a policy with activation
    a_b mixes the eMBB-silent sums (``orth_decoded``) and the eMBB-active
    ones with weights 1 - a_b and a_b.
    """

    trials: int
    active: int
    orth_decoded: int
    a_b: np.ndarray
    decoded: np.ndarray
    fails: np.ndarray
    chi_fails: np.ndarray

    def mmtc_error(self) -> np.ndarray:
        if self.active == 0:
            return np.zeros_like(self.a_b)
        mixed = (1.0 - self.a_b) * self.orth_decoded + self.a_b * self.decoded
        return 1.0 - mixed / self.active

    def embb_error(self) -> np.ndarray:
        return 1.0 - self.a_b + self.a_b * self.fails / self.trials

    def chi_embb_error(self) -> np.ndarray:
        """Lower bound on the eMBB error from the never-decodable devices."""
        return 1.0 - self.a_b + self.a_b * self.chi_fails / self.trials

    def mmtc_sigma(self) -> np.ndarray:
        return _binomial_sigma(self.mmtc_error(), self.active)

    def embb_sigma(self, counts: np.ndarray | None = None) -> np.ndarray:
        counts = self.fails if counts is None else counts
        return self.a_b * _binomial_sigma(counts / self.trials, self.trials)


def _binomial_sigma(p: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros_like(p)
    p = np.clip(p, 1.0 / n, 1.0 - 1.0 / n) if n > 1 else np.full_like(p, 0.5)
    return np.sqrt(p * (1.0 - p) / n)


def joint_stats(draws: DeviceDraws, lam: float, r_b: float, r_m: float,
                policies: Sequence[EmbbPolicy]) -> JointStats:
    if lam < 0:
        raise ValueError("lambda_m must be >= 0")
    if r_b < 0:
        raise ValueError("r_b must be >= 0")
    g_tar = np.array([p.g_tar for p in policies], dtype=float)
    if np.any(g_tar <= 0):
        raise ValueError("policies need g_tar > 0")
    order = np.argsort(g_tar, kind="stable")
    xs = np.ascontiguousarray(g_tar[order])
    need = sinr_threshold(r_m)
    beta = sinr_threshold(r_b)

    def one(i: int, n: int):
        return _joint_batch(draws.arrivals(i, n, lam), lam, draws.gamma_m, need, beta, xs)

    parts = map_batches(draws.plan, one)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    total = lambda idx: sum(p[idx] for p in parts)[inverse]
    return JointStats(
        trials=draws.plan.trials,
        active=int(sum(p[1] for p in parts)),
        orth_decoded=int(sum(p[0] for p in parts)),
        a_b=np.array([p.a_b for p in policies], dtype=float),
        decoded=total(2),
        fails=total(3),
        chi_fails=total(4),
    )


def noma_error_rates(lambda_m: float, r_b: float, policy: EmbbPolicy, cfg: ScenarioConfig,
                     plan: McPlan, draws: DeviceDraws | None = None) -> tuple[float, float]:
    """(mMTC error, eMBB error) of one policy under joint decoding."""
    if draws is None:
        draws = DeviceDraws(cfg.gamma_m, plan)
    stats = joint_stats(draws, lambda_m, r_b, cfg.r_m, [policy])
    return float(stats.mmtc_error()[0]), float(stats.embb_error()[0])


# ---------------------------------------------------------------------------
# maximum supported arrival rate


@dataclass
class ArrivalResult:
    lam: float
    policy: EmbbPolicy | None
    pr_em: float | None = None
    pr_eb: float | None = None
    capped: bool = False
    evaluations: int = 0

    def diagnostics(self) -> dict:
        p = self.policy
        return {
            "g_tar": p.g_tar if p else None,
            "g_min": p.g_min if p else None,
            "a_b": p.a_b if p else None,
            "pr_em": self.pr_em,
            "pr_eb": self.pr_eb,
            "capped": self.capped,
        }


def lone_device_limits(r_b: float, cfg: ScenarioConfig,
                       policies: Sequence[EmbbPolicy]) -> tuple[np.ndarray, np.ndarray]:
    """(mMTC error, eMBB error) of each policy in the limit lambda -> 0.

    A lone device of gain g with the eMBB active at target x is decoded
    first when g >= need (1 + x); otherwise it survives only if the eMBB
    decodes over it (g <= x/beta - 1) and it then clears need on its own.
    """
    need, beta = sinr_threshold(cfg.r_m), sinr_threshold(r_b)
    cdf = lambda g: -math.expm1(-max(g, 0.0) / cfg.gamma_m)
    em, eb = [], []
    for p in policies:
        x = p.g_tar
        lost = cdf(need * (1.0 + x))
        top = min(x / beta - 1.0, need * (1.0 + x)) if beta > 0 else need * (1.0 + x)
        if top > need:
            lost -= cdf(top) - cdf(need)
        em.append((1.0 - p.a_b) * cdf(need) + p.a_b * lost)
        eb.append(1.0 - p.a_b + (p.a_b if x < beta else 0.0))
    return np.array(em), np.array(eb)


def _default_bracket(predicate, limit: float) -> SearchBracket:
    hi = 1.0
    while hi < limit and predicate(hi):
        hi *= 2.0
    return SearchBracket.scaled(min(hi, limit))


def _check_prefix(seen: list[tuple[float, bool]], what: str) -> None:
    """Warn if a feasible rate was seen above an infeasible one."""
    worst_ok = max((lam for lam, ok in seen if ok), default=-math.inf)
    best_bad = min((lam for lam, ok in seen if not ok), default=math.inf)
    if worst_ok > best_bad:
        log.warning("%s is not monotone in the arrival rate on this run's draws", what)


def _existential_search(r_b: float, cfg: ScenarioConfig, policies: list[EmbbPolicy],
                        draws: DeviceDraws, bracket: SearchBracket | None, limit: float,
                        use_chi: bool, z: float = 0.0) -> ArrivalResult:
    if not use_chi:
        # errors only grow with lambda, so policies failing the lone-device limit never qualify
        em0, eb0 = lone_device_limits(r_b, cfg, policies)
        policies = [p for p, e, b in zip(policies, em0, eb0) if e <= cfg.eps_m and b <= cfg.eps_b]
        if not policies:
            return ArrivalResult(0.0, None)
    seen: list[tuple[float, bool]] = []
    best: dict[float, tuple[int, float, float]] = {}

    def feasible(lam: float) -> bool:
        stats = joint_stats(draws, lam, r_b, cfg.r_m, policies)
        if use_chi:
            em = np.zeros(len(policies))
            eb = stats.chi_embb_error()
            ok = eb - z * stats.embb_sigma(stats.chi_fails) <= cfg.eps_b
        else:
            em, eb = stats.mmtc_error(), stats.embb_error()
            ok = (em - z * stats.mmtc_sigma() <= cfg.eps_m) & (eb - z * stats.embb_sigma() <= cfg.eps_b)
        if ok.any():
            j = int(np.flatnonzero(ok)[np.argmin(em[ok])])
            best[lam] = (j, float(em[j]), float(eb[j]))
        seen.append((lam, bool(ok.any())))
        return bool(ok.any())

    if bracket is None:
        bracket = _default_bracket(feasible, limit)
    lam = max_feasible(feasible, bracket)
    _check_prefix(seen, "joint feasibility" if not use_chi else "chi bound")
    if lam is None:
        return ArrivalResult(0.0, None, evaluations=len(seen))
    if lam not in best:
        feasible(lam)
    j, em, eb = best[lam]
    return ArrivalResult(lam, policies[j], em, eb, capped=lam >= bracket.hi, evaluations=len(seen))


def max_arrival_noma(r_b: float, cfg: ScenarioConfig, plan: McPlan,
                     policy_grid: Sequence[EmbbPolicy] | None = None,
                     bracket: SearchBracket | None = None,
                     draws: DeviceDraws | None = None, limit: float = 1e4,
                     z: float = 0.0) -> ArrivalResult:
    """Largest arrival rate for which some grid policy meets both reliability targets.

    A single bisection runs on "any policy feasible"; all policies share the
    same draws at every probed rate. Returns rate 0 when nothing is feasible.
    A nonzero ``z`` judges feasibility on the error estimates minus ``z``
    binomial standard errors, so z = +3 / -3 give optimistic / pessimistic
    ends of a confidence band.
    """
    if r_b < 0:
        raise ValueError("r_b must be >= 0")
    policies = list(policy_grid) if policy_grid is not None else default_policy_grid(cfg)
    if single_device_error(cfg.r_m, cfg.gamma_m) > cfg.eps_m:
        # joint decoding never decodes more devices than plain SIC
        return ArrivalResult(0.0, None)
    if draws is None:
        draws = DeviceDraws(cfg.gamma_m, plan)
    return _existential_search(r_b, cfg, policies, draws, bracket, limit, use_chi=False, z=z)


def upper_bound_chi(r_b: float, cfg: ScenarioConfig, plan: McPlan,
                    policy_grid: Sequence[EmbbPolicy] | None = None,
                    bracket: SearchBracket | None = None,
                    draws: DeviceDraws | None = None, limit: float = 1e4,
                    z: float = 0.0) -> ArrivalResult:
    """Upper bound on the supported arrival rate from the eMBB reliability alone.

    Devices weaker than ``(1 + g_tar)(2^r_m - 1)`` can never be decoded before
    the eMBB, so their sum lower-bounds the interference the eMBB faces. The
    result is ``capped`` when the bound exceeds the search range.
    """
    if not r_b > 0:
        raise ValueError("r_b must be > 0")
    policies = list(policy_grid) if policy_grid is not None else default_policy_grid(cfg)
    if draws is None:
        draws = DeviceDraws(cfg.gamma_m, plan)
    return _existential_search(r_b, cfg, policies, draws, bracket, limit, use_chi=True, z=z)


# ---------------------------------------------------------------------------
# eMBB-first decoding bounds


def erlang_mixture_tail(threshold: float, lam: float, gamma_m: float, extra: int = 0) -> float:
    """Pr(sum of ``extra`` + Poisson(lam) exponential gains >= threshold).

    ``extra=1`` gives the tail seen by a typical active device, which counts
    itself in the sum.
    """
    if threshold <= 0:
        return 1.0
    if lam == 0:
        return 0.0 if extra == 0 else float(gammaincc(extra, threshold / gamma_m))
    n_max = int(poisson.isf(POISSON_TAIL, lam)) + 1
    n = np.arange(0 if extra else 1, n_max + 1)
    return float(np.dot(poisson.pmf(n, lam), gammaincc(n + extra, threshold / gamma_m)))


def _embb_first_threshold(r_b: float, g_tar: float) -> float:
    beta = sinr_threshold(r_b)
    return math.inf if beta == 0 else g_tar / beta - 1.0


def embb_first_error(r_b: float, lam: float, a_b: float, g_tar: float, gamma_m: float) -> float:
    """eMBB error when it is decoded first with every device as noise."""
    return 1.0 - a_b + a_b * erlang_mixture_tail(_embb_first_threshold(r_b, g_tar), lam, gamma_m)


def embb_first_device_loss(r_b: float, lam: float, a_b: float, g_tar: float, gamma_m: float) -> float:
    """Fraction of devices lost because the eMBB-first decoder failed on their slot.

    E[A 1{sum >= T}] = lam Pr(G + sum >= T) for Poisson arrivals, so the loss is
    a_b times the tail with one extra summand. It is not bounded by the eMBB
    error itself: at small lam a failure almost always takes a device with it.
    """
    return a_b * erlang_mixture_tail(_embb_first_threshold(r_b, g_tar), lam, gamma_m, extra=1)


def best_embb_first_error(r_b: float, lam: float, cfg: ScenarioConfig) -> tuple[float, float]:
    """Smallest eMBB-first error over the activation grid at full power; (error, a_b)."""
    options = [
        (embb_first_error(r_b, lam, a, power_cap_for_activation(a, cfg.gamma_b), cfg.gamma_m), a)
        for a in activation_grid(cfg.eps_b)
    ]
    return min(options)


@dataclass
class ErlangBounds:
    lb_curve: RegionCurve
    ub_curve: RegionCurve
    r_b_low: float
    lam_lb: float
    lam_ub: float


def _max_rate_embb_first(lam: float, cfg: ScenarioConfig, target: float) -> float:
    hi = orth_rate(cfg.gamma_b, cfg.eps_b)
    found = max_feasible(lambda r: best_embb_first_error(r, lam, cfg)[0] <= target,
                         SearchBracket(0.0, hi, 1e-9 * hi))
    return 0.0 if found is None else found


def _max_arrival_embb_first(r_b: float, cfg: ScenarioConfig, target: float, cap: float) -> float:
    if cap <= 0:
        return 0.0
    found = max_feasible(lambda lam: best_embb_first_error(r_b, lam, cfg)[0] <= target,
                         SearchBracket.scaled(cap, 1e-9, floor=1e-12))
    return 0.0 if found is None else found


class _OrthErrorCache:
    def __init__(self, cfg: ScenarioConfig, draws: DeviceDraws):
        self.cfg = cfg
        self.draws = draws
        self._seen: dict[float, float] = {}

    def __call__(self, lam: float) -> float:
        if lam not in self._seen:
            self._seen[lam] = error_rate_orth(lam, self.cfg.r_m, self.cfg.gamma_m, self.draws.plan, self.draws)
        return self._seen[lam]


def _embb_first_feasible(r_b: float, lam: float, cfg: ScenarioConfig, orth_error) -> bool:
    """Both targets met by the eMBB-first decoder for some grid activation."""
    base = orth_error(lam)
    for a in activation_grid(cfg.eps_b):
        g_tar = power_cap_for_activation(a, cfg.gamma_b)
        if embb_first_error(r_b, lam, a, g_tar, cfg.gamma_m) > cfg.eps_b:
            continue
        if base + embb_first_device_loss(r_b, lam, a, g_tar, cfg.gamma_m) <= cfg.eps_m:
            return True
    return False


def bounds_erlang(r_b_grid: Sequence[float], cfg: ScenarioConfig, plan: McPlan,
                  draws: DeviceDraws | None = None) -> ErlangBounds:
    """Sandwich bounds from decoding the eMBB first.

    ``lam_lb``/``lam_ub`` are the plain SIC arrival rates at mMTC budgets
    eps_m - eps_b and eps_m. The textbook lower curve is lam_lb up to
    ``r_b_low`` and then the largest rate keeping the eMBB-first error within
    eps_b (the eps_m variant of that threshold is kept in the diagnostics).
    Charging the eMBB failures at eps_b per device undercounts them when few
    devices are active, so each point is further capped by the largest rate
    at which the eMBB-first decoder meets both targets with the exact
    per-device loss.
    """
    if not cfg.eps_m > cfg.eps_b:
        raise ValueError("eps_m must exceed eps_b for the lower bound")
    if draws is None:
        draws = DeviceDraws(cfg.gamma_m, plan)
    lam_ub = max_arrival_orth(cfg.r_m, cfg.eps_m, cfg.gamma_m, plan, draws=draws) or 0.0
    lam_lb = max_arrival_orth(cfg.r_m, cfg.eps_m, cfg.gamma_m, plan, draws=draws,
                              threshold=cfg.eps_m - cfg.eps_b) or 0.0
    r_b_low = _max_rate_embb_first(lam_lb, cfg, cfg.eps_b)
    orth_error = _OrthErrorCache(cfg, draws)
    lb_rows, ub_rows = [], []
    for r_b in r_b_grid:
        textbook = _max_arrival_embb_first(r_b, cfg, cfg.eps_b, lam_lb)
        alt = _max_arrival_embb_first(r_b, cfg, cfg.eps_m, lam_lb)
        lam = textbook
        if lam > 0 and not _embb_first_feasible(r_b, lam, cfg, orth_error):
            found = max_feasible(lambda x: _embb_first_feasible(r_b, x, cfg, orth_error),
                                 SearchBracket.scaled(lam))
            lam = found or 0.0
        _, a_b = best_embb_first_error(r_b, lam, cfg)
        lb_rows.append((r_b, lam, {"a_b": a_b, "lam_lb": lam_lb, "r_b_low": r_b_low,
                                   "textbook": textbook, "lb_eps_m_variant": alt,
                                   "trials": plan.trials}))
        ub_rows.append((r_b, lam_ub, {"lam_ub": lam_ub, "trials": plan.trials}))
    return ErlangBounds(
        RegionCurve.build(Scheme.APPENDIX_B_LB, lb_rows),
        RegionCurve.build(Scheme.APPENDIX_B_UB, ub_rows),
        r_b_low, lam_lb, lam_ub,
    )


# ---------------------------------------------------------------------------
# orthogonal time sharing and full regions


def oma_curve(cfg: ScenarioConfig, plan: McPlan, alpha_grid: Sequence[float] | None = None,
              draws: DeviceDraws | None = None) -> RegionCurve:
    """Time sharing: eMBB gets a fraction alpha, mMTC needs rate r_m/(1-alpha)."""
    alphas = sorted(np.linspace(0.0, 1.0, 21) if alpha_grid is None else alpha_grid)
    if any(not 0 <= a <= 1 for a in alphas):
        raise ValueError("alpha values must lie in [0, 1]")
    if draws is None:
        draws = DeviceDraws(cfg.gamma_m, plan)
    r_orth = orth_rate(cfg.gamma_b, cfg.eps_b)
    rows = []
    prev = None
    for a in alphas:
        lam = 0.0
        if a < 1:
            # a larger alpha raises the mMTC rate, which never helps on shared draws
            bracket = None if not prev else SearchBracket.scaled(prev)
            lam = max_arrival_orth(cfg.r_m / (1 - a), cfg.eps_m, cfg.gamma_m, plan,
                                   bracket=bracket, draws=draws) or 0.0
        prev = lam
        rows.append((a * r_orth, lam, {"alpha": float(a), "trials": plan.trials}))
    return RegionCurve.build(Scheme.H_OMA, rows)


def default_rate_grid(cfg: ScenarioConfig, points: int = 25) -> list[float]:
    return list(np.linspace(0.0, orth_rate(cfg.gamma_b, cfg.eps_b), points))


@dataclass
class MmtcRegion:
    oma: RegionCurve
    noma: RegionCurve
    lower: RegionCurve
    upper: RegionCurve
    r_b_low: float
    lam_lb: float
    lam_ub: float
    extra: dict = field(default_factory=dict)


def region_embb_mmtc(cfg: ScenarioConfig, plan: McPlan, r_b_grid: Sequence[float] | None = None,
                     alpha_grid: Sequence[float] | None = None,
                     policy_grid: Sequence[EmbbPolicy] | None = None) -> MmtcRegion:
    """All curves of the (r_B, lambda_M) plane on one set of mMTC draws.

    The upper curve is the smaller of the chi bound and the plain SIC rate
    lam_ub, which holds for every r_B.
    """
    if cfg.f != 1:
        log.warning("eMBB/mMTC slicing uses one channel; ignoring f=%d", cfg.f)
    grid = sorted(default_rate_grid(cfg) if r_b_grid is None else r_b_grid)
    policies = list(policy_grid) if policy_grid is not None else default_policy_grid(cfg)
    draws = DeviceDraws(cfg.gamma_m, plan)
    bounds = bounds_erlang(grid, cfg, plan, draws)
    oma = oma_curve(cfg, plan, alpha_grid, draws)
    cap = bounds.lam_ub
    noma_rows, ub_rows = [], []
    hi = cap
    for r_b in grid:
        # feasibility only shrinks as r_b grows, so the previous answer caps the next
        res = max_arrival_noma(r_b, cfg, plan, policies, SearchBracket.scaled(hi), draws) \
            if hi > 0 else ArrivalResult(0.0, None)
        hi = res.lam
        noma_rows.append((r_b, res.lam, {**res.diagnostics(), "trials": plan.trials}))
        if r_b > 0 and cap > 0:
            chi = upper_bound_chi(r_b, cfg, plan, policies, SearchBracket.scaled(2 * cap), draws)
            chi_lam = chi.lam
        else:
            chi_lam = 0.0 if r_b > 0 else math.inf
        ub_rows.append((r_b, min(chi_lam, bounds.lam_ub),
                        {"chi": None if math.isinf(chi_lam) else chi_lam, "lam_ub": bounds.lam_ub,
                         "trials": plan.trials}))
    return MmtcRegion(
        oma=oma,
        noma=RegionCurve.build(Scheme.H_NOMA_SIC, noma_rows),
        lower=bounds.lb_curve,
        upper=RegionCurve.build(Scheme.APPENDIX_B_UB, ub_rows),
        r_b_low=bounds.r_b_low,
        lam_lb=bounds.lam_lb,
        lam_ub=bounds.lam_ub,
    )
