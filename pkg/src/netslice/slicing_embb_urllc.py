"""eMBB and URLLC on F shared channels: the (r_B, r_U) rate region.

Orthogonal slicing gives F_U channels to URLLC and the rest to eMBB.
Non-orthogonal slicing lets eMBB use all F channels; the receiver either
decodes and cancels the URLLC minislot first (SIC) or erases the minislots
hit by URLLC and relies on an outer erasure code of depth k (puncturing).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.stats import binom

from .config import ScenarioConfig
from .core import McPlan, SearchBracket, max_feasible
from .embb import orth_rate, power_cap_for_activation, threshold_from_activation
from .region import RegionCurve, Scheme
from .urllc import UrllcDraws, check_trials, rate_lower_bound_markov

log = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 33
# exceedances below which URLLC quantiles are reported as noisy
STABLE_EXCEEDANCES = 1000


class InfeasibleError(ValueError):
    """The reliability targets cannot be met by any policy."""


def activation_floor(eps_b: float, eps_u: float, a_u: float, s: int) -> float:
    """Smallest eMBB activation meeting eps_b when URLLC failures cost the eMBB slot."""
    hit = 1.0 - (1.0 - a_u) ** s
    rhs = (1.0 - eps_b) / (1.0 - eps_u * hit)
    if rhs >= 1.0:
        raise InfeasibleError(f"activation floor {rhs:.6g} >= 1: eps_b cannot be met under SIC")
    return rhs


def sic_ab_constraint(cfg: ScenarioConfig) -> float:
    return activation_floor(cfg.eps_b, cfg.eps_u, cfg.a_u, cfg.s)


def sic_activation(r_u: float, cfg: ScenarioConfig) -> float:
    """eMBB activation used by SIC at URLLC rate r_u.

    A zero-rate URLLC message is never lost, so at r_u = 0 the eMBB only
    pays for its own outage.
    """
    if r_u == 0:
        return 1.0 - cfg.eps_b
    return sic_ab_constraint(cfg)


def embb_error_bound(a_b: float, eps_u: float, a_u: float, s: int) -> float:
    """eMBB error under SIC when a URLLC decoding failure also loses the eMBB slot."""
    quiet = (1.0 - a_u) ** s
    return quiet * (1.0 - a_b) + (1.0 - quiet) * (eps_u + (1.0 - eps_u) * (1.0 - a_b))


def sic_embb_error_bound(a_b: float, cfg: ScenarioConfig) -> float:
    return embb_error_bound(a_b, cfg.eps_u, cfg.a_u, cfg.s)


# ---------------------------------------------------------------------------
# shared URLLC machinery


class UrllcContext:
    """URLLC draws over all F channels plus per-F_U draws for the orthogonal curve.

    Every operation on one context sees the same channel realizations, which
    keeps curves comparable point by point.
    """

    def __init__(self, cfg: ScenarioConfig, plan: McPlan):
        check_trials(cfg.eps_u, plan)
        if cfg.eps_u * plan.trials < STABLE_EXCEEDANCES:
            log.warning("eps_u*trials = %g < %d: URLLC quantiles are noisy",
                        cfg.eps_u * plan.trials, STABLE_EXCEEDANCES)
        self.cfg = cfg
        self.plan = plan
        self.full = UrllcDraws(cfg.f, cfg.gamma_u, plan, role="urllc")
        self._per_fu: dict[int, UrllcDraws] = {cfg.f: self.full}
        self._orth: dict[tuple[int, int], float] = {}
        self._limits: dict[tuple[float, int], float | None] = {}
        self._ceiling: float | None = None

    def draws(self, f_u: int) -> UrllcDraws:
        if f_u not in self._per_fu:
            self._per_fu[f_u] = UrllcDraws(f_u, self.cfg.gamma_u, self.plan, role="urllc")
        return self._per_fu[f_u]

    def halfwidth_ranks(self, z: float = 3.0) -> int:
        """Rank shift spanning a z-sigma band around the eps_u order statistic."""
        k = self.full.rank(self.cfg.eps_u)
        return int(math.ceil(z * math.sqrt(k * (1.0 - self.cfg.eps_u))))

    def orth_rate(self, f_u: int, offset: int = 0) -> float:
        """URLLC rate on f_u exclusive channels (0 for none)."""
        if f_u == 0:
            return 0.0
        key = (f_u, offset)
        if key not in self._orth:
            self._orth[key] = self.draws(f_u).rate_quantile(self.cfg.eps_u, offset=offset)
        return self._orth[key]

    def ceiling(self) -> float:
        """Largest power cap any scheme may use: the lowest candidate activation."""
        if self._ceiling is None:
            acts = [1.0 - self.cfg.eps_b]
            acts += [a for a in (puncture_activation(k, self.cfg) for k in range(self.cfg.s)) if a is not None]
            try:
                acts.append(sic_ab_constraint(self.cfg))
            except InfeasibleError:
                pass
            self._ceiling = power_cap_for_activation(min(acts), self.cfg.gamma_b)
        return self._ceiling

    def interference_limit(self, r_u: float, g_hi: float, offset: int = 0) -> float | None:
        """Largest eMBB target SNR <= g_hi keeping the URLLC rate r_u at reliability eps_u.

        The URLLC constraint is monotone in the target SNR, so one search up
        to the ceiling serves every power cap below it.
        """
        if r_u <= 0:
            return g_hi
        top = self.ceiling()
        if g_hi > top:
            return self.full.max_interference(r_u, self.cfg.eps_u, g_hi, offset=offset)
        key = (float(r_u), offset)
        if key not in self._limits:
            self._limits[key] = self.full.max_interference(r_u, self.cfg.eps_u, top, offset=offset)
        g = self._limits[key]
        return None if g is None else min(g, g_hi)


# ---------------------------------------------------------------------------
# orthogonal slicing


def oma_region(cfg: ScenarioConfig, plan: McPlan, ctx: UrllcContext | None = None) -> RegionCurve:
    """One point per F_U: ((F - F_U) r_B^orth, r_U^orth(F_U))."""
    ctx = ctx or UrllcContext(cfg, plan)
    per_channel = orth_rate(cfg.gamma_b, cfg.eps_b)
    rows = []
    for f_u in range(cfg.f + 1):
        h = ctx.halfwidth_ranks()
        diag = {"f_u": f_u, "trials": plan.trials,
                "r_u_lo": ctx.orth_rate(f_u, -h), "r_u_hi": ctx.orth_rate(f_u, h)}
        rows.append(((cfg.f - f_u) * per_channel, ctx.orth_rate(f_u), diag))
    return RegionCurve.build(Scheme.H_OMA, rows)


def oma_rate_at(curve: RegionCurve, r_u: float) -> float | None:
    """eMBB sum-rate of the time-shared orthogonal frontier at URLLC rate r_u."""
    pts = sorted(curve.points, key=lambda p: p[1])
    ys = [p[1] for p in pts]
    if r_u > ys[-1]:
        return None
    return float(np.interp(r_u, ys, [p[0] for p in pts]))


# ---------------------------------------------------------------------------
# non-orthogonal slicing


@dataclass
class PointSolution:
    rate: float
    g_tar: float
    a_b: float
    k: int = 0
    diagnostics: dict[str, Any] = field(default_factory=dict)


def _sic_solution(r_u: float, cfg: ScenarioConfig, ctx: UrllcContext, offset: int = 0,
                  exact_activity: bool = False) -> PointSolution | None:
    if r_u < 0:
        raise ValueError("r_u must be >= 0")
    if r_u > ctx.orth_rate(cfg.f, offset):
        return None
    a_floor = sic_activation(r_u, cfg)
    if exact_activity:
        return _sic_solution_grid(r_u, cfg, ctx, a_floor, offset)
    cap = power_cap_for_activation(a_floor, cfg.gamma_b)
    g = ctx.interference_limit(r_u, cap, offset)
    if g is None:
        return None
    diag = {"g_tar": g, "g_min": threshold_from_activation(a_floor, cfg.gamma_b), "a_b": a_floor,
            "f_u": cfg.f, "trials": ctx.plan.trials, "binding": "power" if g >= cap else "URLLC"}
    if g == 0:
        diag["binding"] = "URLLC-binding"
    return PointSolution(cfg.f * math.log2(1.0 + g), g, a_floor, 0, diag)


def _sic_solution_grid(r_u: float, cfg: ScenarioConfig, ctx: UrllcContext, a_floor: float,
                       offset: int) -> PointSolution | None:
    # Bernoulli eMBB activity on each URLLC channel: coarse search over
    # 16 activations and 64 target SNRs below each power cap
    best = None
    for a in 1.0 - (1.0 - a_floor) * np.logspace(0.0, -3.0, 16):
        cap = power_cap_for_activation(float(a), cfg.gamma_b)
        for g in cap * np.logspace(-4.0, 0.0, 64)[::-1]:
            if ctx.full.rate_quantile(cfg.eps_u, float(g), float(a), offset) >= r_u:
                if best is None or g > best.g_tar:
                    best = PointSolution(cfg.f * math.log2(1.0 + g), float(g), float(a), 0,
                                         {"g_tar": float(g), "a_b": float(a), "f_u": cfg.f,
                                          "trials": ctx.plan.trials, "mode": "bernoulli-grid"})
                break
    return best


def noma_sic_point(r_u: float, cfg: ScenarioConfig, plan: McPlan, ctx: UrllcContext | None = None,
                   exact_activity: bool = False) -> float | None:
    """eMBB sum-rate under SIC at URLLC rate r_u; ``None`` when r_u exceeds r_U^orth(F).

    The eMBB activation sits at its floor and the target SNR is the largest
    value within both the power cap and the URLLC reliability constraint
    (eMBB assumed always interfering unless ``exact_activity``).
    """
    sol = _sic_solution(r_u, cfg, ctx or UrllcContext(cfg, plan), exact_activity=exact_activity)
    return None if sol is None else sol.rate


def puncture_activation(k: int, cfg: ScenarioConfig) -> float | None:
    """Activation meeting eps_b with k erased minislots correctable; None if infeasible."""
    tail = float(binom.sf(k, cfg.s, cfg.a_u))
    if tail > cfg.eps_b:
        return None
    return 1.0 - (cfg.eps_b - tail) / float(binom.cdf(k, cfg.s, cfg.a_u))


def _puncture_solution(r_u: float, cfg: ScenarioConfig, ctx: UrllcContext,
                       offset: int = 0) -> PointSolution | None:
    if r_u < 0:
        raise ValueError("r_u must be >= 0")
    if r_u > ctx.orth_rate(cfg.f, offset):
        return None
    best = None
    for k in range(cfg.s + 1):
        a_b = puncture_activation(k, cfg)
        if a_b is None:
            continue
        if k == cfg.s:
            cand = PointSolution(0.0, 0.0, a_b, k)
        else:
            cap = power_cap_for_activation(a_b, cfg.gamma_b)
            g = ctx.interference_limit(r_u, cap, offset)
            if g is None:
                continue
            cand = PointSolution((1.0 - k / cfg.s) * cfg.f * math.log2(1.0 + g), g, a_b, k)
        if best is None or cand.rate > best.rate:
            best = cand
    if best is None:
        return None
    best.diagnostics = {"g_tar": best.g_tar, "a_b": best.a_b, "k": best.k,
                        "g_min": threshold_from_activation(best.a_b, cfg.gamma_b),
                        "f_u": cfg.f, "trials": ctx.plan.trials}
    return best


def noma_puncture_point(r_u: float, cfg: ScenarioConfig, plan: McPlan,
                        ctx: UrllcContext | None = None) -> float | None:
    """eMBB sum-rate with puncturing and the best erasure-code depth k; None if infeasible."""
    sol = _puncture_solution(r_u, cfg, ctx or UrllcContext(cfg, plan))
    return None if sol is None else sol.rate


def markov_interference_limit(r_u: float, cfg: ScenarioConfig, g_hi: float) -> float | None:
    """Largest g_tar <= g_hi whose Markov rate bound still reaches r_u."""
    bound = lambda g: rate_lower_bound_markov(cfg.gamma_u, cfg.eps_u, cfg.f, g).rate
    if bound(g_hi) >= r_u:
        return g_hi
    found = max_feasible(lambda g: bound(g) >= r_u, SearchBracket.scaled(g_hi, 1e-8, floor=1e-12))
    return found


def default_urllc_grid(ctx: UrllcContext, points: int = DEFAULT_GRID_POINTS) -> list[float]:
    return list(np.linspace(0.0, ctx.orth_rate(ctx.cfg.f), points))


@dataclass
class UrllcRegion:
    oma: RegionCurve
    sic: RegionCurve
    puncture: RegionCurve
    lower: RegionCurve
    grid: list[float]


def _rate_band(solve, r_u: float, cfg: ScenarioConfig, ctx: UrllcContext, h: int) -> dict[str, float]:
    # eMBB rate with the URLLC quantile taken h order statistics lower / higher
    lo, hi = solve(r_u, cfg, ctx, -h), solve(r_u, cfg, ctx, h)
    return {"r_b_lo": 0.0 if lo is None else lo.rate, "r_b_hi": 0.0 if hi is None else hi.rate}


def region_noma(cfg: ScenarioConfig, plan: McPlan, r_u_grid: Sequence[float] | None = None,
                ctx: UrllcContext | None = None) -> tuple[RegionCurve, RegionCurve, RegionCurve]:
    """SIC, puncturing and Markov lower-bound curves on one URLLC-rate grid."""
    ctx = ctx or UrllcContext(cfg, plan)
    grid = default_urllc_grid(ctx) if r_u_grid is None else list(r_u_grid)
    sic_ab_constraint(cfg)  # raises when SIC cannot meet eps_b at all
    sic_rows, pun_rows, lb_rows = [], [], []
    h = ctx.halfwidth_ranks()
    for r_u in grid:
        for solve, rows in ((_sic_solution, sic_rows), (_puncture_solution, pun_rows)):
            sol = solve(r_u, cfg, ctx)
            if sol is None:
                continue
            rows.append((sol.rate, r_u, {**sol.diagnostics, **_rate_band(solve, r_u, cfg, ctx, h)}))
        a_lb = sic_activation(r_u, cfg)
        g_lb = markov_interference_limit(r_u, cfg, power_cap_for_activation(a_lb, cfg.gamma_b))
        if g_lb is not None:
            lb_rows.append((cfg.f * math.log2(1.0 + g_lb), r_u, {"g_tar": g_lb, "a_b": a_lb, "f_u": cfg.f}))
    return (RegionCurve.build(Scheme.H_NOMA_SIC, sic_rows),
            RegionCurve.build(Scheme.H_NOMA_PUNCTURE, pun_rows),
            RegionCurve.build(Scheme.APPENDIX_A_LB, lb_rows))


def region_embb_urllc(cfg: ScenarioConfig, plan: McPlan,
                      r_u_grid: Sequence[float] | None = None) -> UrllcRegion:
    ctx = UrllcContext(cfg, plan)
    grid = default_urllc_grid(ctx) if r_u_grid is None else list(r_u_grid)
    sic, pun, lb = region_noma(cfg, plan, grid, ctx)
    return UrllcRegion(oma_region(cfg, plan, ctx), sic, pun, lb, grid)
