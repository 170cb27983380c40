"""URLLC outage and rate under block fading with frequency diversity.

A URLLC message is spread over ``f_u`` independently faded channels and is
lost when the average of the per-channel mutual informations falls below
the rate. Optional eMBB interference adds ``delta_f * g_tar`` to the noise
on each channel, with ``delta_f ~ Bernoulli(a_b)``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.special import roots_laguerre

from .core import McPlan, map_batches, quantile_rank, sample_exp_gain, smallest_k

Interference = tuple[float, float]  # (g_tar, a_b)

# Above this many cached floats the draws are regenerated on every pass.
CACHE_LIMIT = 1 << 25

DEFAULT_T_GRID = tuple(np.logspace(math.log10(0.05), math.log10(20.0), 40))


def mutual_info(gains: np.ndarray, g_tar: float = 0.0, active: np.ndarray | None = None) -> np.ndarray:
    """Normalized mutual information per row of a (trials, f_u) gain matrix."""
    if g_tar > 0:
        noise = 1.0 + g_tar if active is None else 1.0 + g_tar * active
        gains = gains / noise
    return np.log1p(gains).mean(axis=-1) / math.log(2)


def mutual_info_sample(f_u: int, gamma_u: float, interference: Interference | None,
                       stream: np.random.Generator) -> float:
    """One draw of the slot's normalized mutual information."""
    if f_u < 1:
        raise ValueError("f_u must be >= 1")
    gains = sample_exp_gain(gamma_u, stream, f_u)
    if interference is None:
        return float(mutual_info(gains))
    g_tar, a_b = interference
    active = (stream.random(f_u) < a_b).astype(float)
    return float(mutual_info(gains, g_tar, active))


class UrllcDraws:
    """Fixed Monte Carlo ensemble of URLLC channel draws.

    Every query with the same plan sees the same gains (and the same activity
    uniforms), so outage is monotone in the rate and in the interference level.
    """

    def __init__(self, f_u: int, gamma_u: float, plan: McPlan, role: str = "urllc"):
        if f_u < 1:
            raise ValueError("f_u must be >= 1")
        self.f_u = f_u
        self.gamma_u = gamma_u
        self.plan = plan
        self.role = role
        self._cache: list[tuple[np.ndarray, np.ndarray]] | None = None
        self._mi_cache: dict[tuple[float, float], list[np.ndarray]] = {}
        if 2 * plan.trials * f_u <= CACHE_LIMIT:
            self._cache = [self._make(i, n) for i, n in enumerate(plan.batch_sizes())]

    def _make(self, index: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        rng = self.plan.rng(self.role, index)
        gains = sample_exp_gain(self.gamma_u, rng, (n, self.f_u))
        coins = rng.random((n, self.f_u))
        return gains, coins

    def _batch(self, index: int, n: int):
        if self._cache is not None:
            return self._cache[index]
        return self._make(index, n)

    def _mi(self, index: int, n: int, g_tar: float, a_b: float) -> np.ndarray:
        gains, coins = self._batch(index, n)
        active = None if a_b >= 1.0 else (coins < a_b).astype(float)
        return mutual_info(gains, g_tar, active)

    def _mi_all(self, index: int, n: int, g_tar: float, a_b: float) -> np.ndarray:
        # per-trial mutual information, memoized for a few reused interference levels
        if self._cache is None:
            return self._mi(index, n, g_tar, a_b)
        key = (float(g_tar), float(a_b))
        if key not in self._mi_cache:
            if len(self._mi_cache) >= 8:
                self._mi_cache.pop(next(iter(self._mi_cache)))
            self._mi_cache[key] = [self._mi(i, m, g_tar, a_b) for i, m in enumerate(self.plan.batch_sizes())]
        return self._mi_cache[key][index]

    def _per_batch(self, fn):
        return map_batches(self.plan, fn)

    def outage(self, r_u: float, g_tar: float = 0.0, a_b: float = 1.0) -> float:
        counts = self._per_batch(lambda i, n: int(np.count_nonzero(self._mi(i, n, g_tar, a_b) < r_u)))
        return sum(counts) / self.plan.trials

    def rank(self, eps: float, offset: int = 0) -> int:
        """Order-statistic rank of the eps quantile, shifted by ``offset`` and clipped."""
        return min(max(quantile_rank(self.plan.trials, eps) + offset, 1), self.plan.trials)

    def rate_quantile(self, eps: float, g_tar: float = 0.0, a_b: float = 1.0, offset: int = 0) -> float:
        k = self.rank(eps, offset)
        chunks = self._per_batch(lambda i, n: smallest_k([self._mi(i, n, g_tar, a_b)], k))
        return float(smallest_k(chunks, k)[k - 1])

    def max_interference(self, r_u: float, eps: float, g_hi: float, a_b: float = 1.0,
                         offset: int = 0, rel_tol: float = 1e-9) -> float | None:
        """Largest g_tar in [0, g_hi] whose eps-quantile rate is still >= ``r_u``.

        ``None`` when even g_tar = 0 misses ``r_u``. Each trial's mutual
        information falls with g_tar, so trials settled at either end of the
        bracket are never re-evaluated.
        """
        k = self.rank(eps, offset)
        budget = k - 1  # trials allowed below r_u
        settled_fail = 0
        rows, coins = [], []
        for i, n in enumerate(self.plan.batch_sizes()):
            gains, c = self._batch(i, n)
            bad_lo = self._mi_all(i, n, 0.0, 1.0) < r_u
            bad_hi = self._mi_all(i, n, g_hi, a_b) < r_u
            settled_fail += int(np.count_nonzero(bad_lo))
            open_ = bad_hi & ~bad_lo
            rows.append(gains[open_])
            coins.append(c[open_])
        if settled_fail > budget:
            return None
        gains = np.concatenate(rows)
        c = np.concatenate(coins)
        if settled_fail + gains.shape[0] <= budget:
            return g_hi
        lo, hi = 0.0, g_hi
        while hi - lo > rel_tol * hi:
            mid = 0.5 * hi if lo == 0.0 else math.sqrt(lo * hi)
            active = None if a_b >= 1.0 else (c < a_b).astype(float)
            bad = mutual_info(gains, mid, active) < r_u
            if settled_fail + int(np.count_nonzero(bad)) <= budget:
                lo = mid
                settled_fail += int(np.count_nonzero(bad))
                gains, c = gains[~bad], c[~bad]
            else:
                hi = mid
                gains, c = gains[bad], c[bad]
            if lo == 0.0 and hi < rel_tol * g_hi:
                return 0.0
        return lo


def _interference_args(interference: Interference | None) -> tuple[float, float]:
    return (0.0, 1.0) if interference is None else (float(interference[0]), float(interference[1]))


def outage_probability(r_u: float, f_u: int, gamma_u: float, interference: Interference | None,
                       plan: McPlan) -> float:
    """Fraction of trials whose mutual information is below ``r_u``."""
    if not r_u > 0:
        raise ValueError("r_u must be > 0")
    return UrllcDraws(f_u, gamma_u, plan).outage(r_u, *_interference_args(interference))


class TrialBudgetError(ValueError):
    """Too few trials for a stable quantile estimate."""


def check_trials(eps_u: float, plan: McPlan, minimum: int = 100) -> None:
    if eps_u * plan.trials < minimum:
        raise TrialBudgetError(
            f"eps_u*trials = {eps_u * plan.trials:g} < {minimum}: "
            f"need at least {math.ceil(minimum / eps_u)} trials for a stable quantile"
        )


def max_rate(f_u: int, gamma_u: float, eps_u: float, interference: Interference | None,
             plan: McPlan, draws: UrllcDraws | None = None) -> float:
    """Largest rate whose empirical outage does not exceed ``eps_u``."""
    check_trials(eps_u, plan)
    if draws is None:
        draws = UrllcDraws(f_u, gamma_u, plan)
    return draws.rate_quantile(eps_u, *_interference_args(interference))


def closed_form_rate_single_channel(gamma_u: float, eps_u: float) -> float:
    """Exact outage-limited rate for one channel (exponential gain quantile)."""
    return math.log2(1.0 - gamma_u * math.log1p(-eps_u))


# ---------------------------------------------------------------------------
# Markov (Chernoff) lower bound with always-on eMBB interference


@lru_cache(maxsize=4)
def _laguerre(n: int):
    return roots_laguerre(n)


def _expectation_quadrature(scale: float, t: float, nodes: int) -> float:
    x, w = _laguerre(nodes)
    return float(np.dot(w, (1.0 + scale * x) ** (-t)))


def inverse_moment(gamma_u: float, g_tar: float, t: float, rtol: float = 1e-6) -> float:
    """E[(1 + G/(1+g_tar))^-t] for G exponential with mean ``gamma_u``.

    Gauss-Laguerre with 128 nodes, checked against 256 nodes; adaptive
    quadrature takes over when the two disagree.
    """
    scale = gamma_u / (1.0 + g_tar)
    coarse = _expectation_quadrature(scale, t, 128)
    fine = _expectation_quadrature(scale, t, 256)
    if abs(coarse - fine) <= rtol * abs(fine):
        return fine
    # split at the knee of (1 + scale*u)^-t to help the adaptive rule
    f = lambda u: math.exp(-u) * (1.0 + scale * u) ** (-t)
    knee = min(1.0, 10.0 / scale)
    head, _ = integrate.quad(f, 0.0, knee, epsabs=0.0, epsrel=1e-12, limit=200)
    tail, _ = integrate.quad(f, knee, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return head + tail


class MarkovBound(NamedTuple):
    rate: float
    t: float | None
    vacuous: bool


def _markov_objective(t: float, gamma_u: float, eps_u: float, f_u: int, g_tar: float) -> float:
    return math.log2(eps_u) / (t * f_u) - math.log2(inverse_moment(gamma_u, g_tar, t)) / t


def rate_lower_bound_markov(gamma_u: float, eps_u: float, f_u: int, g_tar: float,
                            t_grid: Sequence[float] | None = None) -> MarkovBound:
    """Chernoff-type lower bound on the URLLC rate with eMBB always interfering.

    Maximized over ``t_grid`` and then refined between the neighbours of the
    best grid point. A negative bound is reported as 0 with ``vacuous=True``.
    """
    grid = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("t_grid must be nonempty and positive")
    grid = np.sort(grid)
    values = np.array([_markov_objective(t, gamma_u, eps_u, f_u, g_tar) for t in grid])
    best = int(np.argmax(values))
    t_best, v_best = float(grid[best]), float(values[best])
    if grid.size >= 3:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, grid.size - 1)]
        res = optimize.minimize_scalar(
            lambda t: -_markov_objective(t, gamma_u, eps_u, f_u, g_tar),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-6 * hi},
        )
        if res.success and -res.fun > v_best:
            t_best, v_best = float(res.x), float(-res.fun)
    if v_best <= 0:
        return MarkovBound(0.0, None, True)
    return MarkovBound(v_best, t_best, False)
