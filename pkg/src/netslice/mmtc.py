"""mMTC random access with successive interference cancellation.

``A_M ~ Poisson(lambda)`` devices share one resource. The receiver decodes
them strongest first and stops at the first device whose SINR (with all
weaker devices as interference) misses the rate ``r_m``. The error rate is the
expected fraction of active devices left undecoded.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .core import McPlan, SearchBracket, binomial_halfwidth, check_nondecreasing, map_batches, max_feasible

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialOutcome:
    n_active: int
    n_decoded_mmtc: int
    embb_decoded: bool = False
    embb_active: bool = False

    def __post_init__(self):
        if not 0 <= self.n_decoded_mmtc <= self.n_active:
            raise ValueError("decoded count must lie in [0, n_active]")
        if self.embb_decoded and not self.embb_active:
            raise ValueError("an inactive eMBB user cannot be decoded")


def sinr_threshold(rate: float) -> float:
    """SINR needed for ``log2(1 + sinr) >= rate``."""
    return math.expm1(rate * math.log(2.0))


def sic_decode_orth(gains: Sequence[float], r_m: float) -> int:
    """Number of devices decoded by strongest-first SIC before the first failure."""
    ordered = sorted((float(g) for g in gains), reverse=True)
    remaining = sum(ordered)
    need = sinr_threshold(r_m)
    decoded = 0
    for g in ordered:
        remaining -= g
        if g / (1.0 + max(remaining, 0.0)) >= need:
            decoded += 1
        else:
            break
    return decoded


# ---------------------------------------------------------------------------
# coupled sampling of active-device populations
#
# The active gains of a slot form a Poisson point process with intensity
# lam * exp(-g/gamma) / gamma. Mapping g -> lam * exp(-g/gamma) turns it into a
# unit-rate process on [0, lam], so with arrival epochs E_1 < E_2 < ... of a
# unit-rate process the active gains are gamma * ln(lam / E_k) for E_k < lam,
# already in descending order. The epochs do not depend on lam.

ARRIVAL_BLOCK = 32
# Above this many cached epochs per draw set they are regenerated per query.
CACHE_LIMIT = 1 << 26


class DeviceDraws:
    """Seeded mMTC populations shared by all arrival rates.

    Trial ``i`` owns one sequence of unit-rate arrival epochs; an arrival rate
    ``lam`` activates the epochs below ``lam``. Epochs are drawn in fixed
    blocks so the sequence never depends on how far it was extended.
    """

    def __init__(self, gamma_m: float, plan: McPlan, role: str = "mmtc"):
        if not gamma_m > 0:
            raise ValueError("gamma_m must be positive")
        self.gamma_m = gamma_m
        self.plan = plan
        self.role = role
        self._cache: dict[int, tuple[np.random.Generator, np.ndarray]] = {}

    def _extend(self, rng: np.random.Generator, epochs: np.ndarray, lam: float) -> np.ndarray:
        while epochs.shape[1] == 0 or epochs[:, -1].min() < lam:
            block = rng.standard_exponential((ARRIVAL_BLOCK, epochs.shape[0])).T
            start = epochs[:, -1:] if epochs.shape[1] else 0.0
            epochs = np.hstack([epochs, start + np.cumsum(block, axis=1)])
        return epochs

    def arrivals(self, index: int, n: int, lam: float) -> np.ndarray:
        """(n, width) epochs whose last column exceeds ``lam`` in every row."""
        if index in self._cache:
            rng, epochs = self._cache[index]
        else:
            rng, epochs = self.plan.rng(self.role, index), np.empty((n, 0))
        epochs = self._extend(rng, epochs, lam)
        if self.plan.trials * epochs.shape[1] <= CACHE_LIMIT:
            self._cache[index] = (rng, epochs)
        return epochs

    def batch(self, index: int, n: int, lam: float) -> DeviceBatch:
        return DeviceBatch(self.arrivals(index, n, lam), lam, self.gamma_m)


@dataclass
class DeviceBatch:
    epochs: np.ndarray
    lam: float
    gamma_m: float

    @property
    def counts(self) -> np.ndarray:
        return (self.epochs < self.lam).sum(axis=1)

    def active(self, i: int) -> np.ndarray:
        """Active gains of trial ``i``, strongest first."""
        e = self.epochs[i]
        return self.gamma_m * np.log(self.lam / e[e < self.lam])


@njit(cache=True, nogil=True)
def trial_gains(epochs_row, lam, gamma):
    count = 0
    while epochs_row[count] < lam:
        count += 1
    g = np.empty(count)
    for k in range(count):
        g[k] = gamma * math.log(lam / epochs_row[k])
    return g


@njit(cache=True, nogil=True)
def suffix_sums(g):
    """suffix[k] = sum of g[k:], length len(g) + 1."""
    suffix = np.zeros(g.shape[0] + 1)
    for k in range(g.shape[0] - 1, -1, -1):
        suffix[k] = suffix[k + 1] + g[k]
    return suffix


@njit(cache=True, nogil=True)
def orth_run_lengths(g, suffix, need):
    """runs[k]: consecutive devices decodable without eMBB from position k on."""
    count = g.shape[0]
    runs = np.zeros(count + 1, dtype=np.int64)
    for k in range(count - 1, -1, -1):
        if g[k] >= need * (1.0 + suffix[k + 1]):
            runs[k] = runs[k + 1] + 1
    return runs


@njit(cache=True, nogil=True)
def _orth_batch(epochs, lam, gamma, need):
    n = epochs.shape[0]
    decoded = np.zeros(n, dtype=np.int64)
    active = np.zeros(n, dtype=np.int64)
    for i in range(n):
        g = trial_gains(epochs[i], lam, gamma)
        decoded[i] = orth_run_lengths(g, suffix_sums(g), need)[0]
        active[i] = g.shape[0]
    return decoded, active


@dataclass
class OrthTotals:
    decoded: int
    active: int
    trials: int


def _orth_totals(draws: DeviceDraws, lam: float, r_m: float) -> OrthTotals:
    need = sinr_threshold(r_m)

    def one(i: int, n: int):
        decoded, active = _orth_batch(draws.arrivals(i, n, lam), lam, draws.gamma_m, need)
        return int(decoded.sum()), int(active.sum())

    parts = map_batches(draws.plan, one)
    return OrthTotals(sum(p[0] for p in parts), sum(p[1] for p in parts), draws.plan.trials)


def error_rate_orth(lambda_m: float, r_m: float, gamma_m: float, plan: McPlan,
                    draws: DeviceDraws | None = None) -> float:
    """Monte Carlo estimate of 1 - E[decoded]/lambda; 0 when lambda is 0.

    E[active] = lambda, so the ratio of decoded to active devices summed over
    trials estimates the same quantity with less variance at small lambda.
    """
    if lambda_m < 0:
        raise ValueError("lambda_m must be >= 0")
    if lambda_m == 0:
        return 0.0
    if draws is None:
        draws = DeviceDraws(gamma_m, plan)
    tot = _orth_totals(draws, lambda_m, r_m)
    return 1.0 - tot.decoded / tot.active if tot.active else 0.0


def single_device_error(r_m: float, gamma_m: float) -> float:
    """Outage of a lone device, the lambda -> 0 limit of the error rate."""
    return -math.expm1(-sinr_threshold(r_m) / gamma_m)


def expand_upper(predicate, start: float = 1.0, limit: float = 1e4) -> float:
    """Double ``start`` until ``predicate`` fails; returns the first failing point (or ``limit``)."""
    hi = start
    while hi < limit and predicate(hi):
        hi *= 2.0
    return min(hi, limit)


def max_arrival_orth(r_m: float, eps_m: float, gamma_m: float, plan: McPlan,
                     bracket: SearchBracket | None = None, draws: DeviceDraws | None = None,
                     threshold: float | None = None) -> float | None:
    """Largest arrival rate with mMTC error rate at most ``eps_m``.

    ``None`` when even a lone device misses the target. Without a bracket the
    upper end is found by doubling from 1. ``threshold`` overrides ``eps_m`` as
    the error budget (used for the shifted targets of the bounds).
    """
    budget = eps_m if threshold is None else threshold
    if draws is None:
        draws = DeviceDraws(gamma_m, plan)
    seen: list[tuple[float, float]] = []

    def feasible(lam: float) -> bool:
        err = error_rate_orth(lam, r_m, gamma_m, plan, draws)
        seen.append((lam, err))
        return err <= budget

    if single_device_error(r_m, gamma_m) > budget:
        return None
    if bracket is None:
        hi = expand_upper(feasible)
        bracket = SearchBracket.relative(0.0, hi)
    result = max_feasible(feasible, bracket)
    if len(seen) > 2:
        lams, errs = zip(*seen)
        slack = [binomial_halfwidth(min(max(e, 1e-3), 0.5), max(int(l * plan.trials), 1)) for l, e in seen]
        check_nondecreasing(lams, errs, slack, "mMTC error rate vs arrival rate")
    return result
