"""Numeric primitives shared by every service model.

Exponential integral, seeded batch streams for Monte Carlo, lower empirical
quantiles and a bisection search for monotone feasibility predicates.
"""
from __future__ import annotations

import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

log = logging.getLogger(__name__)

T = TypeVar("T")

EULER_GAMMA = 0.57721566490153286061
DEFAULT_BATCH = 1 << 16


@dataclass(frozen=True)
class McPlan:
    """Trial budget and seeding for a Monte Carlo estimate.

    Trial ``i`` always lives in batch ``i // batch`` and every batch draws
    from its own child stream of ``master_seed``, so the estimate does not
    depend on ``workers``.
    """

    trials: int
    master_seed: int = 0
    batch: int | None = None
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.batch is None:
            object.__setattr__(self, "batch", min(DEFAULT_BATCH, self.trials))
        if not 1 <= self.batch <= self.trials:
            raise ValueError("batch must satisfy 1 <= batch <= trials")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def n_batches(self) -> int:
        return -(-self.trials // self.batch)

    def batch_sizes(self) -> list[int]:
        full, rest = divmod(self.trials, self.batch)
        return [self.batch] * full + ([rest] if rest else [])

    def with_trials(self, trials: int) -> McPlan:
        return McPlan(trials, self.master_seed, min(self.batch, trials), self.workers)

    def rng(self, role: str, index: int) -> np.random.Generator:
        """Generator for batch ``index`` of the stream named ``role``."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(stream_salt(role), index))
        return np.random.Generator(np.random.PCG64(seq))


def stream_salt(role: str) -> int:
    return zlib.crc32(role.encode())


def map_batches(plan: McPlan, fn: Callable[[int, int], T]) -> list[T]:
    """Evaluate ``fn(batch_index, batch_size)`` for all batches, in batch order.

    Results come back ordered by batch index whatever the worker count, so
    reductions over them are deterministic.
    """
    jobs = list(enumerate(plan.batch_sizes()))
    if plan.workers == 1 or len(jobs) == 1:
        return [fn(i, n) for i, n in jobs]
    with ThreadPoolExecutor(max_workers=plan.workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


@dataclass(frozen=True)
class SearchBracket:
    """Search interval for :func:`max_feasible`.

    With ``geometric`` the tolerance is relative: the search halves down from
    ``hi`` until the predicate holds (or the point drops below
    ``floor * hi``) and then bisects in log scale, which keeps small answers
    as precise as large ones.
    """

    lo: float
    hi: float
    tol: float
    max_iter: int = 200
    geometric: bool = False
    floor: float = 1e-6

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @classmethod
    def relative(cls, lo: float, hi: float, rel_tol: float = 1e-4, max_iter: int = 200):
        return cls(lo, hi, rel_tol * max(abs(hi), abs(lo)), max_iter)

    @classmethod
    def scaled(cls, hi: float, rel_tol: float = 1e-4, floor: float = 1e-6):
        """Geometric bracket on [0, hi]."""
        return cls(0.0, hi, rel_tol, geometric=True, floor=floor)


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) for x > 0.

    Power series below 1, Lentz continued fraction above.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"E1 is only defined for x > 0, got {x}")
    if x < 1.0:
        term = 1.0
        total = 0.0
        k = 1
        while True:
            term *= -x / k
            contrib = -term / k
            total += contrib
            if abs(contrib) < 1e-17 * abs(total):
                break
            k += 1
        return -EULER_GAMMA - math.log(x) + total
    # E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)


def sample_exp_gain(mean_gain: float, stream: np.random.Generator, size=None):
    """Squared magnitude of a Rayleigh coefficient with average power ``mean_gain``."""
    if not mean_gain > 0:
        raise ValueError("mean_gain must be positive")
    return mean_gain * stream.standard_exponential(size)


def quantile_rank(n: int, p: float) -> int:
    # 1-based rank ceil(p*n); the small guard absorbs float noise in p*n
    return max(1, math.ceil(p * n - 1e-9))


def empirical_quantile(samples: Sequence[float] | np.ndarray, p: float) -> float:
    """Lower empirical quantile: the ceil(p*N)-th smallest sample."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical_quantile needs at least one sample")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    k = quantile_rank(x.size, p)
    return float(np.partition(x, k - 1)[k - 1])


def smallest_k(chunks: Iterable[np.ndarray], k: int) -> np.ndarray:
    """The k smallest values across chunks, sorted; memory O(k) per chunk."""
    keep = []
    for chunk in chunks:
        chunk = np.asarray(chunk, dtype=float).ravel()
        if chunk.size > k:
            chunk = np.partition(chunk, k - 1)[:k]
        keep.append(chunk)
    pooled = np.concatenate(keep) if keep else np.empty(0)
    if pooled.size > k:
        pooled = np.partition(pooled, k - 1)[:k]
    return np.sort(pooled)


def max_feasible(predicate: Callable[[float], bool], bracket: SearchBracket) -> float | None:
    """Largest x in the bracket with ``predicate(x)`` true.

    ``predicate`` must be true below some threshold and false above it. Returns
    ``None`` when it already fails at ``bracket.lo`` and ``bracket.hi`` when
    it holds on the whole bracket. The returned point was always evaluated true.
    """
    lo, hi = bracket.lo, bracket.hi
    if not predicate(lo):
        return None
    if predicate(hi):
        return hi
    if bracket.geometric:
        return _max_feasible_geometric(predicate, bracket)
    for _ in range(bracket.max_iter):
        if hi - lo <= bracket.tol:
            break
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    else:
        log.warning("max_feasible stopped after %d iterations, width %.3g", bracket.max_iter, hi - lo)
    return lo


def _max_feasible_geometric(predicate, bracket: SearchBracket) -> float:
    # predicate(lo) is true and predicate(hi) false here
    hi = bracket.hi
    lo = hi / 2
    while lo > max(bracket.lo, bracket.floor * bracket.hi) and not predicate(lo):
        hi, lo = lo, lo / 2
    if lo <= max(bracket.lo, bracket.floor * bracket.hi):
        return bracket.lo
    for _ in range(bracket.max_iter):
        if hi <= lo * (1 + bracket.tol):
            return lo
        mid = math.sqrt(lo * hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    log.warning("max_feasible stopped after %d iterations, ratio %.3g", bracket.max_iter, hi / lo)
    return lo


def binomial_halfwidth(p: float, n: int, z: float = 3.0) -> float:
    return z * math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else math.inf


def check_nondecreasing(xs: Sequence[float], ys: Sequence[float], slack: float | Sequence[float], what: str) -> bool:
    """Warn when ``ys`` (ordered by ``xs``) drops by more than ``slack``."""
    order = np.argsort(xs, kind="stable")
    y = np.asarray(ys, dtype=float)[order]
    s = np.broadcast_to(np.asarray(slack, dtype=float), y.shape)[order]
    running = np.maximum.accumulate(y)
    bad = running - y > s
    if bad.any():
        log.warning("%s is not monotone beyond noise at %d of %d points", what, int(bad.sum()), y.size)
        return False
    return True


def iter_chunks(plan: McPlan, make: Callable[[int, int], np.ndarray]) -> Iterator[np.ndarray]:
    for i, n in enumerate(plan.batch_sizes()):
        yield make(i, n)
