"""eMBB transmitter under truncated channel inversion.

The user knows its gain G and transmits with power G_tar/G when G >= G_min,
otherwise it stays silent. Unit average power ties G_tar to G_min through
the exponential integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import McPlan, exp_integral_e1, map_batches, sample_exp_gain


class DegeneratePolicyError(ValueError):
    """No finite target SNR meets the unit average power constraint."""


@dataclass(frozen=True)
class EmbbPolicy:
    g_min: float
    g_tar: float
    a_b: float
    k: int = 0

    @classmethod
    def from_activation(cls, a_b: float, gamma_b: float, rho: float = 1.0, k: int = 0) -> EmbbPolicy:
        """Policy with activation ``a_b`` and target SNR ``rho`` times the power cap."""
        g_min = threshold_from_activation(a_b, gamma_b)
        return cls(g_min, rho * max_target_snr(g_min, gamma_b), a_b, k)


def threshold_snr(gamma_b: float, eps_b: float) -> float:
    """Smallest gain at which the user transmits so that outage equals ``eps_b``."""
    if not 0 < eps_b < 1:
        raise ValueError("eps_b must lie in (0, 1)")
    return -gamma_b * math.log1p(-eps_b)


def activation_probability(g_min: float, gamma_b: float) -> float:
    if g_min < 0:
        raise ValueError("g_min must be >= 0")
    return math.exp(-g_min / gamma_b)


def threshold_from_activation(a_b: float, gamma_b: float) -> float:
    if not 0 < a_b <= 1:
        raise ValueError("a_b must lie in (0, 1]")
    return -gamma_b * math.log(a_b)


def max_target_snr(g_min: float, gamma_b: float) -> float:
    """Largest received SNR reachable by inversion at unit average power."""
    if g_min <= 0:
        raise DegeneratePolicyError(
            "g_min = 0 leaves no finite target SNR: the average power of inversion diverges"
        )
    return gamma_b / exp_integral_e1(g_min / gamma_b)


def power_cap_for_activation(a_b: float, gamma_b: float) -> float:
    return max_target_snr(threshold_from_activation(a_b, gamma_b), gamma_b)


def instantaneous_power(g: float, policy: EmbbPolicy) -> float:
    return policy.g_tar / g if g >= policy.g_min else 0.0


def orth_rate(gamma_b: float, eps_b: float) -> float:
    """Per-channel eMBB rate in bits/symbol on an exclusive resource."""
    return math.log2(1.0 + max_target_snr(threshold_snr(gamma_b, eps_b), gamma_b))


def simulate_outage(gamma_b: float, eps_b: float, plan: McPlan) -> float:
    """Monte Carlo fraction of slots in which the user stays silent (G < G_min)."""
    g_min = threshold_snr(gamma_b, eps_b)

    def one(i: int, n: int) -> int:
        gains = sample_exp_gain(gamma_b, plan.rng("embb", i), n)
        return int(np.count_nonzero(gains < g_min))

    return sum(map_batches(plan, one)) / plan.trials
