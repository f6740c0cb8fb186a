"""System throughput composed from contention, reservation and link rates.

Direct-path accounting: each of the M sub-channels is busy with a
successful transmission a fraction alpha of the time, and that success
carries the rate of the transmitting user, so the carried rate per
sub-channel is alpha times the population average of the mode-weighted
user rates.  Relayed-path accounting: every reservation winner sends
``step`` packets per frame, i.e. a beta = step*payload/frame share of the
relayed band, and winners are exactly the assigned users.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import MacTimings, SystemConfig
from .contention import ContentionPoint, solve_contention
from .rates import RateTable
from .reservation import (ReservationPoint, SubunitPopulationError,
                          effective_beta, solve_reservation)


class StalePointError(ValueError):
    """Contention/reservation point was solved for a different population
    than the decision implies."""


@dataclass(frozen=True)
class ThroughputReport:
    s_g2s: float       # bit/s carried by the direct path
    s_gas: float       # bit/s carried through the relays
    s_sum: float
    normalized: float  # s_sum / total bandwidth
    alpha: float       # direct-path channel utilization used
    beta: float        # per-winner relayed airtime share used
    n1: float          # expected users on the direct path
    n2: float          # expected users on the relayed path


REPORT_COLUMNS = ("n_users", "rho", "s_g2s", "s_gas", "s_sum", "normalized",
                  "alpha", "beta", "n1", "n2")


def throughput_g2s(rho: np.ndarray, rates: RateTable, cp: ContentionPoint,
                   timings: MacTimings, cfg: SystemConfig) -> float:
    """Direct-path throughput across all sub-channels for mode
    probabilities ``rho`` and a contention point solved at the matching
    population."""
    rho = np.asarray(rho, dtype=float)
    n = len(rho)
    n1 = float(np.sum(1.0 - rho))
    expected = max(n1, 1.0)
    if abs(cp.n_contenders - expected) > 1e-6:
        raise StalePointError(
            f"stale-contention-point: solved at {cp.n_contenders}, decision implies {expected}")
    weighted = float(np.sum((1.0 - rho) * rates.r_g2s[:n]))
    return cfg.n_subchannels * cp.utilization * weighted / n


def throughput_gas(rho: np.ndarray, assignment: np.ndarray, rates: RateTable,
                   rp: ReservationPoint, timings: MacTimings) -> float:
    """Relayed-path throughput for the given relay selection; each
    selected user contributes its rate weighted by its relay probability
    and the per-winner airtime share."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(assignment)
    n2 = float(np.sum(rho))
    if abs(rp.n_gas - n2) > 1e-6:
        raise StalePointError(f"stale-reservation-point: solved at {rp.n_gas}, decision implies {n2}")
    if u.shape != rates.r_gas.shape[:u.ndim] and u.shape != rates.r_gas.shape:
        raise ValueError(f"constraint-violation: assignment shape {u.shape} "
                         f"does not match rate table {rates.r_gas.shape}")
    if u.size and (np.any((u != 0) & (u != 1)) or np.any(u.sum(axis=1) > 1)):
        raise ValueError("constraint-violation: assignment must be 0/1 with row sums <= 1")
    beta = effective_beta(rp, timings)
    return beta * float(np.sum(rho[:, None] * u * rates.r_gas))


def case1_sum(rho: np.ndarray, assignment: np.ndarray, rates: RateTable,
              timings: MacTimings, cfg: SystemConfig) -> ThroughputReport:
    """Overall throughput when users split across both paths with
    per-user probabilities; solves both fixed points internally and
    degenerates exactly to the single-path cases at rho = 0 or 1."""
    rho = np.asarray(rho, dtype=float)
    n = len(rho)
    n1 = float(np.sum(1.0 - rho))
    n2 = float(np.sum(rho))

    s_g2s = 0.0
    alpha = 0.0
    if n1 > 0 and float(np.sum((1.0 - rho) * rates.r_g2s[:n])) > 0:
        cp = solve_contention(n1, timings)
        alpha = cp.utilization
        s_g2s = throughput_g2s(rho, rates, cp, timings, cfg)

    s_gas = 0.0
    beta = 0.0
    u = np.asarray(assignment)
    if n2 > 0 and u.size and u.sum() > 0:
        try:
            rp = solve_reservation(n2, cfg, timings)
        except SubunitPopulationError:
            rp = None  # no effective contender: the window carries nothing
        if rp is not None and rp.zeta_s > 0:
            beta = effective_beta(rp, timings)
            s_gas = throughput_gas(rho, u, rates, rp, timings)

    s_sum = s_g2s + s_gas
    return ThroughputReport(
        s_g2s=s_g2s, s_gas=s_gas, s_sum=s_sum,
        normalized=s_sum / cfg.bandwidth_hz, alpha=alpha, beta=beta, n1=n1, n2=n2,
    )


def case2_g2s_only(rates: RateTable, timings: MacTimings, cfg: SystemConfig) -> ThroughputReport:
    """Everyone on the direct path."""
    if cfg.n_users < 1:
        raise ValueError("invalid-count: n_users must be >= 1")
    rho = np.zeros(cfg.n_users)
    return case1_sum(rho, np.zeros((cfg.n_users, cfg.n_haps), dtype=int), rates, timings, cfg)


def case3_gas_only(assignment: np.ndarray, rates: RateTable, timings: MacTimings,
                   cfg: SystemConfig) -> ThroughputReport:
    """Everyone on the relayed path with the given relay selection."""
    if cfg.n_users < 1:
        raise ValueError("invalid-count: n_users must be >= 1")
    rho = np.ones(cfg.n_users)
    return case1_sum(rho, assignment, rates, timings, cfg)
