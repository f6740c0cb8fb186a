"""Saturated CSMA/CA contention fixed point for the direct uplink.

Couples the per-slot transmit probability tau of a station doing binary
exponential backoff (window w_min doubling over backoff_stages, then
saturating) with the collision probability p it sees from n-1 peers.
The contender count may be fractional because the transmission-control
layer feeds expected populations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import MacTimings


class ConvergenceError(RuntimeError):
    """Fixed-point iteration and bisection both failed; the timing
    parameters are pathological."""


@dataclass(frozen=True)
class ContentionPoint:
    n_contenders: float   # effective stations at one sub-channel
    tau: float            # per-slot transmit probability
    p_coll: float         # collision probability seen by a transmitter
    p_success: float      # slot carries exactly one transmission
    p_idle: float         # slot is empty
    p_fail: float         # slot carries a collision
    utilization: float    # fraction of channel time in successful payloads
    residual: float       # |tau - tau(p(tau))| at the returned point
    clamped: bool = False  # input below one contender was lifted to one


def _geom_sum(x: float, terms: int) -> float:
    """sum_{i=0}^{terms-1} x**i, exact for the small stage counts used here."""
    total = 0.0
    power = 1.0
    for _ in range(terms):
        total += power
        power *= x
    return total


def transmit_probability(p: float, w_min: int, stages: int) -> float:
    """Stationary transmit probability of one station given its collision
    probability; algebraic form stays finite at p = 1/2."""
    return 2.0 / ((w_min + 1.0) + p * w_min * _geom_sum(2.0 * p, stages))


def collision_probability(tau: float, n_contenders: float) -> float:
    return 1.0 - (1.0 - tau) ** (n_contenders - 1.0)


def slot_probabilities(tau: float, n_contenders: float) -> tuple[float, float, float]:
    """(success, idle, collision) probabilities of one generalized slot."""
    p_success = n_contenders * tau * (1.0 - tau) ** (n_contenders - 1.0)
    p_idle = (1.0 - tau) ** n_contenders
    return p_success, p_idle, 1.0 - p_success - p_idle


def solve_contention(n_contenders: float, timings: MacTimings, tol: float = 1e-12,
                     max_iters: int = 500) -> ContentionPoint:
    """Solve the tau-p coupling for a (possibly fractional) contender count.

    Damped fixed-point iteration, falling back to bisection on
    g(tau) = tau - tau(p(tau)) when the iteration stalls; g is strictly
    increasing so the root is unique.
    """
    if n_contenders <= 0:
        raise ValueError(f"invalid-count: n_contenders={n_contenders} must be > 0")
    if tol <= 0:
        raise ValueError(f"tol={tol} must be > 0")
    clamped = n_contenders < 1.0
    n = 1.0 if clamped else float(n_contenders)
    w, stages = timings.w_min, timings.backoff_stages

    if n == 1.0:
        tau = transmit_probability(0.0, w, stages)
        return _finish(n, tau, timings, 0.0, clamped)

    def g(tau: float) -> float:
        return tau - transmit_probability(collision_probability(tau, n), w, stages)

    tau = transmit_probability(0.0, w, stages)
    residual = math.inf
    for _ in range(max_iters):
        nxt = transmit_probability(collision_probability(tau, n), w, stages)
        new_residual = abs(tau - nxt)
        if new_residual <= tol:
            tau = 0.5 * tau + 0.5 * nxt
            residual = abs(g(tau))
            if residual <= tol:
                return _finish(n, tau, timings, residual, clamped)
        if new_residual > residual:
            break  # oscillating or diverging; bisect instead
        residual = new_residual
        tau = 0.5 * tau + 0.5 * nxt

    lo, hi = 1e-12, transmit_probability(0.0, w, stages)
    if g(hi) < 0:
        hi = 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    tau = 0.5 * (lo + hi)
    residual = abs(g(tau))
    if residual > tol:
        raise ConvergenceError(f"no-convergence: residual {residual} > tol {tol} at n={n}")
    return _finish(n, tau, timings, residual, clamped)


def _finish(n: float, tau: float, timings: MacTimings, residual: float, clamped: bool) -> ContentionPoint:
    p = collision_probability(tau, n)
    p_success, p_idle, p_fail = slot_probabilities(tau, n)
    p_fail = max(p_fail, 0.0)
    point = ContentionPoint(
        n_contenders=n, tau=tau, p_coll=p, p_success=p_success, p_idle=p_idle,
        p_fail=p_fail, utilization=0.0, residual=residual, clamped=clamped,
    )
    return ContentionPoint(**{**point.__dict__, "utilization": utilization(point, timings)})


def utilization(point: ContentionPoint, timings: MacTimings) -> float:
    """Fraction of channel time spent on successful transmissions, with
    idle slots costing one backoff slot and collisions a failed handshake."""
    busy = (point.p_idle * timings.slot_s
            + point.p_success * timings.t_success()
            + point.p_fail * timings.t_collision())
    if busy <= 0:
        raise ValueError("degenerate-denominator: all slot probabilities are zero")
    return point.p_success * timings.t_success() / busy
