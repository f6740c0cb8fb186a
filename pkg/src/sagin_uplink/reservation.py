"""Negotiation-window fixed point for the relayed uplink.

During the leading window of every frame, relayed users contend with the
same backoff discipline as the direct scheme but leave the game after a
successful handshake and only rejoin with probability q per slot (q is
the stationary in-negotiation fraction of their duty cycle).  The
effective contender population is therefore n_gas * q, and the coupled
unknowns are the per-slot transmit probability eps and the collision
probability varrho.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import MacTimings, SystemConfig
from .contention import ConvergenceError, _geom_sum


class SubunitPopulationError(ValueError):
    """Fewer than one effective contender; the negotiation model does not
    apply and the caller decides what an empty window means."""


@dataclass(frozen=True)
class ReservationPoint:
    n_gas: float        # users on the relayed path (may be fractional)
    q: float            # stationary in-negotiation probability
    epsilon: float      # per-slot transmit probability during negotiation
    varrho: float       # collision probability seen by a transmitter
    zeta_s: float       # per-slot probability of a successful handshake
    n_reserved: float   # expected successful reservations per frame
    step: float         # payload packets each winner sends per frame
    beta: float         # per-winner share of frame airtime, step*payload/frame
    residual: float     # fixed-point residual at the returned point


def negotiation_transmit_probability(varrho: float, q: float, w_min: int, stages: int) -> float:
    """Unconditional per-slot transmit probability of one negotiating user
    given its collision probability.  Identical to the saturated backoff
    cycle plus an idle stretch of mean (1-q)/q slots after each success;
    the algebraic form stays finite at varrho = 1/2."""
    backoff_slots = (w_min + 1.0) + varrho * w_min * _geom_sum(2.0 * varrho, stages)
    return 2.0 * q / (q * backoff_slots + 2.0 * (1.0 - q) * (1.0 - varrho))


def _collision_of_eps(eps: float, n_eff: float) -> float:
    return 1.0 - (1.0 - eps) ** (n_eff - 1.0)


def solve_reservation(n_gas: float, cfg: SystemConfig, timings: MacTimings,
                      tol: float = 1e-12, max_iters: int = 500) -> ReservationPoint:
    """Solve the eps-varrho pair at n_gas relayed users and derive the
    per-frame reservation capacity.

    Bisection on h(eps) = eps - eps(varrho(eps)) after a sampled
    uniqueness check; falls back to damped iteration if the sampled curve
    shows multiple sign changes.
    """
    if tol <= 0:
        raise ValueError(f"tol={tol} must be > 0")
    q = cfg.q_negotiation()
    n_eff = n_gas * q
    if n_eff < 1.0 - 1e-12:
        raise SubunitPopulationError(
            f"subunit-population: n_gas*q = {n_eff:.6g} < 1 effective contender")
    w, stages = timings.w_min, timings.backoff_stages

    if abs(n_eff - 1.0) <= 1e-12:
        eps = negotiation_transmit_probability(0.0, q, w, stages)
        return _finish(n_gas, q, eps, 0.0, 0.0, timings)

    def h(eps: float) -> float:
        return eps - negotiation_transmit_probability(_collision_of_eps(eps, n_eff), q, w, stages)

    lo, hi = 1e-12, 1.0 - 1e-12
    samples = [lo + (hi - lo) * i / 32 for i in range(33)]
    signs = [h(x) >= 0 for x in samples]
    brackets = [(samples[i], samples[i + 1]) for i in range(32) if signs[i] != signs[i + 1]]

    if len(brackets) == 1:
        lo, hi = brackets[0]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if h(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-16:
                break
        eps = 0.5 * (lo + hi)
    else:
        eps = negotiation_transmit_probability(0.0, q, w, stages)
        residual = math.inf
        for _ in range(max_iters):
            nxt = negotiation_transmit_probability(_collision_of_eps(eps, n_eff), q, w, stages)
            if abs(eps - nxt) > residual:
                raise ConvergenceError(f"no-convergence: oscillation at n_gas={n_gas}")
            residual = abs(eps - nxt)
            eps = 0.5 * eps + 0.5 * nxt
            if residual <= tol:
                break

    residual = abs(h(eps))
    if residual > tol:
        raise ConvergenceError(f"no-convergence: residual {residual} > tol {tol} at n_gas={n_gas}")
    varrho = _collision_of_eps(eps, n_eff)
    return _finish(n_gas, q, eps, varrho, residual, timings)


def _finish(n_gas: float, q: float, eps: float, varrho: float, residual: float,
            timings: MacTimings) -> ReservationPoint:
    n_eff = n_gas * q
    zeta_s = n_eff * eps * (1.0 - eps) ** (n_eff - 1.0)
    n_reserved = timings.negotiation_s * zeta_s / timings.t_handshake()
    if n_reserved > 0:
        step = timings.reserved_s() / (n_reserved * timings.payload_s)
    else:
        step = math.inf
    beta = timings.payload_s * step / timings.frame_s if math.isfinite(step) else math.inf
    return ReservationPoint(
        n_gas=float(n_gas), q=q, epsilon=eps, varrho=varrho, zeta_s=zeta_s,
        n_reserved=n_reserved, step=step, beta=beta, residual=residual,
    )


@dataclass(frozen=True)
class Capacity:
    n_reserved: float
    step: float
    empty: bool = False


def reservation_capacity(point: ReservationPoint, timings: MacTimings) -> Capacity:
    """Winners per frame and packets per winner; the reserved window is
    partitioned exactly, so n_reserved * step * payload_s equals the
    reserved duration whenever any handshake succeeds."""
    n_reserved = timings.negotiation_s * point.zeta_s / timings.t_handshake()
    if n_reserved <= 0:
        return Capacity(n_reserved=0.0, step=math.nan, empty=True)
    return Capacity(n_reserved=n_reserved, step=timings.reserved_s() / (n_reserved * timings.payload_s))


def effective_beta(point: ReservationPoint, timings: MacTimings) -> float:
    """Per-winner airtime share used by throughput accounting.  When fewer
    than one reservation is expected per frame, the lone winner still
    cannot use more than the whole reserved window, so the share is capped
    at reserved_s/frame_s."""
    cap = timings.reserved_s() / timings.frame_s
    if not math.isfinite(point.beta):
        return 0.0
    return min(point.beta, cap)
