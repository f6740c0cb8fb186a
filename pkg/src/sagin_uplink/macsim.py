"""Slot-level Monte Carlo oracle for both MAC schemes.

Stations follow the textbook backoff chain: a uniformly drawn counter
over the current window, one decrement per generalized slot, transmission
when it reaches zero, window doubling up to the stage cap on collision
and a reset on success.  Negotiation stations additionally leave the game
after a success and rejoin with probability q per slot, which is exactly
the renewal structure behind the analytic transmit probability.

Standard errors come from batch means: the counted slots are split into
fixed-size batches and the spread of per-batch frequencies estimates the
sampling error, which a plain binomial formula would understate because
consecutive slots are correlated through the backoff state.

PRNG: numpy's default_rng (PCG64), explicitly seeded, so every statistic
is bit-reproducible from (inputs, seed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import MacTimings

_BURN_IN_FRACTION = 0.05  # discarded warm-up, removes the cold-start bias
_TARGET_BATCHES = 100


@dataclass(frozen=True)
class SimStats:
    slots_simulated: int
    tx_attempts: int
    successes: int
    collisions: int
    idles: int
    est_tau: float
    se_tau: float
    est_ps: float
    se_ps: float
    est_pe: float
    se_pe: float
    est_pc: float
    se_pc: float
    est_util: float
    se_util: float
    seed: int


@dataclass(frozen=True)
class NegotiationStats:
    frames: int
    slots_per_frame: int
    slots_simulated: int
    successes: int
    est_zeta_s: float
    se_zeta_s: float
    mean_reservations: float
    seed: int


def _batch_se(per_batch: np.ndarray) -> float:
    """Standard error of the overall mean from per-batch means; falls back
    to a continuity-corrected binomial floor when the batches are
    degenerate so reported errors stay positive."""
    b = len(per_batch)
    se = float(per_batch.std(ddof=1) / math.sqrt(b)) if b > 1 else 0.0
    if se > 0.0:
        return se
    return math.sqrt(0.5 / b) / b


def _n_batches(slots: int) -> int:
    return max(min(_TARGET_BATCHES, slots // 200), 2)


class _BackoffPool:
    """Counters and stages for a fixed set of stations."""

    def __init__(self, n: int, w_min: int, stages: int, rng: np.random.Generator):
        self.w_min = w_min
        self.max_stage = stages
        self.rng = rng
        self.counters = rng.integers(0, w_min, size=n)
        self.stages = np.zeros(n, dtype=np.int64)

    def redraw(self, idx: np.ndarray) -> None:
        windows = self.w_min * (2 ** self.stages[idx])
        self.counters[idx] = self.rng.integers(0, windows)

    def on_success(self, idx: np.ndarray) -> None:
        self.stages[idx] = 0
        self.redraw(idx)

    def on_collision(self, idx: np.ndarray) -> None:
        self.stages[idx] = np.minimum(self.stages[idx] + 1, self.max_stage)
        self.redraw(idx)


def simulate_csma(n: int, timings: MacTimings, slots: int, seed: int) -> SimStats:
    """Saturated contention of ``n`` stations over ``slots`` generalized
    slots after a short warm-up."""
    if n < 1:
        raise ValueError(f"invalid-count: n={n} must be >= 1")
    if slots < 10_000:
        raise ValueError(f"slots={slots} must be >= 10^4")
    rng = np.random.default_rng(seed)
    pool = _BackoffPool(n, timings.w_min, timings.backoff_stages, rng)

    n_batches = _n_batches(slots)
    batch_len = slots // n_batches
    counted = batch_len * n_batches
    burn_in = int(counted * _BURN_IN_FRACTION)
    total = counted + burn_in

    idles = np.zeros(n_batches, dtype=np.int64)
    succs = np.zeros(n_batches, dtype=np.int64)
    colls = np.zeros(n_batches, dtype=np.int64)
    attempts = np.zeros(n_batches, dtype=np.int64)

    done = 0
    while done < total:
        in_count = done >= burn_in
        batch = (done - burn_in) // batch_len if in_count else -1
        m = int(pool.counters.min())
        if m > 0:
            boundary = burn_in if not in_count else burn_in + (batch + 1) * batch_len
            jump = min(m, total - done, boundary - done)
            if in_count:
                idles[batch] += jump
            pool.counters -= jump
            done += jump
            continue
        tx = np.flatnonzero(pool.counters == 0)
        bystanders = pool.counters > 0  # fresh redraws start next slot
        k = len(tx)
        if in_count:
            attempts[batch] += k
        if k == 1:
            if in_count:
                succs[batch] += 1
            pool.on_success(tx)
        else:
            if in_count:
                colls[batch] += 1
            pool.on_collision(tx)
        pool.counters[bystanders] -= 1
        done += 1

    batch_slots = float(batch_len)
    est_tau = attempts.sum() / (counted * n)
    est_ps = succs.sum() / counted
    est_pe = idles.sum() / counted
    est_pc = colls.sum() / counted
    util_batches = _utilization(succs / batch_slots, idles / batch_slots, colls / batch_slots, timings)
    est_util = _utilization(est_ps, est_pe, est_pc, timings)
    return SimStats(
        slots_simulated=counted, tx_attempts=int(attempts.sum()), successes=int(succs.sum()),
        collisions=int(colls.sum()), idles=int(idles.sum()),
        est_tau=est_tau, se_tau=_batch_se(attempts / (batch_slots * n)),
        est_ps=est_ps, se_ps=_batch_se(succs / batch_slots),
        est_pe=est_pe, se_pe=_batch_se(idles / batch_slots),
        est_pc=est_pc, se_pc=_batch_se(colls / batch_slots),
        est_util=float(est_util), se_util=_batch_se(np.asarray(util_batches)),
        seed=seed,
    )


def _utilization(ps, pe, pc, timings: MacTimings):
    t_s, t_c, delta = timings.t_success(), timings.t_collision(), timings.slot_s
    denom = pe * delta + ps * t_s + pc * t_c
    return np.where(denom > 0, ps * t_s / np.where(denom > 0, denom, 1.0), 0.0)


def simulate_negotiation(n2: float, q: float, timings: MacTimings, frames: int,
                         seed: int) -> NegotiationStats:
    """Reservation contention over ``frames`` negotiation windows.

    The effective population round(n2*q) of in-negotiation users persists
    across frames; a user that lands a reservation idles a geometric(q)
    number of slots before needing the next one.  Each window holds
    floor(negotiation_s / handshake time) uniform slots, matching the
    capacity bookkeeping of the analytic model.
    """
    if n2 < 1:
        raise ValueError(f"invalid-count: n2={n2} must be >= 1")
    if frames < 100:
        raise ValueError(f"frames={frames} must be >= 100")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} must be within [0, 1]")
    rng = np.random.default_rng(seed)
    slots_per_frame = int(timings.negotiation_s / timings.t_handshake())
    total = frames * slots_per_frame
    n_eff = int(round(n2 * q))

    if n_eff == 0:
        return NegotiationStats(frames=frames, slots_per_frame=slots_per_frame,
                                slots_simulated=total, successes=0, est_zeta_s=0.0,
                                se_zeta_s=_batch_se(np.zeros(_n_batches(total))),
                                mean_reservations=0.0, seed=seed)

    pool = _BackoffPool(n_eff, timings.w_min, timings.backoff_stages, rng)
    idle_left = np.zeros(n_eff, dtype=np.int64)  # slots until the user rejoins

    n_batches = _n_batches(total)
    batch_len = total // n_batches
    counted = batch_len * n_batches
    burn_in = int(counted * _BURN_IN_FRACTION)
    succs = np.zeros(n_batches, dtype=np.int64)

    for slot in range(counted + burn_in):
        active = idle_left == 0
        tx = np.flatnonzero(active & (pool.counters == 0))
        decrement = active & (pool.counters > 0)  # before redraws take effect
        if len(tx) == 1:
            if slot >= burn_in:
                succs[min((slot - burn_in) // batch_len, n_batches - 1)] += 1
            if q >= 1.0:
                idle_left[tx] = 0
            else:
                idle_left[tx] = rng.geometric(q) - 1
            pool.on_success(tx)
        elif len(tx) > 1:
            pool.on_collision(tx)
        pool.counters[decrement] -= 1
        idle_left[~active] -= 1

    successes = int(succs.sum())
    est = successes / counted
    return NegotiationStats(
        frames=frames, slots_per_frame=slots_per_frame, slots_simulated=counted,
        successes=successes, est_zeta_s=est, se_zeta_s=_batch_se(succs / batch_len),
        mean_reservations=successes / (counted / slots_per_frame), seed=seed,
    )
