"""Transmission-control optimization and per-frame schedule execution.

The joint problem (relay probability rho, relay selection u) is solved by
block-coordinate ascent: the rho step is a grid scan plus golden-section
refinement of the throughput at fixed selection, the u step re-solves the
selection at the reservation capacity implied by the new rho.  A step is
only accepted if the consistently-evaluated objective does not decrease,
so the iterate trace is non-decreasing by construction; when neither
coordinate improves, the run stops at a coordinate-wise optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import Decision, MacTimings, SystemConfig
from .rates import RateTable
from .reservation import ReservationPoint, SubunitPopulationError, solve_reservation
from .throughput import case1_sum

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_FORBIDDEN = -1e18


@dataclass(frozen=True)
class AssignmentResult:
    matrix: np.ndarray          # (N, K) 0/1
    pairs: tuple[tuple[int, int], ...]  # (user, hap), sorted by rate desc
    n_assigned: int
    requested: int              # winners the reservation outcome asked for
    capped: bool                # requested count was infeasible and reduced
    mode: str


@dataclass(frozen=True)
class OptimizerResult:
    rho_star: float
    assignment_star: np.ndarray
    objective: float
    iterations: int
    trace: tuple[tuple[int, float, float], ...]  # (iteration, rho, objective)
    converged: bool
    coordinate_optimum: bool = False


@dataclass(frozen=True)
class ReservedWindow:
    user: int
    hap: int
    negotiation_offset_s: float  # handshake start inside the negotiation window
    payload_start_s: float       # payload window start inside the frame
    payload_len_s: float


@dataclass(frozen=True)
class FrameSchedule:
    modes: tuple[str, ...]              # per-user "g2s" | "gas"
    windows: tuple[ReservedWindow, ...]
    n_winners: int
    step: float                          # packets granted to each winner
    oversubscribed: bool
    seed: int


def _winner_count(rp: ReservationPoint) -> int:
    return max(int(math.floor(rp.n_reserved + 1e-9)), 0)


def solve_assignment(rho: float, rates: RateTable, rp: ReservationPoint,
                     mode: str = "one-per-hap") -> AssignmentResult:
    """Pick the relay selection maximizing total relayed rate for the
    winner count the negotiation outcome supports.

    per-user-best: relays are time-shared, so the best floor(n_reserved)
    users each take their best relay.  one-per-hap: each relay serves at
    most one user per frame, solved as a maximum-weight bipartite
    matching of exactly min(count, K, N) pairs.  exhaustive: brute force
    over all row selections, used as an oracle on tiny instances.
    """
    n, k = rates.r_gas.shape
    requested = _winner_count(rp)
    if mode == "per-user-best":
        count = min(requested, n)
    elif mode == "one-per-hap":
        count = min(requested, n, k)
    elif mode == "exhaustive":
        if n * k > 20:
            raise ValueError(f"exhaustive mode limited to N*K <= 20, got {n * k}")
        count = min(requested, n)
    else:
        raise ValueError(f"unknown assignment mode {mode!r}")
    capped = count < requested

    matrix = np.zeros((n, k), dtype=int)
    if count == 0 or k == 0:
        return AssignmentResult(matrix, (), 0, requested, capped, mode)

    if mode == "per-user-best":
        best_hap = np.argmax(rates.r_gas, axis=1)
        best_rate = rates.r_gas[np.arange(n), best_hap]
        chosen = np.argsort(-best_rate, kind="stable")[:count]
        pairs = [(int(u), int(best_hap[u])) for u in chosen]
    elif mode == "one-per-hap":
        pairs = _matching_of_size(rates.r_gas, count)
    else:
        pairs = _exhaustive_best(rates.r_gas, count)

    for u, h in pairs:
        matrix[u, h] = 1
    pairs = tuple(sorted(pairs, key=lambda p: (-rates.r_gas[p[0], p[1]], p[0])))
    return AssignmentResult(matrix, pairs, len(pairs), requested, capped, mode)


def _matching_of_size(weights: np.ndarray, size: int) -> list[tuple[int, int]]:
    """Maximum-weight bipartite matching with exactly ``size`` pairs.

    Pads to a square problem where N-size dummy columns let users opt out
    and K-size dummy rows let relays stay idle; dummy-dummy cells are
    forbidden, which forces exactly ``size`` real pairs.
    """
    n, k = weights.shape
    dim = n + k - size
    cost = np.full((dim, dim), _FORBIDDEN)
    cost[:n, :k] = weights
    cost[:n, k:] = 0.0
    cost[n:, :k] = 0.0
    rows, cols = linear_sum_assignment(cost, maximize=True)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if r < n and c < k]


def _exhaustive_best(weights: np.ndarray, count: int) -> list[tuple[int, int]]:
    n, k = weights.shape
    best_total = -1.0
    best: list[tuple[int, int]] = []
    for choice in product(range(k + 1), repeat=n):
        pairs = [(u, c - 1) for u, c in enumerate(choice) if c > 0]
        if len(pairs) != count:
            continue
        total = sum(weights[u, h] for u, h in pairs)
        if total > best_total:
            best_total = total
            best = pairs
    return best


def _maximize_scalar(f: Callable[[float], float], grid: int, tol: float) -> tuple[float, float]:
    """Coarse grid scan over [0, 1] plus golden-section refinement of the
    bracketing interval; ties break toward the smallest argument.
    Points where ``f`` raises are skipped; all-failing is an error."""
    xs = [i / grid for i in range(grid + 1)]
    values: list[Optional[float]] = []
    for x in xs:
        try:
            values.append(f(x))
        except (ArithmeticError, ValueError, RuntimeError):
            values.append(None)
    usable = [(v, i) for i, v in enumerate(values) if v is not None]
    if not usable:
        raise RuntimeError("evaluation-failure: objective failed at every grid point")
    best_value, best_i = max(usable, key=lambda t: (t[0], -t[1]))
    if len(usable) == 1:
        return xs[best_i], best_value

    lo = xs[max(best_i - 1, 0)]
    hi = xs[min(best_i + 1, grid)]
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)

    def safe(x: float) -> float:
        try:
            return f(x)
        except (ArithmeticError, ValueError, RuntimeError):
            return -math.inf

    fc, fd = safe(c), safe(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = safe(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = safe(d)
    x_ref = a if fc >= fd else b
    v_ref = safe(x_ref)
    if v_ref > best_value or (v_ref == best_value and x_ref < xs[best_i]):
        return x_ref, v_ref
    return xs[best_i], best_value


def solve_rho(assignment: np.ndarray, rates: RateTable, cfg: SystemConfig,
              timings: MacTimings, grid: int = 64, tol: float = 1e-6) -> float:
    """Optimal uniform relay probability for a fixed relay selection."""
    if grid < 16:
        raise ValueError(f"grid={grid} must be >= 16")
    u = np.asarray(assignment)

    def objective(rho: float) -> float:
        vec = np.full(cfg.n_users, rho)
        return case1_sum(vec, u, rates, timings, cfg).s_sum

    rho_star, _ = _maximize_scalar(objective, grid, tol)
    return rho_star


def _consistent_objective(rho: float, pool: tuple[tuple[int, int], ...], rates: RateTable,
                          cfg: SystemConfig, timings: MacTimings, mode: str) -> tuple[float, np.ndarray]:
    """Throughput at uniform rho using only as many of the pooled pairs as
    the negotiation outcome at this rho can seat."""
    n, k = rates.r_gas.shape
    count = 0
    if pool and rho > 0:
        try:
            rp = solve_reservation(cfg.n_users * rho, cfg, timings)
        except SubunitPopulationError:
            rp = None
        if rp is not None:
            count = _winner_count(rp)
            if mode == "one-per-hap":
                count = min(count, k)
            count = min(count, len(pool))
    u = np.zeros((n, k), dtype=int)
    for user, hap in pool[:count]:
        u[user, hap] = 1
    vec = np.full(cfg.n_users, rho)
    return case1_sum(vec, u, rates, timings, cfg).s_sum, u


def alternate(cfg: SystemConfig, timings: MacTimings, rates: RateTable,
              max_iters: int = 20, tol: float = 1e-4, grid: int = 128) -> OptimizerResult:
    """Alternate the rho step and the selection step until neither moves.

    The recorded objective is always the consistently-evaluated
    throughput at the accepted iterate, so the trace never decreases; a
    step that would decrease it means the blocks disagree through the
    winner-count coupling and the best iterate so far is a coordinate
    optimum.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters={max_iters} must be >= 1")
    mode = cfg.assignment_mode

    def assignment_at(rho: float) -> AssignmentResult:
        if rho <= 0 or cfg.n_haps == 0:
            return AssignmentResult(np.zeros((cfg.n_users, cfg.n_haps), dtype=int),
                                    (), 0, 0, False, mode)
        try:
            rp = solve_reservation(cfg.n_users * rho, cfg, timings)
        except SubunitPopulationError:
            return AssignmentResult(np.zeros((cfg.n_users, cfg.n_haps), dtype=int),
                                    (), 0, 0, False, mode)
        return solve_assignment(rho, rates, rp, mode)

    rho = 0.5
    assignment = assignment_at(rho)
    objective, matrix = _consistent_objective(rho, assignment.pairs, rates, cfg, timings, mode)
    trace = [(0, rho, objective)]
    best = (rho, assignment, matrix, objective)
    converged = False
    coordinate_optimum = False
    iterations = 0

    for iteration in range(1, max_iters + 1):
        iterations = iteration
        pool = best[1].pairs

        def step_objective(r: float) -> float:
            return _consistent_objective(r, pool, rates, cfg, timings, mode)[0]

        rho_new, _ = _maximize_scalar(step_objective, grid, tol)
        assignment_new = assignment_at(rho_new)
        objective_new, matrix_new = _consistent_objective(
            rho_new, assignment_new.pairs, rates, cfg, timings, mode)

        if objective_new < best[3] - 1e-12 * max(abs(best[3]), 1.0):
            coordinate_optimum = True
            converged = True
            break

        unchanged = (abs(rho_new - best[0]) <= tol
                     and set(assignment_new.pairs) == set(best[1].pairs))
        best = (rho_new, assignment_new, matrix_new, objective_new)
        trace.append((iteration, rho_new, objective_new))
        if unchanged:
            converged = True
            break

    for i in range(1, len(trace)):
        assert trace[i][2] >= trace[i - 1][2] - 1e-12 * max(abs(trace[i][2]), 1.0), \
            "non-monotone-trace: block-coordinate ascent decreased"

    return OptimizerResult(
        rho_star=best[0], assignment_star=best[2], objective=best[3],
        iterations=iterations, trace=tuple(trace), converged=converged,
        coordinate_optimum=coordinate_optimum,
    )


def execute_schedule(decision: Decision, rp: ReservationPoint, timings: MacTimings,
                     seed: int) -> FrameSchedule:
    """Realize one frame: draw each user's path, seat up to
    floor(n_reserved) assigned relay users in the negotiation window and
    give each a contiguous payload window of step*payload_s inside the
    reserved period."""
    rng = np.random.default_rng(seed)
    rho = decision.rho
    u = decision.assignment
    n = len(rho)

    draws = rng.random(n)
    modes = tuple(
        "gas" if (r >= 1.0 or (0.0 < r < 1.0 and d < r)) else "g2s"
        for r, d in zip(rho, draws)
    )

    hap_of = {i: int(np.argmax(u[i])) for i in range(n) if u[i].sum() == 1}
    candidates = [i for i in range(n) if modes[i] == "gas" and i in hap_of]

    capacity = _winner_count(rp)
    oversubscribed = len(candidates) > capacity
    if oversubscribed:
        keep = rng.permutation(len(candidates))[:capacity]
        winners = sorted(candidates[i] for i in keep)
    else:
        winners = candidates

    step = rp.step if math.isfinite(rp.step) else 0.0
    windows = []
    t_handshake = timings.t_handshake()
    for slot, user in enumerate(winners):
        windows.append(ReservedWindow(
            user=user, hap=hap_of[user],
            negotiation_offset_s=slot * t_handshake,
            payload_start_s=timings.negotiation_s + slot * step * timings.payload_s,
            payload_len_s=step * timings.payload_s,
        ))
    return FrameSchedule(
        modes=modes, windows=tuple(windows), n_winners=len(winners),
        step=step, oversubscribed=oversubscribed, seed=seed,
    )
