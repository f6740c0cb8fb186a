"""Parameter sweeps over population size, relay probability or the
negotiation window, producing plot-ready rows."""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import (DEFAULT_GEOMETRY_SEED, MacTimings, Scenario, SystemConfig,
                     make_geometry, validate_config)
from .optimizer import solve_assignment
from .rates import RateTable, scenario_rates
from .reservation import SubunitPopulationError, solve_reservation
from .throughput import ThroughputReport, case1_sum

SWEEP_VARIABLES = ("n_users", "rho", "t_h")
ROW_COLUMNS = ("variable", "value", "case", "n_users", "rho", "s_g2s", "s_gas",
               "s_sum", "normalized", "alpha", "beta", "n1", "n2")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]
    fixed_overrides: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    geometry_seed: int = DEFAULT_GEOMETRY_SEED

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}, expected one of {SWEEP_VARIABLES}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)


def evaluate_operating_point(cfg: SystemConfig, timings: MacTimings, rates: RateTable,
                             rho: float) -> ThroughputReport:
    """Throughput at uniform relay probability with the relay selection the
    negotiation capacity supports at this operating point."""
    n = cfg.n_users
    u = np.zeros((n, cfg.n_haps), dtype=int)
    if rho > 0 and cfg.n_haps > 0:
        try:
            rp = solve_reservation(n * rho, cfg, timings)
        except SubunitPopulationError:
            rp = None
        if rp is not None:
            u = solve_assignment(rho, rates, rp, cfg.assignment_mode).matrix
    return case1_sum(np.full(n, rho), u, rates, timings, cfg)


def _case_label(rho: float) -> str:
    if rho == 0:
        return "g2s-only"
    if rho == 1:
        return "gas-only"
    return "mixed"


def _point_args(scenario: Scenario, spec: SweepSpec, value: float):
    cfg, timings = scenario.cfg, scenario.timings
    overrides = dict(spec.fixed_overrides)
    rho = float(overrides.pop("rho", 0.5))
    timing_overrides = {k: overrides.pop(k) for k in list(overrides)
                        if k in MacTimings.__dataclass_fields__}
    if timing_overrides:
        timings = replace(timings, **timing_overrides)
    if overrides:
        cfg = replace(cfg, **overrides)

    if spec.variable == "rho":
        rho = value
    elif spec.variable == "t_h":
        timings = replace(timings, negotiation_s=value)
    elif spec.variable == "n_users":
        n = int(value)
        geometry = make_geometry(n, cfg.n_haps, seed=spec.geometry_seed)
        cfg = replace(cfg, n_users=n, geometry=geometry)
    scenario_point = validate_config(cfg, timings)
    return scenario_point.cfg, scenario_point.timings, scenario_point, rho


def _evaluate(args) -> dict:
    variable, value, cfg, timings, scenario_point, rho = args
    rates = scenario_rates(scenario_point)
    report = evaluate_operating_point(cfg, timings, rates, rho)
    row = {"variable": variable, "value": value, "case": _case_label(rho),
           "n_users": cfg.n_users, "rho": rho}
    row.update({k: getattr(report, k) for k in ("s_g2s", "s_gas", "s_sum", "normalized",
                                                "alpha", "beta", "n1", "n2")})
    return row


def run_sweep(scenario: Scenario, spec: SweepSpec, jobs: int = 1) -> list[dict]:
    """One row per sweep value, in sweep order regardless of how many
    workers evaluate the points."""
    tasks = []
    for value in spec.values:
        cfg, timings, scenario_point, rho = _point_args(scenario, spec, value)
        tasks.append((spec.variable, value, cfg, timings, scenario_point, rho))
    if jobs <= 1 or len(tasks) == 1:
        return [_evaluate(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate, tasks))
