"""Hybrid satellite uplink: direct contention-based access plus
HAP-reserved relaying, with an analytic throughput model, a
transmission-control optimizer and a slot-level Monte Carlo oracle."""

from .config import (ConfigValidationError, Decision, DecisionValidationError,
                     Geometry, MacTimings, Scenario, SystemConfig,
                     default_scenario, dump_scenario, load_scenario,
                     make_geometry, timings_from_control_rate, validate_config,
                     validate_decision)
from .contention import ContentionPoint, ConvergenceError, solve_contention, utilization
from .macsim import NegotiationStats, SimStats, simulate_csma, simulate_negotiation
from .optimizer import (AssignmentResult, FrameSchedule, OptimizerResult,
                        ReservedWindow, alternate, execute_schedule,
                        solve_assignment, solve_rho)
from .rates import (LinkBudget, RateTable, af_gain, budget_from_geometry,
                    build_rate_table, g2s_rate, gas_rate, load_budget_csv,
                    path_loss_fspl, save_budget_csv, scenario_rates)
from .reservation import (Capacity, ReservationPoint, SubunitPopulationError,
                          effective_beta, reservation_capacity, solve_reservation)
from .sweeps import SweepSpec, evaluate_operating_point, run_sweep
from .throughput import (StalePointError, ThroughputReport, case1_sum,
                         case2_g2s_only, case3_gas_only, throughput_g2s,
                         throughput_gas)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
