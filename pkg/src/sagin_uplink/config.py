"""Scenario parameters, MAC time constants and decision structures.

Everything here is immutable after validation and safe to share across
threads or worker processes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s


class ConfigValidationError(ValueError):
    """Raised when a scenario violates one or more structural constraints.

    ``violations`` lists every failed check as ``(name, message)`` so a
    caller can report all problems at once instead of fixing them one by
    one.
    """

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = violations
        super().__init__("; ".join(f"{name}: {msg}" for name, msg in violations))


class DecisionValidationError(ValueError):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


@dataclass(frozen=True)
class Geometry:
    """Node positions used to derive path losses when no explicit loss
    matrices are supplied."""

    user_positions: np.ndarray      # (N, 3) m
    hap_positions: np.ndarray       # (K, 3) m
    satellite_position: np.ndarray  # (3,) m
    carrier_freq_hz: float = 2.0e9

    def __post_init__(self):
        object.__setattr__(self, "user_positions", np.asarray(self.user_positions, dtype=float))
        object.__setattr__(self, "hap_positions", np.asarray(self.hap_positions, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "satellite_position", np.asarray(self.satellite_position, dtype=float))


@dataclass(frozen=True)
class MacTimings:
    """Time constants of both access schemes.

    The derived accessors mirror the channel-occupancy bookkeeping of the
    contention model: ``t_success``/``t_collision`` are how long the
    channel stays busy after a successful / failed handshake, and
    ``t_handshake`` is one reservation exchange during the negotiation
    window.
    """

    slot_s: float = 50e-6          # idle backoff slot
    sifs_s: float = 28e-6
    difs_s: float = 128e-6
    rts_s: float = 192e-6          # 24 bytes at the control rate
    cts_s: float = 128e-6          # 16 bytes at the control rate
    payload_s: float = 0.5e-3      # one data packet on air
    frame_s: float = 200e-3        # full frame T
    negotiation_s: float = 10e-3   # leading reservation window t_h
    w_min: int = 32                # minimum contention window
    backoff_stages: int = 5        # window doublings before saturation

    def t_success(self) -> float:
        return self.rts_s + self.cts_s + self.payload_s + 2 * self.sifs_s + self.difs_s + 2 * self.slot_s

    def t_collision(self) -> float:
        return self.rts_s + self.difs_s + self.slot_s

    def t_handshake(self) -> float:
        return self.rts_s + self.cts_s + self.sifs_s + self.difs_s

    def reserved_s(self) -> float:
        return self.frame_s - self.negotiation_s


def timings_from_control_rate(control_rate_bps: float = 1e6, *,
                              rts_bytes: int = 24, cts_bytes: int = 16,
                              **overrides) -> MacTimings:
    """MacTimings with RTS/CTS on-air durations derived from packet sizes."""
    if control_rate_bps <= 0:
        raise ValueError("control_rate_bps must be positive")
    return MacTimings(
        rts_s=rts_bytes * 8 / control_rate_bps,
        cts_s=cts_bytes * 8 / control_rate_bps,
        **overrides,
    )


@dataclass(frozen=True)
class SystemConfig:
    """Population sizes, bandwidth split, link budget inputs and geometry
    for one scenario."""

    n_users: int = 100
    n_haps: int = 2
    n_subchannels: int = 5
    bandwidth_hz: float = 20e6
    w1: float = 0.5                   # bandwidth share of the direct uplink
    w2: float = 0.5                   # bandwidth share of the relayed uplink
    tx_power_g2s_w: float = 2.0
    tx_power_gas_user_w: float = 0.2
    tx_power_hap_w: float = 10.0
    noise_g2s_w: float = 1e-13        # -100 dBm
    noise_gu_hap_w: float = 1e-13
    noise_hap_sat_w: float = 1e-13
    arrival_rate: float = 9.0         # per second
    service_rate: float = 1.0         # per second
    geometry: Optional[Geometry] = None
    assignment_mode: str = "one-per-hap"  # relay sharing policy for schedules

    def q_negotiation(self) -> float:
        """Stationary probability that a relayed user sits in the
        negotiation window (service fraction of its duty cycle)."""
        return self.service_rate / (self.arrival_rate + self.service_rate)


@dataclass(frozen=True)
class Decision:
    """Per-user transmission control: relay probability plus the
    user-to-HAP selection matrix."""

    rho: np.ndarray         # (N,) probabilities of taking the relayed path
    assignment: np.ndarray  # (N, K) 0/1, at most one relay per user

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "assignment", np.asarray(self.assignment, dtype=int))


def _check(violations, ok: bool, name: str, message: str):
    if not ok:
        violations.append((name, message))


def validate_config(cfg: SystemConfig, timings: MacTimings) -> "Scenario":
    """Check every structural invariant and return an immutable scenario
    handle; raises ConfigValidationError naming all violated checks."""
    v: list[tuple[str, str]] = []
    _check(v, cfg.n_users >= 1, "empty-population", f"n_users={cfg.n_users} must be >= 1")
    _check(v, cfg.n_haps >= 0, "negative-haps", f"n_haps={cfg.n_haps} must be >= 0")
    _check(v, cfg.n_subchannels >= 1, "empty-subchannels", f"n_subchannels={cfg.n_subchannels} must be >= 1")
    _check(v, cfg.w1 > 0 and cfg.w2 > 0, "nonpositive-weight", f"w1={cfg.w1}, w2={cfg.w2} must both be > 0")
    _check(v, cfg.w1 + cfg.w2 <= 1.0 + 1e-12, "invalid-weight", f"w1+w2={cfg.w1 + cfg.w2} exceeds 1")
    for name in ("bandwidth_hz", "tx_power_g2s_w", "tx_power_gas_user_w", "tx_power_hap_w",
                 "noise_g2s_w", "noise_gu_hap_w", "noise_hap_sat_w", "arrival_rate", "service_rate"):
        _check(v, getattr(cfg, name) > 0, "nonpositive-value", f"{name}={getattr(cfg, name)} must be > 0")

    for name in ("slot_s", "sifs_s", "difs_s", "rts_s", "cts_s", "payload_s", "frame_s", "negotiation_s"):
        _check(v, getattr(timings, name) > 0, "nonpositive-duration", f"{name}={getattr(timings, name)} must be > 0")
    _check(v, timings.negotiation_s < timings.frame_s, "nonpositive-duration",
           f"negotiation_s={timings.negotiation_s} must be shorter than frame_s={timings.frame_s}")
    _check(v, timings.w_min >= 1, "invalid-window", f"w_min={timings.w_min} must be >= 1")
    _check(v, timings.backoff_stages >= 0, "invalid-window",
           f"backoff_stages={timings.backoff_stages} must be >= 0")
    _check(v, cfg.assignment_mode in ("per-user-best", "one-per-hap"), "invalid-mode",
           f"assignment_mode={cfg.assignment_mode!r} unknown")

    if cfg.geometry is not None:
        g = cfg.geometry
        _check(v, g.user_positions.shape == (cfg.n_users, 3), "geometry-shape",
               f"user_positions shape {g.user_positions.shape} != ({cfg.n_users}, 3)")
        _check(v, g.hap_positions.shape == (cfg.n_haps, 3), "geometry-shape",
               f"hap_positions shape {g.hap_positions.shape} != ({cfg.n_haps}, 3)")
        _check(v, g.satellite_position.shape == (3,), "geometry-shape",
               f"satellite_position shape {g.satellite_position.shape} != (3,)")
        _check(v, g.carrier_freq_hz > 0, "nonpositive-value", "carrier_freq_hz must be > 0")
        if not v:
            sat = g.satellite_position
            d_user_sat = np.linalg.norm(g.user_positions - sat, axis=1)
            _check(v, bool(np.all(d_user_sat > 0)), "degenerate-geometry", "user at satellite position")
            if cfg.n_haps:
                d_uh = np.linalg.norm(g.user_positions[:, None, :] - g.hap_positions[None, :, :], axis=2)
                d_hs = np.linalg.norm(g.hap_positions - sat, axis=1)
                _check(v, bool(np.all(d_uh > 0) and np.all(d_hs > 0)), "degenerate-geometry",
                       "coincident nodes give zero-length links")
    if v:
        raise ConfigValidationError(v)
    from .rates import budget_from_geometry  # local import avoids a cycle
    budget = budget_from_geometry(cfg) if cfg.geometry is not None else None
    return Scenario(cfg=cfg, timings=timings, budget=budget)


@dataclass(frozen=True)
class Scenario:
    """Validated bundle of config, timings and (optionally) a precomputed
    link budget.  Construct through validate_config or default_scenario."""

    cfg: SystemConfig
    timings: MacTimings
    budget: Optional["LinkBudget"] = None  # noqa: F821 - set by validate_config


def validate_decision(d: Decision, n_s: int) -> Decision:
    """Accept a decision iff probabilities are in range, rows select at
    most one relay, and the total selection count equals ``n_s``."""
    rho = d.rho
    u = d.assignment
    if u.ndim != 2:
        raise DecisionValidationError("shape-violation", f"assignment must be 2-D, got ndim={u.ndim}")
    if rho.shape[0] != u.shape[0]:
        raise DecisionValidationError("shape-violation",
                                      f"rho has {rho.shape[0]} entries but assignment has {u.shape[0]} rows")
    if np.any(rho < 0) or np.any(rho > 1):
        bad = int(np.argmax((rho < 0) | (rho > 1)))
        raise DecisionValidationError("range-violation", f"rho[{bad}]={rho[bad]} outside [0, 1]")
    if not np.isin(u, (0, 1)).all():
        raise DecisionValidationError("range-violation", "assignment entries must be 0 or 1")
    row_sums = u.sum(axis=1)
    if np.any(row_sums > 1):
        bad = int(np.argmax(row_sums > 1))
        raise DecisionValidationError("row-sum-violation",
                                      f"user {bad} selects {row_sums[bad]} relays, at most 1 allowed")
    total = int(u.sum())
    if total != n_s:
        raise DecisionValidationError("count-violation", f"assignment count {total} != required {n_s}")
    return d


# --- default scenario -----------------------------------------------------

DEFAULT_GEOMETRY_SEED = 7
_USER_DISC_RADIUS_M = 10e3
_HAP_ALTITUDE_M = 20e3
_HAP_RING_RADIUS_M = 5e3
_SAT_ALTITUDE_M = 780e3


def make_geometry(n_users: int, n_haps: int, *, seed: int = DEFAULT_GEOMETRY_SEED,
                  user_disc_radius_m: float = _USER_DISC_RADIUS_M,
                  hap_altitude_m: float = _HAP_ALTITUDE_M,
                  hap_ring_radius_m: float = _HAP_RING_RADIUS_M,
                  satellite_altitude_m: float = _SAT_ALTITUDE_M,
                  carrier_freq_hz: float = 2.0e9) -> Geometry:
    """Users uniform in a ground disc, HAPs on a stratospheric ring above
    it, satellite at zenith.  Deterministic for a given seed; sweeping
    n_users upward extends the same draw, so nested populations share
    positions."""
    rng = np.random.default_rng(seed)
    uv = rng.random((n_users, 2))  # row-major draw: populations nest across n_users
    radii = user_disc_radius_m * np.sqrt(uv[:, 0])
    angles = 2 * np.pi * uv[:, 1]
    users = np.column_stack([radii * np.cos(angles), radii * np.sin(angles), np.zeros(n_users)])
    if n_haps > 0:
        phis = 2 * np.pi * np.arange(n_haps) / n_haps
        haps = np.column_stack([
            hap_ring_radius_m * np.cos(phis),
            hap_ring_radius_m * np.sin(phis),
            np.full(n_haps, hap_altitude_m),
        ])
    else:
        haps = np.zeros((0, 3))
    sat = np.array([0.0, 0.0, satellite_altitude_m])
    return Geometry(users, haps, sat, carrier_freq_hz)


def default_scenario(n_users: int = 100, n_haps: int = 2, *, seed: int = DEFAULT_GEOMETRY_SEED,
                     timings: Optional[MacTimings] = None, **config_overrides) -> Scenario:
    geometry = make_geometry(n_users, n_haps, seed=seed)
    cfg = SystemConfig(n_users=n_users, n_haps=n_haps, geometry=geometry, **config_overrides)
    return validate_config(cfg, timings if timings is not None else MacTimings())


# --- JSON scenario files ----------------------------------------------------

_CFG_SCALAR_FIELDS = (
    "n_users", "n_haps", "n_subchannels", "bandwidth_hz", "w1", "w2",
    "tx_power_g2s_w", "tx_power_gas_user_w", "tx_power_hap_w",
    "noise_g2s_w", "noise_gu_hap_w", "noise_hap_sat_w",
    "arrival_rate", "service_rate", "assignment_mode",
)
_TIMING_FIELDS = ("slot_s", "sifs_s", "difs_s", "rts_s", "cts_s", "payload_s",
                  "frame_s", "negotiation_s", "w_min", "backoff_stages")


def load_scenario(path: str) -> Scenario:
    """Read a flat JSON scenario file.

    Geometry can be given as explicit position lists, as generator
    parameters (``geometry_seed`` plus optional disc/altitude settings),
    or omitted entirely when explicit dB loss matrices are supplied
    (``loss_g2s_db``, ``loss_gu_hap_db``, ``loss_hap_sat_db``).
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigValidationError([("config-parse", f"{path}:{exc.lineno}: {exc.msg}")]) from exc

    unknown = set(doc) - set(_CFG_SCALAR_FIELDS) - set(_TIMING_FIELDS) - {
        "user_positions", "hap_positions", "satellite_position", "carrier_freq_hz",
        "geometry_seed", "user_disc_radius_m", "hap_altitude_m", "hap_ring_radius_m",
        "satellite_altitude_m", "loss_g2s_db", "loss_gu_hap_db", "loss_hap_sat_db",
    }
    if unknown:
        raise ConfigValidationError([("config-parse", f"unknown fields: {sorted(unknown)}")])

    cfg_kwargs = {k: doc[k] for k in _CFG_SCALAR_FIELDS if k in doc}
    timing_kwargs = {k: doc[k] for k in _TIMING_FIELDS if k in doc}

    n_users = int(cfg_kwargs.get("n_users", 100))
    n_haps = int(cfg_kwargs.get("n_haps", 2))
    geometry = None
    if "user_positions" in doc:
        geometry = Geometry(
            np.asarray(doc["user_positions"], dtype=float),
            np.asarray(doc.get("hap_positions", np.zeros((0, 3))), dtype=float),
            np.asarray(doc["satellite_position"], dtype=float),
            float(doc.get("carrier_freq_hz", 2.0e9)),
        )
    elif "loss_g2s_db" not in doc:
        geom_kwargs = {k: doc[k] for k in ("user_disc_radius_m", "hap_altitude_m",
                                           "hap_ring_radius_m", "satellite_altitude_m",
                                           "carrier_freq_hz") if k in doc}
        geometry = make_geometry(n_users, n_haps,
                                 seed=int(doc.get("geometry_seed", DEFAULT_GEOMETRY_SEED)),
                                 **geom_kwargs)
    cfg = SystemConfig(geometry=geometry, **cfg_kwargs)
    scenario = validate_config(cfg, MacTimings(**timing_kwargs))

    if "loss_g2s_db" in doc:
        from .rates import LinkBudget
        budget = LinkBudget(
            np.asarray(doc["loss_g2s_db"], dtype=float),
            np.asarray(doc.get("loss_gu_hap_db", np.zeros((n_users, n_haps))), dtype=float),
            np.asarray(doc.get("loss_hap_sat_db", np.zeros(n_haps)), dtype=float),
        )
        budget.validate(n_users, n_haps)
        scenario = replace(scenario, budget=budget)
    return scenario


def dump_scenario(scenario: Scenario, path: str) -> None:
    cfg, timings = scenario.cfg, scenario.timings
    doc = {k: getattr(cfg, k) for k in _CFG_SCALAR_FIELDS}
    doc.update({k: getattr(timings, k) for k in _TIMING_FIELDS})
    if cfg.geometry is not None:
        doc["user_positions"] = cfg.geometry.user_positions.tolist()
        doc["hap_positions"] = cfg.geometry.hap_positions.tolist()
        doc["satellite_position"] = cfg.geometry.satellite_position.tolist()
        doc["carrier_freq_hz"] = cfg.geometry.carrier_freq_hz
    elif scenario.budget is not None:
        doc["loss_g2s_db"] = scenario.budget.loss_g2s_db.tolist()
        doc["loss_gu_hap_db"] = scenario.budget.loss_gu_hap_db.tolist()
        doc["loss_hap_sat_db"] = scenario.budget.loss_hap_sat_db.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
