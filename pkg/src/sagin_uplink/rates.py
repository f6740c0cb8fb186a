"""Path losses, SNRs and per-link rates for both uplink paths.

The direct path gets an equal share ``w1*B/M`` of its band per
sub-channel; the relayed path occupies the full ``w2*B`` because only one
relayed transmission is on the air at a time.  The relay is
amplify-and-forward, so its end-to-end SNR is the classic two-hop
combination r1*r2/(r1+r2+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, Scenario, SystemConfig


@dataclass(frozen=True)
class LinkBudget:
    loss_g2s_db: np.ndarray     # (N,) user -> satellite
    loss_gu_hap_db: np.ndarray  # (N, K) user -> HAP
    loss_hap_sat_db: np.ndarray  # (K,) HAP -> satellite

    def __post_init__(self):
        object.__setattr__(self, "loss_g2s_db", np.asarray(self.loss_g2s_db, dtype=float))
        object.__setattr__(self, "loss_gu_hap_db",
                           np.asarray(self.loss_gu_hap_db, dtype=float).reshape(len(self.loss_g2s_db), -1))
        object.__setattr__(self, "loss_hap_sat_db", np.asarray(self.loss_hap_sat_db, dtype=float))

    def validate(self, n_users: int, n_haps: int) -> None:
        if self.loss_g2s_db.shape != (n_users,):
            raise ValueError(f"loss_g2s_db shape {self.loss_g2s_db.shape} != ({n_users},)")
        if self.loss_gu_hap_db.shape != (n_users, n_haps):
            raise ValueError(f"loss_gu_hap_db shape {self.loss_gu_hap_db.shape} != ({n_users}, {n_haps})")
        if self.loss_hap_sat_db.shape != (n_haps,):
            raise ValueError(f"loss_hap_sat_db shape {self.loss_hap_sat_db.shape} != ({n_haps},)")
        for name in ("loss_g2s_db", "loss_gu_hap_db", "loss_hap_sat_db"):
            arr = getattr(self, name)
            if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
                raise ValueError(f"{name} must be finite and >= 0 dB")


@dataclass(frozen=True)
class RateTable:
    r_g2s: np.ndarray        # (N,) bit/s on the direct path
    r_gas: np.ndarray        # (N, K) bit/s through each relay
    snr_gu_hap: np.ndarray   # (N, K) linear
    snr_hap_sat: np.ndarray  # (K,) linear


def path_loss_fspl(distance_m: float, freq_hz: float) -> float:
    """Free-space path loss in dB."""
    if distance_m <= 0 or freq_hz <= 0:
        raise ValueError(f"nonpositive-input: distance_m={distance_m}, freq_hz={freq_hz}")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * freq_hz / SPEED_OF_LIGHT)


def af_gain(snr_first_hop: float, snr_second_hop: float) -> float:
    """End-to-end SNR of an amplify-and-forward two-hop link."""
    if snr_first_hop < 0 or snr_second_hop < 0:
        raise ValueError("negative-input: SNRs must be >= 0")
    return snr_first_hop * snr_second_hop / (snr_first_hop + snr_second_hop + 1.0)


def _db_to_linear_gain(loss_db):
    return 10.0 ** (-np.asarray(loss_db, dtype=float) / 10.0)


def g2s_rate(n: int, cfg: SystemConfig, budget: LinkBudget) -> float:
    """Rate of user n on one direct sub-channel."""
    if not 0 <= n < cfg.n_users:
        raise IndexError(f"index-out-of-range: user {n} of {cfg.n_users}")
    snr = cfg.tx_power_g2s_w * _db_to_linear_gain(budget.loss_g2s_db[n]) / cfg.noise_g2s_w
    return cfg.w1 * cfg.bandwidth_hz / cfg.n_subchannels * math.log2(1.0 + snr)


def gas_rate(n: int, k: int, cfg: SystemConfig, budget: LinkBudget) -> float:
    """Rate of user n through relay k, full relayed band."""
    if not 0 <= n < cfg.n_users:
        raise IndexError(f"index-out-of-range: user {n} of {cfg.n_users}")
    if not 0 <= k < cfg.n_haps:
        raise IndexError(f"index-out-of-range: hap {k} of {cfg.n_haps}")
    r_nk = cfg.tx_power_gas_user_w * _db_to_linear_gain(budget.loss_gu_hap_db[n, k]) / cfg.noise_gu_hap_w
    r_ks = cfg.tx_power_hap_w * _db_to_linear_gain(budget.loss_hap_sat_db[k]) / cfg.noise_hap_sat_w
    return cfg.w2 * cfg.bandwidth_hz * math.log2(1.0 + af_gain(r_nk, r_ks))


def build_rate_table(cfg: SystemConfig, budget: LinkBudget) -> RateTable:
    budget.validate(cfg.n_users, cfg.n_haps)
    snr_g2s = cfg.tx_power_g2s_w * _db_to_linear_gain(budget.loss_g2s_db) / cfg.noise_g2s_w
    r_g2s = cfg.w1 * cfg.bandwidth_hz / cfg.n_subchannels * np.log2(1.0 + snr_g2s)
    snr_gu_hap = cfg.tx_power_gas_user_w * _db_to_linear_gain(budget.loss_gu_hap_db) / cfg.noise_gu_hap_w
    snr_hap_sat = cfg.tx_power_hap_w * _db_to_linear_gain(budget.loss_hap_sat_db) / cfg.noise_hap_sat_w
    end_to_end = snr_gu_hap * snr_hap_sat[None, :] / (snr_gu_hap + snr_hap_sat[None, :] + 1.0)
    r_gas = cfg.w2 * cfg.bandwidth_hz * np.log2(1.0 + end_to_end)
    return RateTable(r_g2s=r_g2s, r_gas=r_gas, snr_gu_hap=snr_gu_hap, snr_hap_sat=snr_hap_sat)


def budget_from_geometry(cfg: SystemConfig) -> LinkBudget:
    g = cfg.geometry
    if g is None:
        raise ValueError("scenario has no geometry; supply explicit loss matrices instead")
    f = g.carrier_freq_hz
    d_us = np.linalg.norm(g.user_positions - g.satellite_position, axis=1)
    loss_g2s = 20.0 * np.log10(4.0 * np.pi * d_us * f / SPEED_OF_LIGHT)
    if cfg.n_haps:
        d_uh = np.linalg.norm(g.user_positions[:, None, :] - g.hap_positions[None, :, :], axis=2)
        d_hs = np.linalg.norm(g.hap_positions - g.satellite_position, axis=1)
        loss_uh = 20.0 * np.log10(4.0 * np.pi * d_uh * f / SPEED_OF_LIGHT)
        loss_hs = 20.0 * np.log10(4.0 * np.pi * d_hs * f / SPEED_OF_LIGHT)
    else:
        loss_uh = np.zeros((cfg.n_users, 0))
        loss_hs = np.zeros(0)
    return LinkBudget(loss_g2s, loss_uh, loss_hs)


def scenario_rates(scenario: Scenario) -> RateTable:
    budget = scenario.budget
    if budget is None:
        budget = budget_from_geometry(scenario.cfg)
    return build_rate_table(scenario.cfg, budget)


def save_budget_csv(budget: LinkBudget, path: str) -> None:
    """Row-major dB matrices, 6 decimal places: one line per user for the
    user->HAP matrix, single lines for the two vectors."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("loss_g2s_db," + ",".join(f"{x:.6f}" for x in budget.loss_g2s_db) + "\n")
        for n, row in enumerate(budget.loss_gu_hap_db):
            fh.write(f"loss_gu_hap_db[{n}]," + ",".join(f"{x:.6f}" for x in row) + "\n")
        fh.write("loss_hap_sat_db," + ",".join(f"{x:.6f}" for x in budget.loss_hap_sat_db) + "\n")


def load_budget_csv(path: str, n_users: int, n_haps: int) -> LinkBudget:
    g2s = None
    hs = None
    uh = np.zeros((n_users, n_haps))
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            label, _, rest = line.strip().partition(",")
            values = np.array([float(x) for x in rest.split(",")]) if rest else np.zeros(0)
            if label == "loss_g2s_db":
                g2s = values
            elif label == "loss_hap_sat_db":
                hs = values
            elif label.startswith("loss_gu_hap_db["):
                uh[int(label[len("loss_gu_hap_db["):-1])] = values
    if g2s is None or hs is None:
        raise ValueError(f"{path}: missing loss_g2s_db or loss_hap_sat_db rows")
    budget = LinkBudget(g2s, uh, hs)
    budget.validate(n_users, n_haps)
    return budget
