"""Scenario configuration and validation.

Defaults reproduce the reference simulation setting: 5 two-user clusters
served by an M-antenna access point through an N-antenna backscatter tag,
1 MHz bandwidth, -114 dBm noise, 30 dBm per-cluster transmit power,
10 dBm relay power, 0.1 W circuit power, path-loss exponent 2.2 with
-30 dB reference gain at 1 m, and Rician factor 3 on both tag hops.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigurationError


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass
class ScenarioConfig:
    # topology
    ap_antennas: int = 8            # M
    bst_antennas: int = 8           # N
    clusters: int = 5               # K
    users_total: int = 30
    ap_bst_distance_m: float = 30.0
    bst_radius_m: float = 10.0
    element_spacing: float = 0.5    # antenna spacing in wavelengths

    # powers (W)
    cluster_power_w: float = 1.0            # P_k  (30 dBm)
    relay_power_w: float = dbm_to_watt(10)  # P_r  (10 dBm)
    circuit_power_w: float = 0.1            # P_c
    max_power_w: float = 1.0                # P_max, per-cluster budget
    sic_power_gap_w: float | None = None    # P_gap; defaults to noise power
    noise_power_w: float = dbm_to_watt(-114)

    # QoS thresholds (linear SINR)
    qos_sinr_near: float = db_to_linear(3.0)
    qos_sinr_far: float = db_to_linear(3.0)

    # fading
    rician_ap_bst_near: float = 3.0     # beta_1
    rician_ap_bst_far: float = 3.0      # beta_2
    rician_bst_user_near: float = 3.0   # delta_1
    rician_bst_user_far: float = 3.0    # delta_2
    rician_cap: float = 1e9             # factors >= cap mean pure LoS
    path_loss_exp_ap_bst: float = 2.2
    path_loss_exp_bst_near: float = 2.2
    path_loss_exp_bst_far: float = 2.2
    ref_gain: float = 1e-3              # eta_0 (-30 dB)
    ref_distance_m: float = 1.0
    # Per-entry power of the AP->user Rayleigh link.  The reference gain is
    # the direct-path budget that reproduces the published operating point
    # (mean EE ~ 18 Mbit/J at M = N = 8); set 1.0 for a unit-variance link.
    direct_link_scale: float = 1e-3

    # system
    bandwidth_hz: float = 1e6
    correlation_threshold: float = 0.7

    # stage 1 (power allocation)
    dinkelbach_tol: float = 1e-4
    dinkelbach_max_iter: int = 60
    pac_inner_cap: int = 500
    pac_constraint_tol: float = 1e-6
    pac_step_scale: float = 0.1

    # stage 2 (passive beamforming)
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_cap: float = 1e6
    penalty_residual_tol: float = 1e-3
    stage2_max_iter: int = 20
    stage2_obj_tol: float = 1e-3

    # PSD solver
    solver_max_steps: int = 2000
    solver_kkt_tol: float = 1e-5

    # alternation
    outer_max_iter: int = 25
    outer_tol_mbit: float = 1e-3

    # non-cooperative baseline: keep the idle second-slot relay power in the
    # power budget so coop and non-coop runs draw identical total power
    baseline_idle_relay_power: bool = True

    # mute QoS-infeasible clusters for the realization instead of failing it
    admission_control: bool = True

    def __post_init__(self):
        if self.sic_power_gap_w is None:
            self.sic_power_gap_w = self.noise_power_w

    def validate(self):
        """Raise ConfigurationError naming the first offending field."""
        positive = [
            "cluster_power_w", "circuit_power_w",
            "max_power_w", "sic_power_gap_w", "noise_power_w",
            "bandwidth_hz", "ap_bst_distance_m", "bst_radius_m",
            "ref_gain", "ref_distance_m", "element_spacing",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name}: must be > 0")
        if self.relay_power_w < 0:
            raise ConfigurationError("relay_power_w: must be >= 0")
        if self.ap_antennas < self.clusters:
            raise ConfigurationError(
                "ap_antennas: need M >= K so the zero-forcing null space is nonempty")
        if self.bst_antennas < 1:
            raise ConfigurationError("bst_antennas: must be >= 1")
        if self.clusters < 1:
            raise ConfigurationError("clusters: must be >= 1")
        if self.users_total < 2 * self.clusters:
            raise ConfigurationError(
                f"users_total: need at least 2K = {2 * self.clusters} users")
        if not 0.0 <= self.correlation_threshold <= 1.0:
            raise ConfigurationError("correlation_threshold: must lie in [0, 1]")
        for name in ("rician_ap_bst_near", "rician_ap_bst_far",
                     "rician_bst_user_near", "rician_bst_user_far"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name}: must be >= 0")
        if self.qos_sinr_near <= 0 or self.qos_sinr_far <= 0:
            raise ConfigurationError("qos_sinr_near/far: must be > 0 (linear)")
        if self.direct_link_scale < 0:
            raise ConfigurationError("direct_link_scale: must be >= 0")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data).validate()

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config root must be a JSON object")
        return cls.from_dict(data)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
