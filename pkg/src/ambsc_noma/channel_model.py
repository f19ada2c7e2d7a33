"""Channel generation for the backscatter-assisted downlink.

Geometry: the access point (AP) sits at the origin, the backscatter tag
(BST) on the x-axis at the configured distance, and users are dropped
uniformly in a disk around the tag (binomial point process with a fixed
count).  Array responses are uniform-linear-array (ULA) phase ramps in the
sine of the bearing computed from these 2-D positions.

Links:
  f    AP -> user direct link, i.i.d. CN(0, 1) per antenna (Rayleigh),
  H    AP -> BST, distance power law x Rician mixture (NxM),
  h    BST -> user, distance power law x Rician mixture (N,),
  B    cascaded AP -> BST -> user channel, diag(h^H) H,
  relay  per-cluster-pair scalar CN(0, 1) links for the second slot.

The effective downlink row vector seen by a user is v = f^H + g^H B where
g in [0, 1]^N holds the tag's per-antenna reflection amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .errors import ConfigurationError, InvalidArgumentError


@dataclass
class Geometry:
    ap_position: np.ndarray          # (2,)
    bst_position: np.ndarray         # (2,)
    user_positions: np.ndarray       # (U, 2)
    ap_antennas: int
    bst_antennas: int
    element_spacing: float


@dataclass
class RicianSpec:
    k_factor: float
    los: np.ndarray                  # unit-modulus LoS component
    cap: float = 1e9


@dataclass
class ChannelSet:
    direct: np.ndarray               # (U, M) f per user
    ap_bst: np.ndarray               # (U, N, M) H per user
    bst_user: np.ndarray             # (U, N) h per user
    cascade: np.ndarray              # (U, N, M) B = diag(h^H) H
    relay: np.ndarray                # (K, K); [l, k] = near-of-l -> far-of-k
    geometry: Geometry


def ula_response(angle: float, elements: int, spacing_ratio: float) -> np.ndarray:
    """Steering vector [1, e^{-j2 pi r sin(angle)}, ...] of a ULA.

    ``spacing_ratio`` is element spacing over wavelength; every entry has
    unit modulus.
    """
    if elements < 1:
        raise InvalidArgumentError("ula_response: elements must be >= 1")
    if spacing_ratio <= 0:
        raise InvalidArgumentError("ula_response: spacing_ratio must be > 0")
    phase = -2j * np.pi * spacing_ratio * np.sin(angle) * np.arange(elements)
    return np.exp(phase)


def large_scale_gain(distance: float, exponent: float,
                     ref_gain: float, ref_distance: float) -> float:
    """Power-law path gain ref_gain * (distance / ref_distance)^(-exponent)."""
    if distance <= 0:
        raise InvalidArgumentError("large_scale_gain: distance must be > 0")
    if ref_distance <= 0:
        raise InvalidArgumentError("large_scale_gain: ref_distance must be > 0")
    return ref_gain * (distance / ref_distance) ** (-exponent)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def rician_sample(spec: RicianSpec, rng: np.random.Generator) -> np.ndarray:
    """Mix the LoS component with an i.i.d. CN(0,1) scatter term.

    Returns sqrt(K/(1+K)) LoS + sqrt(1/(1+K)) NLoS.  Factors at or above
    ``spec.cap`` return the LoS component exactly.
    """
    if spec.k_factor < 0:
        raise InvalidArgumentError("rician_sample: k_factor must be >= 0")
    if spec.k_factor >= spec.cap:
        return spec.los.astype(complex).copy()
    k = spec.k_factor
    nlos = complex_normal(rng, spec.los.shape)
    return np.sqrt(k / (1.0 + k)) * spec.los + np.sqrt(1.0 / (1.0 + k)) * nlos


def cascade_channel(h: np.ndarray, big_h: np.ndarray) -> np.ndarray:
    """Cascaded tag channel diag(h^H) H: row n of H scaled by conj(h_n)."""
    h = np.asarray(h)
    big_h = np.asarray(big_h)
    if h.ndim != 1 or big_h.ndim != 2 or big_h.shape[0] != h.shape[0]:
        raise InvalidArgumentError(
            f"cascade_channel: incompatible shapes {h.shape} and {big_h.shape}")
    return np.conj(h)[:, None] * big_h


def effective_channel(f: np.ndarray, cascade: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Combined row vector v = f^H + g^H B for reflection amplitudes g."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0) or np.any(g > 1):
        raise InvalidArgumentError("effective_channel: g entries must lie in [0, 1]")
    if cascade.shape != (g.shape[0], f.shape[0]):
        raise InvalidArgumentError(
            f"effective_channel: incompatible shapes {f.shape}, {cascade.shape}, {g.shape}")
    return np.conj(f) + g @ cascade


def bearing(src: np.ndarray, dst: np.ndarray) -> float:
    """Angle of the src -> dst direction against the array broadside axis."""
    delta = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    return float(np.arctan2(delta[1], delta[0]))


def sample_geometry(config: ScenarioConfig, rng: np.random.Generator) -> Geometry:
    """Drop users uniformly in the BST disk; AP at origin, BST on the x-axis."""
    ap = np.array([0.0, 0.0])
    bst = np.array([config.ap_bst_distance_m, 0.0])
    radius = config.bst_radius_m * np.sqrt(rng.random(config.users_total))
    theta = 2.0 * np.pi * rng.random(config.users_total)
    users = bst + np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    return Geometry(ap, bst, users, config.ap_antennas, config.bst_antennas,
                    config.element_spacing)


def sample_scenario_channels(config: ScenarioConfig, geometry: Geometry,
                             rng: np.random.Generator) -> ChannelSet:
    """Draw one full channel realization.

    Direct and relay links are unit-variance Rayleigh; both tag hops carry
    the distance power law times a Rician mixture whose LoS parts come from
    the ULA responses at the geometry-derived bearings.  Users in the nearer
    half of the disk use the near-user Rician factors, the rest the far-user
    factors (all four default to the same value).
    """
    n_users = geometry.user_positions.shape[0]
    if n_users < 2 * config.clusters:
        raise ConfigurationError(
            f"need at least {2 * config.clusters} users, got {n_users}")
    m, n = geometry.ap_antennas, geometry.bst_antennas
    spacing = geometry.element_spacing

    dist_bst = np.linalg.norm(geometry.user_positions - geometry.bst_position, axis=1)
    near_half = dist_bst <= np.median(dist_bst)

    # shared AP<->BST geometry: departure bearing at the AP and arrival at the tag
    ang_dep_ap = bearing(geometry.ap_position, geometry.bst_position)
    ang_arr_tag = bearing(geometry.bst_position, geometry.ap_position)
    ap_bst_los = np.outer(np.conj(ula_response(ang_arr_tag, n, spacing)),
                          ula_response(ang_dep_ap, m, spacing))

    gain_ap_bst = large_scale_gain(config.ap_bst_distance_m, config.path_loss_exp_ap_bst,
                                   config.ref_gain, config.ref_distance_m)

    direct = np.sqrt(config.direct_link_scale) * complex_normal(rng, (n_users, m))

    ap_bst = np.empty((n_users, n, m), dtype=complex)
    bst_user = np.empty((n_users, n), dtype=complex)
    cascade = np.empty((n_users, n, m), dtype=complex)
    for u in range(n_users):
        beta = config.rician_ap_bst_near if near_half[u] else config.rician_ap_bst_far
        delta = config.rician_bst_user_near if near_half[u] else config.rician_bst_user_far
        exp_bu = (config.path_loss_exp_bst_near if near_half[u]
                  else config.path_loss_exp_bst_far)
        ap_bst[u] = np.sqrt(gain_ap_bst) * rician_sample(
            RicianSpec(beta, ap_bst_los, config.rician_cap), rng)
        ang_dep_tag = bearing(geometry.bst_position, geometry.user_positions[u])
        tag_user_los = ula_response(ang_dep_tag, n, spacing)
        gain_bu = large_scale_gain(max(dist_bst[u], 1e-6), exp_bu,
                                   config.ref_gain, config.ref_distance_m)
        bst_user[u] = np.sqrt(gain_bu) * rician_sample(
            RicianSpec(delta, tag_user_los, config.rician_cap), rng)
        cascade[u] = cascade_channel(bst_user[u], ap_bst[u])

    k = config.clusters
    relay = complex_normal(rng, (k, k))
    return ChannelSet(direct, ap_bst, bst_user, cascade, relay, geometry)


def effective_channel_matrix(channels: ChannelSet, g: np.ndarray) -> np.ndarray:
    """Stack v_u = f_u^H + g^H B_u over all users into a (U, M) array."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0) or np.any(g > 1):
        raise InvalidArgumentError("effective_channel_matrix: g entries must lie in [0, 1]")
    return np.conj(channels.direct) + np.einsum("n,unm->um", g, channels.cascade)
