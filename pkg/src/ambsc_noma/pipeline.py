"""Two-stage alternating optimization of the downlink energy efficiency.

Per channel realization: sample channels once, pair users once (at
all-ones reflection), then alternate stage 1 (zero-forcing beamformers +
per-cluster power allocation at fixed g) with stage 2 (reflection
amplitudes at fixed beamformers and power splits).  Candidate states are
accepted only when they do not reduce the realized energy efficiency and
keep the full constraint set satisfied, so the per-iteration EE trace is
nondecreasing by construction.

Admission control: under the default parameter set the far-user QoS is
regularly unattainable for every cluster at once (four interfering
full-power beams cannot be nulled at far users), so clusters whose QoS
set is empty are muted for the realization, most-violating first, until
the remaining set is feasible.  Set ``admission_control=False`` to fail
the whole realization on the first infeasible cluster instead.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .active_beamforming import zf_beamformer_set
from .channel_model import (ChannelSet, effective_channel_matrix,
                            sample_geometry, sample_scenario_channels)
from .clustering import ClusterAssignment, form_clusters
from .config import ScenarioConfig
from .errors import InfeasibleError, InvalidArgumentError
from .passive_beamforming import Stage2Cluster, optimize_passive
from .power_allocation import (build_pac_context, compute_link_metrics,
                               constraint_scales, constraint_slacks,
                               dinkelbach_pac, sca_constants,
                               _feasibility_scan)

_ANCHOR_FLOOR = 1e-9


@dataclass
class EeTrace:
    ee: list = field(default_factory=list)            # Mbit/J per outer iteration
    rates: list = field(default_factory=list)         # (K,) bits/s/Hz, 0 if muted
    powers: list = field(default_factory=list)        # (K,) W, 0 if muted
    penalty_residual: list = field(default_factory=list)
    converged_at: int | None = None
    wall_time: float = 0.0


@dataclass
class RunResult:
    trace: EeTrace
    beamformers: np.ndarray
    alphas: np.ndarray
    reflection: np.ndarray
    assignment: ClusterAssignment
    channels: ChannelSet
    active: np.ndarray            # admission mask over clusters
    cooperative: bool
    final_ee: float


def energy_efficiency(rates, powers, bandwidth_hz) -> float:
    """Delivered megabits per joule: bandwidth x sum(rates) / sum(powers).

    ``rates`` in bits/s/Hz and ``powers`` in watts, one entry per scheduled
    cluster; at 1 MHz this is numerically sum(R_k) / sum(P_T^k) in Mbit/J.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.size and powers.min() <= 0:
        raise InvalidArgumentError("energy_efficiency: powers must be > 0")
    total_rate = float(np.sum(rates))
    if total_rate == 0.0:
        return 0.0
    return bandwidth_hz * total_rate / float(np.sum(powers)) / 1e6


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _scatter_beams(active_idx, w_active, k_clusters, m):
    w = np.zeros((k_clusters, m), dtype=complex)
    for row, k in enumerate(active_idx):
        w[k] = w_active[row]
    return w


def _metrics(assignment, v_all, w, relay, alphas, config, cooperative, active):
    v_near = v_all[assignment.near]
    v_far = v_all[assignment.far]
    return {k: compute_link_metrics(k, v_near, v_far, w, relay, alphas,
                                    config, cooperative, active)
            for k in np.flatnonzero(active)}


def _ee_of(mets, config):
    rates = [m.r_sum for m in mets.values()]
    powers = [m.p_total for m in mets.values()]
    return energy_efficiency(rates, powers, config.bandwidth_hz)


def solution_violation(assignment, v_all, w, relay, alphas, config,
                       cooperative, active):
    """Most negative normalized slack over the scheduled clusters."""
    v_near = v_all[assignment.near]
    v_far = v_all[assignment.far]
    worst = math.inf
    for k in np.flatnonzero(active):
        ctx = build_pac_context(k, v_near, v_far, w, relay, alphas, config,
                                cooperative, active)
        slacks = constraint_slacks(ctx, alphas[k][0], alphas[k][1])
        slacks = slacks / constraint_scales(ctx)
        if not cooperative:
            slacks[2] = 1.0
        worst = min(worst, float(slacks.min()))
    return worst


def _admit_clusters(assignment, v_all, relay, config, cooperative):
    """Shrink the active set until every remaining cluster's QoS is feasible.

    Returns (active mask, beamformers for the active set).  Raises when not
    even a single cluster can be served, or immediately on the first
    infeasible cluster when admission control is disabled.
    """
    k_clusters = len(assignment.near)
    v_near_all = v_all[assignment.near]
    v_far_all = v_all[assignment.far]
    m = v_all.shape[1]
    active = np.ones(k_clusters, dtype=bool)
    snapshot = np.tile([0.2, 0.8], (k_clusters, 1))
    while True:
        idx = np.flatnonzero(active)
        w = _scatter_beams(idx, zf_beamformer_set(v_near_all[idx]), k_clusters, m)
        alphas = np.where(active[:, None], snapshot, 0.0)
        violations = {}
        for k in idx:
            ctx = build_pac_context(k, v_near_all, v_far_all, w, relay, alphas,
                                    config, cooperative, active)
            try:
                _feasibility_scan(ctx, config)
            except InfeasibleError as exc:
                violations[k] = (exc.violation if exc.violation is not None
                                 else -math.inf, exc)
        if not violations:
            return active, w
        worst_k = min(violations, key=lambda k: violations[k][0])
        exc = violations[worst_k][1]
        if not getattr(config, "admission_control", True):
            raise InfeasibleError(str(exc), stage="stage1",
                                  constraint=exc.constraint, cluster=int(worst_k),
                                  violation=exc.violation)
        if len(idx) == 1:
            raise InfeasibleError(
                "no cluster admits a feasible power split",
                stage="stage1", constraint=exc.constraint,
                cluster=int(worst_k), violation=exc.violation)
        active[worst_k] = False


def _stage1(assignment, v_all, channels, alphas_prev, config, cooperative, active):
    k_clusters = len(assignment.near)
    v_near = v_all[assignment.near]
    v_far = v_all[assignment.far]
    idx = np.flatnonzero(active)
    w = _scatter_beams(idx, zf_beamformer_set(v_near[idx]), k_clusters,
                       v_all.shape[1])
    alphas = np.where(active[:, None], np.asarray(alphas_prev, dtype=float), 0.0)
    pac_solutions = {}
    for k in idx:
        ctx = build_pac_context(k, v_near, v_far, w, channels.relay, alphas,
                                config, cooperative, active)
        try:
            sol = dinkelbach_pac(ctx, config)
        except InfeasibleError as exc:
            raise InfeasibleError(str(exc), stage="stage1",
                                  constraint=exc.constraint, cluster=int(k),
                                  violation=exc.violation) from exc
        alphas[k] = (sol.alpha_n, sol.alpha_f)
        pac_solutions[k] = sol
    return w, alphas, pac_solutions


def _stage2_clusters(assignment, channels, v_all, w, alphas, config,
                     pac_solutions, cooperative, active):
    clusters = []
    v_near = v_all[assignment.near]
    v_far = v_all[assignment.far]
    for k in np.flatnonzero(active):
        mets = compute_link_metrics(k, v_near, v_far, w, channels.relay,
                                    alphas, config, cooperative, active)
        z1, g1 = sca_constants(max(mets.gamma_1, _ANCHOR_FLOOR))
        z2, g2 = sca_constants(max(mets.gamma_2 + mets.gamma_3, _ANCHOR_FLOOR))
        clusters.append(Stage2Cluster(
            f_near=channels.direct[assignment.near[k]],
            cascade_near=channels.cascade[assignment.near[k]],
            f_far=channels.direct[assignment.far[k]],
            cascade_far=channels.cascade[assignment.far[k]],
            w=w[k],
            alpha_n=float(alphas[k][0]),
            alpha_f=float(alphas[k][1]),
            rho=pac_solutions[k].rho,
            sigma_n=mets.phi_n1 + config.noise_power_w,
            sigma_f=mets.phi_f1 + config.noise_power_w,
            omega1=mets.gamma_3,
            p_cluster=config.cluster_power_w,
            p_total=mets.p_total,
            zeta1=z1, gamma1_const=g1, zeta2=z2, gamma2_const=g2,
            cooperative=cooperative,
        ))
    return clusters


def _full_arrays(mets, k_clusters):
    rates = np.zeros(k_clusters)
    powers = np.zeros(k_clusters)
    for k, m in mets.items():
        rates[k] = m.r_sum
        powers[k] = m.p_total
    return rates, powers


def _run(config: ScenarioConfig, rng, cooperative: bool) -> RunResult:
    config.validate()
    rng = _as_rng(rng)
    started = time.perf_counter()

    geometry = sample_geometry(config, rng)
    channels = sample_scenario_channels(config, geometry, rng)
    g = np.ones(config.bst_antennas)
    assignment = form_clusters(effective_channel_matrix(channels, g),
                               config.clusters, config.correlation_threshold)

    k_clusters = config.clusters
    v0 = effective_channel_matrix(channels, g)
    active, _ = _admit_clusters(assignment, v0, channels.relay, config, cooperative)

    alphas = np.tile([0.2, 0.8], (k_clusters, 1))
    trace = EeTrace()
    best = None   # (ee, w, alphas, g, metrics, pac_solutions)
    stage2_sig = None

    for it in range(1, config.outer_max_iter + 1):
        v_all = effective_channel_matrix(channels, g)
        try:
            w, alphas_new, pacs = _stage1(assignment, v_all, channels, alphas,
                                          config, cooperative, active)
        except InfeasibleError:
            if best is None:
                raise
            trace.ee.append(best[0])
            rates, powers = _full_arrays(best[4], k_clusters)
            trace.rates.append(rates)
            trace.powers.append(powers)
            trace.penalty_residual.append(trace.penalty_residual[-1]
                                          if trace.penalty_residual else 0.0)
            trace.converged_at = it
            break
        mets = _metrics(assignment, v_all, w, channels.relay, alphas_new,
                        config, cooperative, active)
        ee1 = _ee_of(mets, config)
        if best is None or ee1 >= best[0] - 1e-12:
            best = (ee1, w, alphas_new, g.copy(), mets, pacs)
            alphas = alphas_new
        else:
            _, w, alphas, g, mets, pacs = best

        sig = (g.tobytes(), np.asarray(alphas).tobytes())
        if sig == stage2_sig:
            # stage 1 reproduced the incumbent exactly; stage 2 would too
            penalty_residual = (trace.penalty_residual[-1]
                                if trace.penalty_residual else 0.0)
            pstate = None
        else:
            stage2_sig = sig
            clusters = _stage2_clusters(assignment, channels, v_all, w, alphas,
                                        config, pacs, cooperative, active)
            pstate = optimize_passive(clusters, g, config)
            penalty_residual = pstate.penalty_residual
        if pstate is not None and not pstate.fell_back and not np.allclose(pstate.g, g):
            v_cand = effective_channel_matrix(channels, pstate.g)
            mets_cand = _metrics(assignment, v_cand, w, channels.relay, alphas,
                                 config, cooperative, active)
            ee2 = _ee_of(mets_cand, config)
            ok = solution_violation(assignment, v_cand, w, channels.relay,
                                    alphas, config, cooperative, active) >= -1e-4
            if ok and ee2 >= best[0] - 1e-12:
                g = pstate.g
                best = (ee2, w, alphas, g.copy(), mets_cand, pacs)

        ee_round = best[0]
        rates, powers = _full_arrays(best[4], k_clusters)
        trace.ee.append(ee_round)
        trace.rates.append(rates)
        trace.powers.append(powers)
        trace.penalty_residual.append(penalty_residual)
        if it > 1 and abs(trace.ee[-1] - trace.ee[-2]) < config.outer_tol_mbit:
            trace.converged_at = it
            break

    trace.wall_time = time.perf_counter() - started
    ee_final, w, alphas, g, _, _ = best
    return RunResult(trace=trace, beamformers=w, alphas=np.asarray(alphas),
                     reflection=g, assignment=assignment, channels=channels,
                     active=active, cooperative=cooperative, final_ee=ee_final)


def run_algorithm1(config: ScenarioConfig, rng) -> RunResult:
    """Full cooperative pipeline for one channel realization."""
    return _run(config, rng, cooperative=True)


def run_noncoop_baseline(config: ScenarioConfig, rng) -> RunResult:
    """Baseline without the relay slot: gamma_3 = 0, far rate from slot 1.

    The two-slot frame and its 1/2 pre-log are kept; whether the idle
    relay power still counts against the budget follows
    ``config.baseline_idle_relay_power``.
    """
    return _run(config, rng, cooperative=False)
