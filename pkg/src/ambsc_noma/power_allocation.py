"""Per-cluster power-allocation coefficients (stage 1 inner solver).

With the zero-forcing beamformers and reflection amplitudes held fixed,
each cluster's problem reduces to choosing the near-user share alpha_n
(the far user gets alpha_f = 1 - alpha_n at the optimum).  The fractional
rate/power objective is handled by the Dinkelbach parameter rho; each
parametric subproblem is solved by alternating a quartic stationarity
solve for alpha_n with dual subgradient updates of the six constraint
multipliers, under a logarithmic rate surrogate that is tightened at the
incumbent each iteration.

Notation mirrors the derivation:
  psi_n  = P_k |v_n w_k|^2          beamformed near gain times cluster power
  psi_f  = P_k |v_f w_k|^2
  sigma_n/sigma_f = inter-cluster interference + noise at near/far user
  omega1 = gamma_3, the relay-slot SINR (constant in alpha)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .errors import DegeneratePolynomialError, InfeasibleError, InvalidArgumentError

LN2 = math.log(2.0)
_ANCHOR_FLOOR = 1e-9

CONSTRAINT_NAMES = (
    "qos_near",        # gamma_1 >= gamma_min_n
    "qos_far",         # gamma_2 + gamma_3 >= gamma_min_f
    "cooperation",     # gamma_nf >= gamma_2 + gamma_3
    "sic_gap",         # (alpha_f - alpha_n) psi_n >= P_gap
    "power_budget",    # P_k (alpha_n + alpha_f) <= P_max
    "alpha_sum",       # alpha_n + alpha_f <= 1
)


@dataclass
class LinkMetrics:
    gamma_nf: float
    gamma_1: float
    gamma_2: float
    gamma_3: float
    phi_n1: float
    phi_f1: float
    phi_f2: float
    r_nf: float
    r1: float
    r2: float
    r_sum: float
    p_total: float


@dataclass
class PacContext:
    """Everything a single cluster's PAC solve needs, all scalars."""
    psi_n: float
    psi_f: float
    sigma_n: float
    sigma_f: float
    omega1: float
    p_cluster: float
    w_norm_sq: float
    p_gap: float
    p_max: float
    qos_near: float
    qos_far: float
    p_fixed: float            # relay + circuit power counted in P_T
    cooperative: bool = True


@dataclass
class PacSolution:
    alpha_n: float
    alpha_f: float
    rho: float
    multipliers: np.ndarray
    outer_iterations: int
    inner_iterations: int
    converged: bool
    dinkelbach_gap: float
    rho_trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)


def sca_constants(gamma_anchor: float):
    """Tangent constants (zeta, Gamma) of the log surrogate at the anchor.

    zeta log2(g) + Gamma <= log2(1 + g) for all g > 0, tight at the anchor.
    """
    if gamma_anchor <= 0:
        raise InvalidArgumentError("sca_constants: anchor must be > 0")
    zeta = gamma_anchor / (1.0 + gamma_anchor)
    gamma_const = math.log2(1.0 + gamma_anchor) - zeta * math.log2(gamma_anchor)
    return zeta, gamma_const


def compute_link_metrics(k, v_near, v_far, w, relay, alphas,
                         config: ScenarioConfig, cooperative=True,
                         active=None) -> LinkMetrics:
    """SINRs, rates and power draw of cluster k under the full interference map.

    ``alphas`` holds every cluster's (alpha_n, alpha_f); interfering beams
    carry P_l (alpha_ln + alpha_lf).  ``active`` masks clusters muted by
    admission control out of the relay-slot interference.  In the
    non-cooperative variant the relay slot is silent: gamma_3 = 0 and the
    far rate comes from the first slot alone.
    """
    v_n = v_near[k]
    v_f = v_far[k]
    p_k = config.cluster_power_w
    noise = config.noise_power_w
    a_n, a_f = float(alphas[k][0]), float(alphas[k][1])
    if active is None:
        active = np.ones(w.shape[0], dtype=bool)

    gains_n = np.abs(v_n @ w.T) ** 2          # |v_n w_l|^2 for all l
    gains_f = np.abs(v_f @ w.T) ** 2
    load = p_k * (np.asarray(alphas)[:, 0] + np.asarray(alphas)[:, 1])
    mask = (np.arange(w.shape[0]) != k) & np.asarray(active, dtype=bool)
    phi_n1 = float(np.sum(gains_n[mask] * load[mask]))
    phi_f1 = float(np.sum(gains_f[mask] * load[mask]))

    sig_n = p_k * gains_n[k]
    sig_f = p_k * gains_f[k]
    gamma_nf = a_f * sig_n / (a_n * sig_n + phi_n1 + noise)
    gamma_1 = a_n * sig_n / (phi_n1 + noise)
    gamma_2 = a_f * sig_f / (a_n * sig_f + phi_f1 + noise)

    w_norm_sq = float(np.linalg.norm(w[k]) ** 2)
    r_nf = 0.5 * math.log2(1.0 + gamma_nf)
    r1 = 0.5 * math.log2(1.0 + gamma_1)
    if cooperative:
        p_r = config.relay_power_w
        phi_f2 = float(p_r * np.sum(np.abs(relay[mask, k]) ** 2))
        gamma_3 = p_r * abs(relay[k, k]) ** 2 / (phi_f2 + noise)
        r2 = min(r_nf, 0.5 * math.log2(1.0 + gamma_2 + gamma_3))
        p_total = w_norm_sq * p_k * (a_n + a_f) + p_r + config.circuit_power_w
    else:
        phi_f2 = 0.0
        gamma_3 = 0.0
        r2 = 0.5 * math.log2(1.0 + gamma_2)
        p_total = w_norm_sq * p_k * (a_n + a_f) + config.circuit_power_w
        if config.baseline_idle_relay_power:
            p_total += config.relay_power_w

    return LinkMetrics(gamma_nf, gamma_1, gamma_2, gamma_3,
                       phi_n1, phi_f1, phi_f2,
                       r_nf, r1, r2, r1 + r2, p_total)


def build_pac_context(k, v_near, v_far, w, relay, alpha_snapshot,
                      config: ScenarioConfig, cooperative=True,
                      active=None) -> PacContext:
    """Freeze cluster k's interference picture into PAC scalars."""
    mets = compute_link_metrics(k, v_near, v_far, w, relay, alpha_snapshot,
                                config, cooperative, active)
    noise = config.noise_power_w
    p_k = config.cluster_power_w
    p_fixed = config.circuit_power_w
    if cooperative:
        p_fixed += config.relay_power_w
    elif config.baseline_idle_relay_power:
        p_fixed += config.relay_power_w
    return PacContext(
        psi_n=p_k * abs(v_near[k] @ w[k]) ** 2,
        psi_f=p_k * abs(v_far[k] @ w[k]) ** 2,
        sigma_n=mets.phi_n1 + noise,
        sigma_f=mets.phi_f1 + noise,
        omega1=mets.gamma_3,
        p_cluster=p_k,
        w_norm_sq=float(np.linalg.norm(w[k]) ** 2),
        p_gap=config.sic_power_gap_w,
        p_max=config.max_power_w,
        qos_near=config.qos_sinr_near,
        qos_far=config.qos_sinr_far,
        p_fixed=p_fixed,
        cooperative=cooperative,
    )


def constraint_slacks(ctx: PacContext, alpha_n, alpha_f):
    """Raw slacks of the six constraints; nonnegative means satisfied."""
    theta1 = ctx.psi_n * ctx.psi_f
    theta2 = ctx.psi_n * ctx.sigma_f + ctx.psi_f * ctx.sigma_n
    c1 = alpha_n * ctx.psi_n - ctx.sigma_n * ctx.qos_near
    c2 = (alpha_f * ctx.psi_f
          - (ctx.qos_far - ctx.omega1) * (alpha_n * ctx.psi_f + ctx.sigma_f))
    c3 = (alpha_f * (ctx.psi_n * ctx.sigma_f - ctx.psi_f * ctx.sigma_n)
          - ctx.omega1 * (alpha_n ** 2 * theta1 + alpha_n * theta2
                          + ctx.sigma_n * ctx.sigma_f))
    c4 = (alpha_f - alpha_n) * ctx.psi_n * ctx.w_norm_sq - ctx.p_gap
    c5 = ctx.p_max - ctx.p_cluster * ctx.w_norm_sq * (alpha_n + alpha_f)
    c6 = 1.0 - (alpha_n + alpha_f)
    return np.array([c1, c2, c3, c4, c5, c6])


def constraint_scales(ctx: PacContext):
    """Characteristic magnitude of each constraint, for normalization."""
    theta1 = ctx.psi_n * ctx.psi_f
    theta2 = ctx.psi_n * ctx.sigma_f + ctx.psi_f * ctx.sigma_n
    s = np.array([
        ctx.psi_n + ctx.sigma_n * ctx.qos_near,
        ctx.psi_f + abs(ctx.qos_far - ctx.omega1) * (ctx.psi_f + ctx.sigma_f),
        (abs(ctx.psi_n * ctx.sigma_f - ctx.psi_f * ctx.sigma_n)
         + ctx.omega1 * (theta1 + theta2 + ctx.sigma_n * ctx.sigma_f)),
        ctx.psi_n * ctx.w_norm_sq + ctx.p_gap,
        ctx.p_max + ctx.p_cluster * ctx.w_norm_sq,
        1.0,
    ])
    return np.maximum(s, 1e-300)


def surrogate_rate(ctx: PacContext, alpha_n, alpha_f, anchors=None):
    """Half-prelog sum rate; with anchors=None this is the exact rate.

    The exact form is 0.5 log2(1+gamma_1) + 0.5 log2(1+gamma_2+omega1); an
    anchored call evaluates the log surrogate instead.
    """
    gamma1 = alpha_n * ctx.psi_n / ctx.sigma_n
    gamma2 = alpha_f * ctx.psi_f / (alpha_n * ctx.psi_f + ctx.sigma_f) + ctx.omega1
    if anchors is None:
        return 0.5 * (math.log2(1.0 + gamma1) + math.log2(1.0 + gamma2))
    (z1, g1), (z2, g2) = anchors
    t1 = z1 * math.log2(max(gamma1, 1e-300)) + g1
    t2 = z2 * math.log2(max(gamma2, 1e-300)) + g2
    return 0.5 * (t1 + t2)


def total_power(ctx: PacContext, alpha_n, alpha_f):
    return ctx.p_cluster * ctx.w_norm_sq * (alpha_n + alpha_f) + ctx.p_fixed


def quartic_coefficients(ctx: PacContext, zeta1, zeta2, alpha_f,
                         multipliers, rho) -> np.ndarray:
    """Coefficients [a4..a0] of the stationarity quartic in alpha_n.

    Derived by multiplying dL/d alpha_n = 0 through by
    N alpha_n (alpha_n psi_f + sigma_f)(alpha_f psi_f + omega1 (...)), with
    N = 2 ln 2.  ``multipliers`` are the raw duals phi_1..phi_6.
    """
    phi = np.asarray(multipliers, dtype=float)
    n_const = 2.0 * LN2
    theta1 = ctx.psi_n * ctx.psi_f
    theta2 = ctx.psi_n * ctx.sigma_f + ctx.psi_f * ctx.sigma_n
    omega_a = 2.0 * phi[2] * theta1 * ctx.omega1
    omega_b = phi[2] * theta2 * ctx.omega1
    d1 = n_const * ctx.omega1 * ctx.psi_f ** 2
    d2 = n_const * (2.0 * ctx.omega1 * ctx.psi_f * ctx.sigma_f
                    + alpha_f * ctx.psi_f ** 2)
    n1 = n_const * (alpha_f * ctx.psi_f * ctx.sigma_f
                    + ctx.omega1 * ctx.sigma_f ** 2)
    pw = ctx.p_cluster * ctx.w_norm_sq
    mu = (phi[0] * ctx.psi_n
          - rho * pw
          - phi[1] * ctx.psi_f * (ctx.qos_far - ctx.omega1)
          - phi[3] * ctx.psi_n * ctx.w_norm_sq
          - phi[4] * pw
          - phi[5])
    a4 = -n_const * omega_a * d1
    a3 = n_const * (mu - omega_b) * d1 - n_const * omega_a * d2
    a2 = (zeta1 * d1 - n_const * omega_a * n1
          - n_const * omega_b * d2 + n_const * mu * d2)
    a1 = (zeta1 * d2 - n_const * zeta2 * alpha_f * ctx.psi_f ** 2
          - n_const * omega_b * n1 + n_const * mu * n1)
    a0 = zeta1 * n1
    return np.array([a4, a3, a2, a1, a0])


def stationarity_residual(ctx: PacContext, zeta1, zeta2, alpha_n, alpha_f,
                          multipliers, rho):
    """Direct evaluation of dL/d alpha_n (the quartic's defining equation)."""
    phi = np.asarray(multipliers, dtype=float)
    n_const = 2.0 * LN2
    theta1 = ctx.psi_n * ctx.psi_f
    theta2 = ctx.psi_n * ctx.sigma_f + ctx.psi_f * ctx.sigma_n
    pw = ctx.p_cluster * ctx.w_norm_sq
    mu = (phi[0] * ctx.psi_n - rho * pw
          - phi[1] * ctx.psi_f * (ctx.qos_far - ctx.omega1)
          - phi[3] * ctx.psi_n * ctx.w_norm_sq - phi[4] * pw - phi[5])
    den_f = alpha_n * ctx.psi_f + ctx.sigma_f
    den_2 = alpha_f * ctx.psi_f + ctx.omega1 * den_f
    rate_term = (zeta1 / (n_const * alpha_n)
                 - zeta2 * alpha_f * ctx.psi_f ** 2 / (n_const * den_f * den_2))
    coop_term = (2.0 * phi[2] * theta1 * ctx.omega1 * alpha_n
                 + phi[2] * theta2 * ctx.omega1)
    return rate_term - coop_term + mu


def solve_quartic(coeffs) -> list:
    """Real roots of the polynomial inside the open interval (0, 1).

    Uses companion-matrix eigenvalues; every returned root has polynomial
    residual at most 1e-8 times the largest coefficient.  Near-identical
    roots (within 1e-3, e.g. from a clipped multiple root) are collapsed.
    """
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c))
    if not scale > 0:
        raise DegeneratePolynomialError("all quartic coefficients are zero")
    c = np.trim_zeros(c / scale, "f")
    if c.size <= 1:
        return []
    roots = np.roots(c)
    accepted = []
    for z in roots:
        x = float(np.real(z))
        if not 1e-12 < x < 1.0 - 1e-12:
            continue
        if abs(np.polyval(c, x)) > 1e-8:
            continue
        if all(abs(x - y) > 1e-3 for y in accepted):
            accepted.append(x)
    return sorted(accepted)


def dual_subgradient_step(multipliers, residuals, steps) -> np.ndarray:
    """Projected affine update phi <- max(0, phi + step * residual).

    Callers pass residuals as signed violations (negative when the
    constraint is satisfied) so satisfied constraints decay toward zero.
    """
    phi = np.asarray(multipliers, dtype=float)
    return np.maximum(0.0, phi + np.asarray(steps) * np.asarray(residuals, dtype=float))


def _anchors_at(ctx, alpha_n, alpha_f):
    gamma1 = max(alpha_n * ctx.psi_n / ctx.sigma_n, _ANCHOR_FLOOR)
    gamma2 = max(alpha_f * ctx.psi_f / (alpha_n * ctx.psi_f + ctx.sigma_f)
                 + ctx.omega1, _ANCHOR_FLOOR)
    return sca_constants(gamma1), sca_constants(gamma2)


def _lagrangian(ctx, anchors, alpha_n, alpha_f, phi_raw, rho, scales):
    obj = (surrogate_rate(ctx, alpha_n, alpha_f, anchors)
           - rho * total_power(ctx, alpha_n, alpha_f))
    slacks = constraint_slacks(ctx, alpha_n, alpha_f)
    if not ctx.cooperative:
        slacks[2] = scales[2]
    return obj + float(np.dot(phi_raw, slacks))


def _feasibility_scan(ctx, config, grid_size=2500):
    """Scan alpha_n on the alpha_f = 1 - alpha_n line.

    Returns (feasible grid points, normalized slack matrix, grid).  Raises
    InfeasibleError naming the worst constraint when nothing is feasible.
    """
    grid = np.linspace(1e-4, 0.5 - 1e-4, grid_size)
    scales = constraint_scales(ctx)
    slack = np.stack([constraint_slacks(ctx, a, 1.0 - a) for a in grid])
    slack_n = slack / scales
    if not ctx.cooperative:
        slack_n[:, 2] = 1.0
    feas = np.all(slack_n >= -config.pac_constraint_tol, axis=1)
    if not feas.any():
        best = int(np.argmax(slack_n.min(axis=1)))
        worst = int(np.argmin(slack_n[best]))
        raise InfeasibleError(
            f"no power split in (0,1) satisfies '{CONSTRAINT_NAMES[worst]}'",
            stage="stage1", constraint=CONSTRAINT_NAMES[worst],
            violation=float(slack_n[best].min()))
    return feas, slack_n, grid


def dinkelbach_pac(ctx: PacContext, config: ScenarioConfig,
                   alpha_init=(0.2, 0.8)) -> PacSolution:
    """Dinkelbach outer loop around the quartic/dual inner solver.

    The outer parameter rho tracks the cluster's rate/power ratio and the
    loop stops once the parametric objective satisfies |R - rho P_T| below
    the configured tolerance.  Returns the best feasible iterate seen.
    """
    feas, slack_n, grid = _feasibility_scan(ctx, config)
    scales = constraint_scales(ctx)
    tol = config.pac_constraint_tol

    def is_feasible(a_n, a_f):
        s = constraint_slacks(ctx, a_n, a_f) / scales
        if not ctx.cooperative:
            s[2] = 1.0
        return bool(np.all(s >= -tol))

    feas_idx = np.flatnonzero(feas)
    lo, hi = grid[feas_idx[0]], grid[feas_idx[-1]]

    def _bisect(inside, outside):
        for _ in range(30):
            mid = 0.5 * (inside + outside)
            s = constraint_slacks(ctx, mid, 1.0 - mid) / scales
            if not ctx.cooperative:
                s[2] = 1.0
            if np.all(s >= -tol):
                inside = mid
            else:
                outside = mid
        return inside

    if feas_idx[0] > 0:
        lo = _bisect(lo, grid[feas_idx[0] - 1])
    if feas_idx[-1] < grid.size - 1:
        hi = _bisect(hi, grid[feas_idx[-1] + 1])
    if is_feasible(*alpha_init):
        alpha = float(alpha_init[0])
    else:
        alpha = float(grid[feas_idx[np.argmax(slack_n[feas_idx].min(axis=1))]])

    flags = []
    if ctx.omega1 >= ctx.qos_far:
        flags.append("far_qos_met_by_relay")

    best_alpha = alpha
    best_rate = surrogate_rate(ctx, alpha, 1.0 - alpha)
    rho = best_rate / total_power(ctx, alpha, 1.0 - alpha)
    rho_trace = [rho]
    phi_norm = np.zeros(6)

    outer_used = 0
    inner_total = 0
    gap = math.inf
    converged = False
    stale_limit = 50   # inner iterations without improving the incumbent
    for outer in range(1, config.dinkelbach_max_iter + 1):
        outer_used = outer
        a_cur = best_alpha
        since_improve = 0
        for t in range(1, config.pac_inner_cap + 1):
            inner_total += 1
            anchors = _anchors_at(ctx, a_cur, 1.0 - a_cur)
            (zeta1, _), (zeta2, _) = anchors
            phi_raw = phi_norm / scales
            coeffs = quartic_coefficients(ctx, zeta1, zeta2, 1.0 - a_cur,
                                          phi_raw, rho)
            try:
                roots = solve_quartic(coeffs)
            except DegeneratePolynomialError:
                roots = []
            candidates = {a_cur, lo, hi}   # interval ends cover active-constraint optima
            for r in roots:
                candidates.add(r)
                candidates.add(min(max(r, lo), hi))
            since_improve += 1
            for cand in candidates:
                if is_feasible(cand, 1.0 - cand):
                    rate_cand = surrogate_rate(ctx, cand, 1.0 - cand)
                    if rate_cand > best_rate + 1e-12:
                        best_rate, best_alpha = rate_cand, cand
                        since_improve = 0
            ranked = sorted(
                candidates,
                key=lambda a: (not is_feasible(a, 1.0 - a),
                               -_lagrangian(ctx, anchors, a, 1.0 - a,
                                            phi_raw, rho, scales)))
            a_new = ranked[0]
            slacks = constraint_slacks(ctx, a_new, 1.0 - a_new) / scales
            if not ctx.cooperative:
                slacks[2] = 1.0
            step = config.pac_step_scale / math.sqrt(t)
            phi_new = dual_subgradient_step(phi_norm, -slacks, step)
            if not ctx.cooperative:
                phi_new[2] = 0.0
            moved = abs(a_new - a_cur)
            phi_moved = float(np.max(np.abs(phi_new - phi_norm)))
            phi_norm = phi_new
            a_cur = a_new
            settled = moved < 1e-10 and phi_moved < 1e-9
            if (settled or since_improve >= stale_limit) and \
                    is_feasible(best_alpha, 1.0 - best_alpha):
                break
        p_tot = total_power(ctx, best_alpha, 1.0 - best_alpha)
        gap = abs(best_rate - rho * p_tot)
        if gap < config.dinkelbach_tol:
            converged = True
            break
        rho = best_rate / p_tot
        rho_trace.append(rho)

    return PacSolution(
        alpha_n=best_alpha,
        alpha_f=1.0 - best_alpha,
        rho=best_rate / total_power(ctx, best_alpha, 1.0 - best_alpha),
        multipliers=phi_norm / scales,
        outer_iterations=outer_used,
        inner_iterations=inner_total,
        converged=converged,
        dinkelbach_gap=gap,
        rho_trace=rho_trace,
        flags=flags,
    )
