"""Stage 2: reflection-amplitude optimization through a PSD lift.

The reflection vector g is lifted to F = [g; 1][g; 1]^H so that every
beamformed gain becomes affine in F:

    |(f^H + g^H B) w|^2 = Tr(M F) + |tau|^2,   E = B w,  tau = f^H w,
    M = [[E E^H, E tau^*], [tau E^H, 0]].

The remaining nonconvexities are handled per the two-stage recipe: the
subtracted concave log in the far rate is linearized at the incumbent
(DC programming), the cooperation constraint's bilinear right side keeps
its near-user bracket at the incumbent, and rank(F) = 1 is enforced by
penalizing Tr(F) minus the spectral norm linearized at the incumbent,
with an escalating penalty weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .errors import ExtractionDegenerateError, InvalidArgumentError
from .psd_solver import ConeProblem, SolveReport, TraceInequality, solve

LN2 = math.log(2.0)


@dataclass
class Stage2Cluster:
    """Frozen stage-1 outputs a cluster contributes to the lifted problem."""
    f_near: np.ndarray
    cascade_near: np.ndarray
    f_far: np.ndarray
    cascade_far: np.ndarray
    w: np.ndarray
    alpha_n: float
    alpha_f: float
    rho: float
    sigma_n: float            # near ICI + noise, frozen
    sigma_f: float
    omega1: float             # relay SINR, constant in F
    p_cluster: float
    p_total: float
    zeta1: float
    gamma1_const: float
    zeta2: float
    gamma2_const: float
    cooperative: bool = True


@dataclass
class LiftedProblem:
    clusters: list
    m_near: list              # per-cluster Hermitian (N+1, N+1)
    m_far: list
    tau_near: list            # complex scalars
    tau_far: list
    constraints: list = field(default_factory=list)
    penalty: float = 0.0
    anchor: np.ndarray | None = None
    # flattened trace operators (set by build_lifted_problem) and cached
    # anchor quantities (set by set_anchor); both are derived data
    m_near_flat: np.ndarray | None = None
    m_far_flat: np.ndarray | None = None
    anchor_arg2: np.ndarray | None = None


@dataclass
class PassiveState:
    f_matrix: np.ndarray
    g: np.ndarray
    penalty_residual: float
    sca_iterations: int
    start_values: list = field(default_factory=list)
    end_values: list = field(default_factory=list)
    fell_back: bool = False


def lift_single(f: np.ndarray, cascade: np.ndarray, w: np.ndarray):
    """Lift one user's link: returns (M, tau) with the trace identity above."""
    e = cascade @ w
    tau = np.conj(f) @ w
    n = e.shape[0]
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[:n, :n] = np.outer(e, np.conj(e))
    m[:n, n] = e * np.conj(tau)
    m[n, :n] = tau * np.conj(e)
    return m, complex(tau)


def lift_matrices(cluster: Stage2Cluster):
    """(M_n, M_f, tau_n, tau_f) for one cluster's near and far links."""
    m_n, tau_n = lift_single(cluster.f_near, cluster.cascade_near, cluster.w)
    m_f, tau_f = lift_single(cluster.f_far, cluster.cascade_far, cluster.w)
    return m_n, m_f, tau_n, tau_f


def build_lifted_problem(clusters) -> LiftedProblem:
    lifted = LiftedProblem(clusters=list(clusters), m_near=[], m_far=[],
                           tau_near=[], tau_far=[])
    for cl in clusters:
        m_n, m_f, tau_n, tau_f = lift_matrices(cl)
        lifted.m_near.append(m_n)
        lifted.m_far.append(m_f)
        lifted.tau_near.append(tau_n)
        lifted.tau_far.append(tau_f)
    k = len(lifted.clusters)
    # Re Tr(M F) = Re(m_flat . vec(F)): one matvec for all clusters
    lifted.m_near_flat = np.stack(
        [m.T.ravel() for m in lifted.m_near]) if k else None
    lifted.m_far_flat = np.stack(
        [m.T.ravel() for m in lifted.m_far]) if k else None
    return lifted


def set_anchor(lifted: LiftedProblem, f_anchor):
    """Fix the DC expansion point and cache its per-cluster constants."""
    lifted.anchor = np.asarray(f_anchor, dtype=complex)
    tau_f_sq = np.array([abs(t) ** 2 for t in lifted.tau_far])
    t_f_anchor = (lifted.m_far_flat @ lifted.anchor.ravel()).real + tau_f_sq
    pa_n = np.array([cl.p_cluster * cl.alpha_n for cl in lifted.clusters])
    sig_f = np.array([cl.sigma_f for cl in lifted.clusters])
    lifted.anchor_arg2 = pa_n * t_f_anchor + sig_f
    return lifted


def _trace_gain(m, tau, f_matrix):
    return float(np.einsum("ab,ba->", m, f_matrix).real) + abs(tau) ** 2


def surrogate_objective(f_matrix, lifted: LiftedProblem, alphas, rho, sca_anchors):
    """Value and gradient of sum_k R~_k - rho_k P_T^k at the lifted point.

    The far-rate's subtracted log is replaced by its tangent at
    ``lifted.anchor``, so the surrogate lower-bounds the true rate and is
    tight at the anchor.
    """
    if lifted.anchor is None:
        raise InvalidArgumentError("surrogate_objective: anchor F^(m) not set")
    if lifted.anchor_arg2 is None:
        set_anchor(lifted, lifted.anchor)
    k_clusters = len(lifted.clusters)
    fvec = f_matrix.ravel()
    tau_n_sq = np.array([abs(t) ** 2 for t in lifted.tau_near])
    tau_f_sq = np.array([abs(t) ** 2 for t in lifted.tau_far])
    t_n = (lifted.m_near_flat @ fvec).real + tau_n_sq
    t_f = (lifted.m_far_flat @ fvec).real + tau_f_sq
    t_f_anchor = (lifted.m_far_flat @ lifted.anchor.ravel()).real + tau_f_sq

    alphas = np.asarray(alphas, dtype=float)
    p = np.array([cl.p_cluster for cl in lifted.clusters])
    omega1 = np.array([cl.omega1 for cl in lifted.clusters])
    sigma_n = np.array([cl.sigma_n for cl in lifted.clusters])
    sigma_f = np.array([cl.sigma_f for cl in lifted.clusters])
    p_total = np.array([cl.p_total for cl in lifted.clusters])
    z1 = np.array([a[0] for a in sca_anchors])
    g1 = np.array([a[1] for a in sca_anchors])
    z2 = np.array([a[2] for a in sca_anchors])
    g2 = np.array([a[3] for a in sca_anchors])

    arg_n = p * alphas[:, 0] * t_n
    coef1 = p * alphas[:, 1] + omega1 * p * alphas[:, 0]
    arg1 = coef1 * t_f + omega1 * sigma_f
    arg2_anchor = lifted.anchor_arg2
    if np.any(arg_n <= 0) or np.any(arg1 <= 0) or np.any(arg2_anchor <= 0):
        raise InvalidArgumentError(
            "surrogate_objective: nonpositive log argument (infeasible F)")
    r1 = 0.5 * (z1 * (np.log2(arg_n) - np.log2(sigma_n)) + g1)
    psi2_lin = (np.log2(arg2_anchor)
                + p * alphas[:, 0] * (t_f - t_f_anchor) / (LN2 * arg2_anchor))
    r2 = 0.5 * (z2 * (np.log2(arg1) - psi2_lin) + g2)
    value = float(np.sum(r1 + r2 - np.asarray(rho, dtype=float) * p_total))

    coef_near = 0.5 * z1 / (LN2 * t_n)
    coef_far = 0.5 * z2 * (coef1 / (LN2 * arg1)
                           - p * alphas[:, 0] / (LN2 * arg2_anchor))
    gvec = coef_near @ lifted.m_near_flat + coef_far @ lifted.m_far_flat
    grad = gvec.reshape(f_matrix.shape).T
    grad = 0.5 * (grad + grad.conj().T)
    return value, grad


def principal_eigvec(matrix):
    vals, vecs = np.linalg.eigh(matrix)
    return float(vals[-1]), vecs[:, -1]


def rank1_penalty(f_matrix, anchor, xi):
    """Penalty xi (Tr F - spectral norm linearized at the anchor).

    The linearization Tr(u u^H F), with u the anchor's principal
    eigenvector, makes the penalty xi Tr((I - u u^H) F): zero exactly when
    F is rank-1 along u, nonnegative on the PSD cone.
    """
    if xi <= 0:
        raise InvalidArgumentError("rank1_penalty: xi must be > 0")
    _, u = principal_eigvec(anchor)
    proj = np.eye(f_matrix.shape[0], dtype=complex) - np.outer(u, np.conj(u))
    value = xi * float(np.einsum("ab,ba->", proj, f_matrix).real)
    return value, xi * proj


def spectral_residual(f_matrix):
    """Tr(F) - ||F||_2; zero iff the PSD matrix is rank-1."""
    lam, _ = principal_eigvec(f_matrix)
    return float(np.trace(f_matrix).real) - lam


def extract_reflection_vector(f_matrix) -> np.ndarray:
    """Principal-eigenvector readout of g from the lifted matrix."""
    lam, u = principal_eigvec(f_matrix)
    scaled = np.sqrt(max(lam, 0.0)) * u
    last = scaled[-1]
    if abs(last) < 1e-9:
        raise ExtractionDegenerateError(
            "last lift coordinate is inactive; cannot normalize")
    return np.clip(np.abs(scaled[:-1] / last), 0.0, 1.0)


_CORNER_SLACK = 1e-6


def _constraints_at_anchor(lifted: LiftedProblem, config: ScenarioConfig,
                           anchor) -> list:
    """Affine trace constraints (QoS, cooperation, SIC gap), scaled to O(1).

    Also pins the lift's corner entry to [1 - eps, 1]: the rank-1 decoding
    g-bar = [g; 1] requires F_{N+1,N+1} = 1, and without the lower pin the
    relaxation can shrink F toward zero matrices that decode to nothing.
    """
    dim = lifted.m_near[0].shape[0]
    corner = np.zeros((dim, dim), dtype=complex)
    corner[-1, -1] = 1.0
    cons = [TraceInequality(corner, 1.0 - _CORNER_SLACK, "ge")]
    for k, cl in enumerate(lifted.clusters):
        p, a_n, a_f = cl.p_cluster, cl.alpha_n, cl.alpha_f
        m_n, m_f = lifted.m_near[k], lifted.m_far[k]
        tau_n_sq = abs(lifted.tau_near[k]) ** 2
        tau_f_sq = abs(lifted.tau_far[k]) ** 2

        def add(matrix, offset):
            s = max(np.linalg.norm(matrix), abs(offset), 1e-300)
            cons.append(TraceInequality(matrix / s, offset / s, "ge"))

        add(p * a_n * m_n, cl.sigma_n * config.qos_sinr_near - p * a_n * tau_n_sq)

        coef = p * a_f - (config.qos_sinr_far - cl.omega1) * p * a_n
        add(coef * m_f,
            (config.qos_sinr_far - cl.omega1) * cl.sigma_f - coef * tau_f_sq)

        if cl.cooperative:
            t_n_anchor = _trace_gain(m_n, lifted.tau_near[k], anchor)
            bracket = p * a_n * t_n_anchor + cl.sigma_n
            matrix = (p * a_f * cl.sigma_f * m_n
                      - (p * a_f * cl.sigma_n + cl.omega1 * bracket * p * a_n) * m_f)
            offset = (-p * a_f * cl.sigma_f * tau_n_sq
                      + p * a_f * cl.sigma_n * tau_f_sq
                      + cl.omega1 * bracket * (p * a_n * tau_f_sq + cl.sigma_f))
            add(matrix, offset)

        add(p * (a_f - a_n) * m_n,
            config.sic_power_gap_w - p * (a_f - a_n) * tau_n_sq)
    return cons


def objective_at_g(clusters, g):
    """Exact (un-linearized) stage-2 objective at a concrete reflection vector."""
    total = 0.0
    for cl in clusters:
        gain_n = abs((np.conj(cl.f_near) + g @ cl.cascade_near) @ cl.w) ** 2
        gain_f = abs((np.conj(cl.f_far) + g @ cl.cascade_far) @ cl.w) ** 2
        arg_n = cl.p_cluster * cl.alpha_n * gain_n
        arg1 = (cl.p_cluster * cl.alpha_f
                + cl.omega1 * cl.p_cluster * cl.alpha_n) * gain_f \
            + cl.omega1 * cl.sigma_f
        arg2 = cl.p_cluster * cl.alpha_n * gain_f + cl.sigma_f
        if arg_n <= 0 or arg1 <= 0 or arg2 <= 0:
            return -math.inf
        r1 = 0.5 * (cl.zeta1 * (math.log2(arg_n) - math.log2(cl.sigma_n))
                    + cl.gamma1_const)
        r2 = 0.5 * (cl.zeta2 * (math.log2(arg1) - math.log2(arg2))
                    + cl.gamma2_const)
        total += r1 + r2 - cl.rho * cl.p_total
    return total


def check_constraints_at_g(clusters, g, config: ScenarioConfig, rel_tol=1e-4):
    """Exact constraint check at a concrete reflection vector.

    Evaluates the QoS, cooperation (exact bilinear form), and SIC-gap
    constraints with the frozen interference constants; returns the most
    negative normalized slack.
    """
    worst = math.inf
    for cl in clusters:
        p, a_n, a_f = cl.p_cluster, cl.alpha_n, cl.alpha_f
        gain_n = abs((np.conj(cl.f_near) + g @ cl.cascade_near) @ cl.w) ** 2
        gain_f = abs((np.conj(cl.f_far) + g @ cl.cascade_far) @ cl.w) ** 2
        s1 = p * a_n * gain_n - cl.sigma_n * config.qos_sinr_near
        worst = min(worst, s1 / (p * a_n * gain_n + cl.sigma_n * config.qos_sinr_near))
        s2 = (p * a_f * gain_f
              - (config.qos_sinr_far - cl.omega1) * (p * a_n * gain_f + cl.sigma_f))
        worst = min(worst, s2 / (p * gain_f + cl.sigma_f + abs(config.qos_sinr_far - cl.omega1)
                                 * (p * gain_f + cl.sigma_f)))
        if cl.cooperative:
            lhs = p * a_f * (cl.sigma_f * gain_n - cl.sigma_n * gain_f)
            rhs = cl.omega1 * ((p * a_n * gain_n + cl.sigma_n)
                               * (p * a_n * gain_f + cl.sigma_f))
            scale = abs(lhs) + abs(rhs) + 1e-300
            worst = min(worst, (lhs - rhs) / scale)
        s4 = p * (a_f - a_n) * gain_n - config.sic_power_gap_w
        worst = min(worst, s4 / (p * gain_n + config.sic_power_gap_w))
    return worst >= -rel_tol, worst


def optimize_passive(clusters, g_init, config: ScenarioConfig) -> PassiveState:
    """SCA loop over penalized lifted subproblems; returns rank-1-ish state.

    Anchors (DC tangent, spectral-norm eigenvector, cooperation bracket)
    refresh each iteration; the penalty weight escalates while the
    trace-minus-spectral-norm residual exceeds its tolerance.  Falls back
    to ``g_init`` when the extracted vector violates the frozen
    constraints.
    """
    lifted = build_lifted_problem(clusters)
    dim = clusters[0].cascade_near.shape[0] + 1
    gbar = np.append(np.asarray(g_init, dtype=float), 1.0)
    f_matrix = np.outer(gbar, gbar).astype(complex)
    alphas = [(cl.alpha_n, cl.alpha_f) for cl in lifted.clusters]
    rho = [cl.rho for cl in lifted.clusters]
    anchors = [(cl.zeta1, cl.gamma1_const, cl.zeta2, cl.gamma2_const)
               for cl in lifted.clusters]

    xi = config.penalty_init
    state = PassiveState(f_matrix=f_matrix, g=np.asarray(g_init, dtype=float),
                         penalty_residual=spectral_residual(f_matrix),
                         sca_iterations=0)
    best_g = np.asarray(g_init, dtype=float)
    best_val = objective_at_g(clusters, best_g)
    prev_value = None
    for it in range(1, config.stage2_max_iter + 1):
        set_anchor(lifted, f_matrix.copy())
        lifted.penalty = xi
        cons = _constraints_at_anchor(lifted, config, lifted.anchor)
        _, u = principal_eigvec(lifted.anchor)
        proj = np.eye(dim, dtype=complex) - np.outer(u, np.conj(u))
        proj_flat = proj.T.ravel()

        def oracle(f, _lifted=lifted, _xi=xi, _proj=proj, _proj_flat=proj_flat):
            try:
                val, grad = surrogate_objective(f, _lifted, alphas, rho, anchors)
            except InvalidArgumentError:
                return -np.inf, np.zeros_like(f)
            pval = _xi * float((_proj_flat @ f.ravel()).real)
            return val - pval, grad - _xi * _proj

        start_val = oracle(f_matrix)[0]
        problem = ConeProblem(dim, oracle, cons, diag_cap=np.ones(dim))
        report: SolveReport = solve(problem, f_matrix,
                                    max_steps=config.solver_max_steps,
                                    kkt_tol=config.solver_kkt_tol)
        if report.status == "infeasible":
            break
        f_matrix = report.f_star
        state.start_values.append(start_val)
        state.end_values.append(report.objective_value)
        state.sca_iterations = it
        residual = spectral_residual(f_matrix)
        state.penalty_residual = residual
        state.f_matrix = f_matrix
        try:
            g_cand = extract_reflection_vector(f_matrix)
        except ExtractionDegenerateError:
            g_cand = None
        if g_cand is not None and check_constraints_at_g(clusters, g_cand, config)[0]:
            val = objective_at_g(clusters, g_cand)
            if val > best_val:
                best_val, best_g = val, g_cand
        done = (prev_value is not None
                and abs(report.objective_value - prev_value) < config.stage2_obj_tol
                and residual <= config.penalty_residual_tol)
        prev_value = report.objective_value
        if residual > config.penalty_residual_tol:
            xi = min(xi * config.penalty_growth, config.penalty_cap)
        if done:
            break

    # The SCA converges to a stationary point; per-antenna bimodality can
    # leave better box faces unexplored.  Polish with a short cyclic
    # coordinate search (candidates only accepted when feasible and better).
    n = dim - 1
    for cand in (np.zeros(n), np.ones(n)):
        if check_constraints_at_g(clusters, cand, config)[0]:
            val = objective_at_g(clusters, cand)
            if val > best_val:
                best_val, best_g = val, cand
    levels = np.linspace(0.0, 1.0, 11)
    for _ in range(2):
        improved = False
        for idx in range(n):
            for level in levels:
                cand = best_g.copy()
                if cand[idx] == level:
                    continue
                cand[idx] = level
                val = objective_at_g(clusters, cand)
                if val > best_val and check_constraints_at_g(clusters, cand,
                                                             config)[0]:
                    best_val, best_g = val, cand
                    improved = True
        if not improved:
            break

    state.fell_back = bool(np.array_equal(best_g, np.asarray(g_init, dtype=float)))
    state.g = best_g
    return state
