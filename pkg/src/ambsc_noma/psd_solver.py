"""First-order log-barrier solver over the Hermitian PSD cone.

Maximizes a smooth concave objective (given as a value/gradient oracle)
subject to affine trace inequalities Tr(A_j F) >=/<= b_j, per-entry
diagonal caps, and F >= 0.  Each barrier stage ascends

    objective(F) + mu * sum_j log slack_j(F) + mu * log det F

with a barrier-Newton direction (Kronecker PSD metric plus Woodbury slack
corrections), falling back to Dikin-scaled and plain gradients, under a
backtracking line search; mu runs from 1 down to 1e-6.  Dimensions stay
small here (N+1 <= 33), so the per-step linear algebra is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

_RIDGE = 1e-9


@dataclass
class TraceInequality:
    matrix: np.ndarray        # Hermitian coefficient matrix
    offset: float
    sense: str                # "ge" or "le"


@dataclass
class ConeProblem:
    dimension: int
    objective: callable       # F -> (value, Hermitian gradient)
    inequalities: list = field(default_factory=list)
    diag_cap: np.ndarray | None = None


@dataclass
class SolveReport:
    f_star: np.ndarray
    objective_value: float
    kkt_residual: float
    iterations: int
    status: str               # converged | iteration-cap | infeasible


def psd_project(matrix: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    a = np.asarray(matrix)
    herm_gap = np.linalg.norm(a - a.conj().T)
    if herm_gap > 1e-10 * max(1.0, np.linalg.norm(a)):
        raise InvalidArgumentError("psd_project: input is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(a)
    clipped = np.clip(vals, 0.0, None)
    out = (vecs * clipped) @ vecs.conj().T
    return 0.5 * (out + out.conj().T)


def _oriented(problem: ConeProblem):
    """Stack constraints as slack_j(F) = Re Tr(A_j F) - b_j >= 0."""
    mats, offs = [], []
    for ineq in problem.inequalities:
        sign = 1.0 if ineq.sense == "ge" else -1.0
        mats.append(sign * np.asarray(ineq.matrix, dtype=complex))
        offs.append(sign * float(ineq.offset))
    if problem.diag_cap is not None:
        for idx, cap in enumerate(np.asarray(problem.diag_cap, dtype=float)):
            e = np.zeros((problem.dimension, problem.dimension), dtype=complex)
            e[idx, idx] = -1.0
            mats.append(e)
            offs.append(-cap)
    if mats:
        return np.stack(mats), np.array(offs)
    return (np.zeros((0, problem.dimension, problem.dimension), dtype=complex),
            np.zeros(0))


def _chol_logdet(f):
    """(log det F, lower Cholesky factor) or (None, None) if not PD."""
    if not np.all(np.isfinite(f)):
        return None, None
    try:
        chol = np.linalg.cholesky(f)
    except np.linalg.LinAlgError:
        return None, None
    return 2.0 * float(np.sum(np.log(np.real(np.diag(chol))))), chol


def _strictly_feasible(slacks, f, margin=_RIDGE):
    if slacks.size and slacks.min() < margin:
        return False
    return bool(np.linalg.eigvalsh(f).min() > margin * 1e-3)


def solve(problem: ConeProblem, f_init: np.ndarray,
          max_steps: int = 2000, kkt_tol: float = 1e-5,
          mu_init: float = 1.0, mu_final: float = 1e-6) -> SolveReport:
    """Barrier loop; returns the best iterate with a stationarity measure.

    ``kkt_residual`` is the gradient norm of the final barrier subproblem,
    scaled by the objective gradient magnitude at the start.
    """
    dim = problem.dimension
    a_stack, b_off = _oriented(problem)
    n_cons = a_stack.shape[0]
    # slack_j = Re(a_flat[j] . vec(F)) - b_j via one BLAS gemv
    a_flat = (a_stack.transpose(0, 2, 1).reshape(n_cons, -1)
              if n_cons else np.zeros((0, dim * dim), dtype=complex))

    def slacks_of(f):
        if n_cons == 0:
            return np.zeros(0)
        return (a_flat @ f.ravel()).real - b_off

    def phase_one(f0):
        """Strictly feasible start: blends toward 0.5 I, then a
        max-min-slack subgradient polish."""
        center = 0.5 * np.eye(dim, dtype=complex)
        for theta in (0.0, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.6, 1.0):
            cand = (1.0 - theta) * f0 + theta * center + _RIDGE * np.eye(dim)
            if _strictly_feasible(slacks_of(cand), cand):
                return cand
        f = psd_project(f0) + 1e-3 * np.eye(dim)
        for _ in range(300):
            s = slacks_of(f)
            if _strictly_feasible(s, f):
                return f
            worst = int(np.argmin(s))
            grad = a_stack[worst]
            step = 0.1 / max(1.0, np.linalg.norm(grad))
            f = psd_project(f + step * grad) + _RIDGE * np.eye(dim)
        if _strictly_feasible(slacks_of(f), f):
            return f
        return None

    f = np.asarray(f_init, dtype=complex)
    f = 0.5 * (f + f.conj().T)
    if not _strictly_feasible(slacks_of(f), f):
        f = phase_one(f)
        if f is None:
            f_ret = psd_project(0.5 * (np.asarray(f_init, dtype=complex)
                                       + np.asarray(f_init, dtype=complex).conj().T))
            return SolveReport(f_ret, float(problem.objective(f_ret)[0]),
                               np.inf, 0, "infeasible")

    _, grad0 = problem.objective(f)
    grad_scale = max(1.0, float(np.linalg.norm(grad0)))
    tol = kkt_tol * grad_scale

    def barrier_value(fm, mu):
        """(value, slacks, objective gradient, cholesky) or -inf marker."""
        s = slacks_of(fm)
        if s.size and s.min() <= 0:
            return -np.inf, None, None, None
        logdet, chol = _chol_logdet(fm)
        if logdet is None:
            return -np.inf, None, None, None
        oval, ograd = problem.objective(fm)
        if not np.isfinite(oval):
            return -np.inf, None, None, None
        bval = oval + mu * (float(np.sum(np.log(s))) if s.size else 0.0) \
            + mu * logdet
        return bval, s, ograd, chol

    def barrier_grad(mu, s, ograd, chol):
        inv_chol = np.linalg.solve(chol, np.eye(dim, dtype=complex))
        inv = inv_chol.conj().T @ inv_chol
        bgrad = ograd + mu * inv
        if n_cons:
            corr = ((1.0 / s) @ a_flat).reshape(dim, dim).T
            bgrad = bgrad + mu * corr
        return 0.5 * (bgrad + bgrad.conj().T)

    def newton_direction(fm, grad, s, chol, mu):
        """Barrier-Hessian solve: Kronecker PSD part plus Woodbury slack
        corrections.  Always an ascent direction (the metric is PSD)."""
        fgf = fm @ grad @ fm
        if n_cons == 0:
            d = fgf / mu
        else:
            # Tr(A_i F A_j F) = Tr(R_i R_j) with R_j = L^H A_j L Hermitian
            r = np.matmul(chol.conj().T[None], np.matmul(a_stack, chol))
            r_rows = r.reshape(n_cons, -1)
            gram = (r_rows @ r_rows.conj().T).real
            rhs = (a_flat @ fgf.ravel()).real
            m = np.diag(s ** 2) + gram
            try:
                y = np.linalg.solve(m, rhs)
            except np.linalg.LinAlgError:
                y = np.linalg.lstsq(m, rhs, rcond=None)[0]
            corr = np.tensordot(y, a_stack, axes=1)
            d = (fgf - fm @ corr @ fm) / mu
        return 0.5 * (d + d.conj().T)

    # Candidates outside the cone are rejected by the line search rather than
    # projected: the Frobenius PSD projection of a non-PSD matrix sits on the
    # cone boundary where the log-det barrier is -inf, so projection plus
    # rejection coincide and the projection is the identity on every
    # accepted (strictly feasible) iterate.

    steps_used = 0
    mu = mu_init
    bval, s, ograd, chol = barrier_value(f, mu)
    bgrad = barrier_grad(mu, s, ograd, chol)
    while True:
        final_stage = mu <= mu_final * 1.0000001
        stage_tol = tol if final_stage else max(tol, 1e-2 * mu * grad_scale)
        stalled = 0
        warm = [1.0, 1.0, 1.0]      # per-direction warm-started step fractions
        while steps_used < max_steps:
            if float(np.linalg.norm(bgrad)) <= stage_tol or stalled >= 3:
                break
            steps_used += 1
            fnorm = max(1.0, float(np.linalg.norm(f)))
            newton = newton_direction(f, bgrad, s, chol, mu)
            dikin = f @ bgrad @ f
            dikin = 0.5 * (dikin + dikin.conj().T)
            accepted = False
            for d_idx, (direction, t0) in enumerate(
                    ((newton, 1.0), (dikin, np.inf), (bgrad, np.inf))):
                if not np.all(np.isfinite(direction)):
                    continue
                dnorm = float(np.linalg.norm(direction))
                if dnorm == 0.0:
                    continue
                t_init = min(t0, fnorm / dnorm)
                t = t_init * warm[d_idx]
                for _ in range(60):
                    cand = f + t * direction
                    cval, cs, cograd, cchol = barrier_value(cand, mu)
                    if np.isfinite(cval):
                        gain = float(np.real(np.vdot(bgrad, cand - f)))
                        if gain >= 0 and cval >= bval + 1e-4 * gain:
                            accepted = True
                            break
                    t *= 0.5
                if accepted:
                    warm[d_idx] = min(1.0, 4.0 * t / t_init)
                    break
            if not accepted:
                break
            stalled = stalled + 1 if cval - bval < 1e-12 * (1 + abs(bval)) else 0
            moved = float(np.linalg.norm(cand - f))
            f, bval, s, ograd, chol = cand, cval, cs, cograd, cchol
            bgrad = barrier_grad(mu, s, ograd, chol)
            if moved <= 1e-13 * (1.0 + np.linalg.norm(f)):
                break
        if final_stage or steps_used >= max_steps:
            break
        mu *= 0.1
        bval, s, ograd, chol = barrier_value(f, mu)
        bgrad = barrier_grad(mu, s, ograd, chol)

    kkt = float(np.linalg.norm(bgrad)) / grad_scale
    status = "converged" if kkt <= kkt_tol else "iteration-cap"
    value = float(problem.objective(f)[0])
    return SolveReport(f, value, kkt, steps_used, status)
