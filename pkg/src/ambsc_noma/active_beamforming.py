"""Zero-forcing beamformers that null inter-cluster interference at near users.

Cluster k's beamformer is the unit-norm projection of its near user's
matched filter onto the null space of every other cluster's near-user
channel, so v_n^l w_k = 0 for all l != k.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import null_space

from .errors import DegenerateChannelError, InfeasibleError

# singular values below this fraction of the largest are treated as zero
_RANK_TOL = 1e-10


def build_interference_matrix(near_channels: np.ndarray, k: int) -> np.ndarray:
    """Columns are the other clusters' near-user channels (as column vectors)."""
    v = np.asarray(near_channels)
    others = [v[l].conj() for l in range(v.shape[0]) if l != k]
    if not others:
        return np.zeros((v.shape[1], 0), dtype=complex)
    return np.stack(others, axis=1)


def zf_beamformer(interference: np.ndarray, v_near: np.ndarray) -> np.ndarray:
    """Unit beamformer orthogonal to every column of ``interference``.

    w = Q Q^H v_near^H / ||Q Q^H v_near^H|| with Q an orthonormal basis of
    null(interference^H).  The global phase is fixed so v_near . w is real
    and positive.
    """
    m = v_near.shape[0]
    if interference.shape[1] == 0:
        projected = v_near.conj()
    else:
        if interference.shape[1] >= m:
            raise InfeasibleError(
                "zero-forcing null space is empty (M <= K-1)",
                stage="stage1", constraint="zf_null_space")
        basis = null_space(interference.conj().T, rcond=_RANK_TOL)
        if basis.shape[1] == 0:
            raise InfeasibleError(
                "zero-forcing null space is empty",
                stage="stage1", constraint="zf_null_space")
        projected = basis @ (basis.conj().T @ v_near.conj())
    norm = np.linalg.norm(projected)
    if norm <= 1e-300 or norm <= 1e-12 * np.linalg.norm(v_near):
        raise DegenerateChannelError(
            "near-user channel has numerically zero null-space projection")
    w = projected / norm
    gain = v_near @ w
    if abs(gain) > 0:
        w = w * (np.conj(gain) / abs(gain))
    return w


def zf_beamformer_set(near_channels: np.ndarray) -> np.ndarray:
    """Per-cluster ZF beamformers stacked into a (K, M) array."""
    v = np.asarray(near_channels)
    return np.stack([
        zf_beamformer(build_interference_matrix(v, k), v[k])
        for k in range(v.shape[0])
    ])
