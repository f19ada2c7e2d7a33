"""Near/far user pairing by channel correlation and gain difference.

The K users with the largest effective-channel norms become cluster heads
(near users).  Heads are matched greedily, in descending head-gain order,
to the remaining user with the highest channel correlation; candidates
below the correlation threshold are only used when nothing clears it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError


@dataclass
class ClusterAssignment:
    near: np.ndarray        # (K,) user indices
    far: np.ndarray         # (K,) user indices
    unassigned: np.ndarray  # user indices left out of this frame


def pairing_metrics(v_i: np.ndarray, v_j: np.ndarray):
    """Correlation rho = |<v_i, v_j>| / (||v_i|| ||v_j||) and gain gap."""
    norm_i = np.linalg.norm(v_i)
    norm_j = np.linalg.norm(v_j)
    if norm_i == 0 or norm_j == 0:
        raise InvalidArgumentError("pairing_metrics: zero channel vector")
    rho = abs(np.vdot(v_j, v_i)) / (norm_i * norm_j)
    delta = norm_i ** 2 - norm_j ** 2
    return min(float(rho), 1.0), float(delta)


def form_clusters(effective_channels: np.ndarray, clusters: int,
                  correlation_threshold: float) -> ClusterAssignment:
    """Pair 2K of the users into K {near, far} clusters.

    Deterministic for fixed input: every selection is tie-broken by larger
    gain difference and then by lower user index.
    """
    v = np.asarray(effective_channels)
    n_users = v.shape[0]
    if n_users < 2 * clusters:
        raise ConfigurationError(
            f"form_clusters: need at least {2 * clusters} users, got {n_users}")

    gains = np.sum(np.abs(v) ** 2, axis=1)
    order = sorted(range(n_users), key=lambda u: (-gains[u], u))
    heads = order[:clusters]
    pool = set(order[clusters:])

    far = []
    for head in heads:  # heads are already in descending gain order
        scored = []
        for cand in sorted(pool):
            rho, delta = pairing_metrics(v[head], v[cand])
            scored.append((cand, rho, delta))
        eligible = [s for s in scored if s[1] >= correlation_threshold] or scored
        best = min(eligible, key=lambda s: (-s[1], -s[2], s[0]))
        far.append(best[0])
        pool.remove(best[0])

    return ClusterAssignment(
        near=np.array(heads, dtype=int),
        far=np.array(far, dtype=int),
        unassigned=np.array(sorted(pool), dtype=int),
    )
