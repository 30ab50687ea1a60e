"""Differentiable soft K-means over node representations.

Assignments are a softmax over beta * cosine similarity to each center;
centers are assignment-weighted means. Large beta sharpens assignments
toward one-hot. The literal_sign flag flips the softmax argument to
-beta * sim for auditing the printed-formula variant (which assigns nodes
to their least similar center and is off by default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


class ClusterError(ValueError):
    pass


class ZeroNormError(ClusterError):
    """Cosine similarity undefined for a zero-norm row."""


@dataclass(frozen=True)
class ClusterState:
    centers: np.ndarray      # R x d
    assignments: np.ndarray  # N x R, row-stochastic
    R: int
    beta: float
    iterations: int


def _row_normalize(m, norm_floor):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if norm_floor is None:
        if np.any(norms == 0):
            raise ZeroNormError("zero-norm row; pass a norm_floor to proceed")
    else:
        norms = np.maximum(norms, norm_floor)
    return m / norms


def init_centers(H: np.ndarray, R: int, seed: int) -> np.ndarray:
    """K-means++ seeding over the rows of H, deterministic per seed."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if R < 1 or R > n:
        raise ClusterError(f"cluster count {R} out of range for {n} points")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((H - H[chosen[0]]) ** 2, axis=1)
    for _ in range(1, R):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a chosen center
            pool = np.setdiff1d(np.arange(n), np.array(chosen))
            chosen.append(int(rng.choice(pool)))
        else:
            chosen.append(int(rng.choice(n, p=d2 / total)))
        d2 = np.minimum(d2, np.sum((H - H[chosen[-1]]) ** 2, axis=1))
    return H[chosen].copy()


def update_assignments(H, centers, beta, norm_floor=None, literal_sign=False):
    """Soft assignment matrix: softmax_r(beta * cos(h_i, mu_r)), rows sum to 1."""
    if beta <= 0:
        raise ClusterError("beta must be positive")
    Hn = _row_normalize(np.asarray(H, dtype=np.float64), norm_floor)
    Cn = _row_normalize(np.asarray(centers, dtype=np.float64), norm_floor)
    sims = Hn @ Cn.T
    logits = (-beta if literal_sign else beta) * sims
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def update_centers(H, assignments) -> np.ndarray:
    """Assignment-weighted mean per cluster."""
    H = np.asarray(H, dtype=np.float64)
    c = np.asarray(assignments, dtype=np.float64)
    colsum = c.sum(axis=0)
    if np.any(colsum <= 0):
        raise ClusterError(f"empty cluster(s): {np.flatnonzero(colsum <= 0).tolist()}")
    return (c.T @ H) / colsum[:, None]


def fit(H, R, beta, T, seed, literal_sign=False) -> ClusterState:
    """init_centers followed by T assignment/center alternations."""
    if T < 1:
        raise ClusterError("need at least one iteration")
    H = np.asarray(H, dtype=np.float64)
    centers = init_centers(H, R, seed)
    assignments = None
    for _ in range(T):
        assignments = update_assignments(H, centers, beta, norm_floor=1e-12,
                                         literal_sign=literal_sign)
        try:
            centers = update_centers(H, assignments)
        except ClusterError:
            centers = _revive_empty(H, centers, assignments)
    assignments.setflags(write=False)
    centers.setflags(write=False)
    return ClusterState(centers=centers, assignments=assignments, R=int(R),
                        beta=float(beta), iterations=int(T))


def _revive_empty(H, centers, assignments):
    # live centers update normally; each dead center moves to the point
    # farthest from its nearest center
    colsum = assignments.sum(axis=0)
    centers = centers.copy()
    live = colsum > 0
    if np.any(live):
        centers[live] = (assignments[:, live].T @ H) / colsum[live][:, None]
    for r in np.flatnonzero(~live):
        d2 = np.min(((H[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), axis=1)
        centers[r] = H[int(np.argmax(d2))]
    return centers


def cluster_summaries(H, state: ClusterState, literal_sign=False) -> np.ndarray:
    """z_i = sigmoid(sum_r c_ir mu_r) with assignments recomputed from H against
    the state's centers."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[1] != state.centers.shape[1]:
        raise ClusterError(f"width mismatch: H is {H.shape}, centers {state.centers.shape}")
    c = update_assignments(H, state.centers, state.beta, norm_floor=1e-12,
                           literal_sign=literal_sign)
    return 1.0 / (1.0 + np.exp(-(c @ state.centers)))


def summaries_node(tape, h_node, centers, beta, literal_sign=False):
    """Tape version of cluster_summaries: differentiable through the live node
    representations; centers enter as constants."""
    centers = np.asarray(centers, dtype=np.float64)
    n, d = h_node.shape
    # row-normalize h on tape: h / sqrt(sum h^2 + floor)
    sq = ad.multiply(h_node, h_node)
    rs = ad.matmul(sq, tape.constant(np.ones((d, 1))))
    inv = ad.power(ad.add_const(rs, 1e-24), -0.5)
    hn = ad.multiply(h_node, ad.matmul(inv, tape.constant(np.ones((1, d)))))
    cn = _row_normalize(centers, 1e-12)
    sims = ad.matmul(hn, tape.constant(cn.T))
    logits = ad.scale(sims, -beta if literal_sign else beta)
    c = ad.masked_softmax(logits, np.ones_like(logits.value, dtype=bool))
    return ad.sigmoid(ad.matmul(c, tape.constant(centers)))
