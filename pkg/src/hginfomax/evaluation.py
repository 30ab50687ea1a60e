"""Link-prediction evaluation: edge splitting, edge scoring, rank-based AUC,
average precision, silhouette score, and a 2-D PCA projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import MetaPathGraph


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeSplit:
    train_mpg: MetaPathGraph
    val_pos: np.ndarray   # m x 2 pairs (i < j)
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    fractions: tuple
    seed: int


@dataclass(frozen=True)
class Metrics:
    auc: float
    ap: float
    sil: float | None = None

    def __str__(self):
        out = f"auc={self.auc:.6f} ap={self.ap:.6f}"
        if self.sil is not None:
            out += f" sil={self.sil:.6f}"
        return out


def split_edges(mpg: MetaPathGraph, seed: int, val_frac=0.05, test_frac=0.10) -> EdgeSplit:
    """Hide floor(test_frac*E) + floor(val_frac*E) edges, sample equal-count
    non-edge negatives, and return a training adjacency with the positives
    removed symmetrically (self-loop convention untouched)."""
    iu, ju = np.triu_indices(mpg.n_nodes, k=1)
    present = mpg.adjacency[iu, ju]
    edges = np.column_stack([iu[present], ju[present]])
    n_edges = len(edges)
    if n_edges < 20:
        raise EvalError(f"need at least 20 edges to split, got {n_edges}")
    n_test = int(np.floor(test_frac * n_edges))
    n_val = int(np.floor(val_frac * n_edges))
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_edges)
    test_pos = edges[order[:n_test]]
    val_pos = edges[order[n_test:n_test + n_val]]

    n_pairs = mpg.n_nodes * (mpg.n_nodes - 1) // 2
    need = n_test + n_val
    if n_pairs - n_edges < need:
        raise EvalError("graph too dense: non-edge pool smaller than requested negatives")
    neg = []
    seen = set()
    while len(neg) < need:
        i, j = rng.integers(mpg.n_nodes, size=2)
        if i == j:
            continue
        i, j = (int(min(i, j)), int(max(i, j)))
        if mpg.adjacency[i, j] or (i, j) in seen:
            continue
        seen.add((i, j))
        neg.append((i, j))
    neg = np.array(neg)
    test_neg, val_neg = neg[:n_test], neg[n_test:]

    adj = mpg.adjacency.copy()
    hidden = np.concatenate([test_pos, val_pos])
    adj[hidden[:, 0], hidden[:, 1]] = False
    adj[hidden[:, 1], hidden[:, 0]] = False
    return EdgeSplit(train_mpg=MetaPathGraph(mpg.spec, adj),
                     val_pos=val_pos, val_neg=val_neg,
                     test_pos=test_pos, test_neg=test_neg,
                     fractions=(val_frac, test_frac), seed=int(seed))


def score_edge(H, i: int, j: int) -> float:
    """Edge probability sigmoid(h_i . h_j); symmetric in (i, j)."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise EvalError(f"node id out of range: ({i},{j}) with n={n}")
    d = float(H[i] @ H[j])
    return float(1.0 / (1.0 + np.exp(-d))) if d >= 0 else float(np.exp(d) / (1.0 + np.exp(d)))


def score_pairs(H, pairs) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    pairs = np.asarray(pairs)
    d = np.sum(H[pairs[:, 0]] * H[pairs[:, 1]], axis=1)
    return np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                    np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))


def auc(pos_scores, neg_scores) -> float:
    """Rank-based (Mann-Whitney) AUC: P(pos > neg) + 0.5 P(pos == neg)."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise EvalError("both score lists must be non-empty")
    allscores = np.concatenate([pos, neg])
    order = np.argsort(allscores, kind="mergesort")
    ranks = np.empty(allscores.size, dtype=np.float64)
    ranks[order] = np.arange(1, allscores.size + 1)
    # average ranks over ties
    sorted_scores = allscores[order]
    i = 0
    while i < sorted_scores.size:
        j = i
        while j + 1 < sorted_scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    r_pos = ranks[: pos.size].sum()
    u = r_pos - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def average_precision(pos_scores, neg_scores) -> float:
    """Ranked-summation AP with pessimistic ties (tied negatives rank first)."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise EvalError("both score lists must be non-empty")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    order = np.lexsort((labels, -scores))  # descending score, negatives before ties
    labels = labels[order]
    cum_pos = np.cumsum(labels)
    precision_at_hit = cum_pos[labels == 1] / (np.flatnonzero(labels == 1) + 1)
    return float(precision_at_hit.sum() / pos.size)


def silhouette(H, labels) -> float:
    """Mean silhouette (b - a) / max(a, b) with Euclidean distances; singleton
    clusters contribute 0."""
    H = np.asarray(H, dtype=np.float64)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise EvalError("silhouette undefined for a single cluster")
    d = np.sqrt(np.maximum(
        np.sum(H ** 2, axis=1)[:, None] + np.sum(H ** 2, axis=1)[None, :] - 2 * H @ H.T,
        0.0))
    sizes = {c: int(np.sum(labels == c)) for c in uniq}
    scores = np.zeros(H.shape[0])
    for idx in range(H.shape[0]):
        own = labels[idx]
        if sizes[own] == 1:
            continue
        a = d[idx, labels == own].sum() / (sizes[own] - 1)
        b = min(d[idx, labels == c].mean() for c in uniq if c != own)
        scores[idx] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(scores.mean())


def pca_project(H, out_dim: int = 2) -> np.ndarray:
    """Center columns and project onto the leading eigenvectors of the
    covariance (power iteration with deflation, tol 1e-10). Sign convention:
    first nonzero loading of each component is positive."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if n < 2:
        raise EvalError("need at least 2 rows to project")
    Xc = H - H.mean(axis=0, keepdims=True)
    cov = Xc.T @ Xc / (n - 1)
    comps = []
    rng = np.random.default_rng(0)
    for _ in range(out_dim):
        v = rng.standard_normal(cov.shape[0])
        nv = np.linalg.norm(v)
        v /= nv
        for _ in range(10000):
            w = cov @ v
            nw = np.linalg.norm(w)
            if nw < 1e-300:
                v = np.zeros_like(v)
                break
            w /= nw
            if np.linalg.norm(w - v) < 1e-10 or np.linalg.norm(w + v) < 1e-10:
                v = w
                break
            v = w
        lam = float(v @ cov @ v)
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size and v[nz[0]] < 0:
            v = -v
        comps.append(v)
        cov = cov - lam * np.outer(v, v)
    return Xc @ np.column_stack(comps)
