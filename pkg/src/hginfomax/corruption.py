"""Negative-sample construction: shuffle feature rows, leave adjacency alone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CorruptedSample:
    shuffled_features: np.ndarray
    permutation: np.ndarray
    seed: int


def corrupt(features: np.ndarray, rng_seed: int) -> CorruptedSample:
    """Permute the rows of the feature matrix with a uniform random permutation.

    Adjacency structures are deliberately not touched; graph structure stays
    intact while node-feature correspondence is broken. Reproducible per seed
    (Philox counter-based generator).
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError("feature matrix must be 2-D with at least one row")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    perm = rng.permutation(features.shape[0])
    shuffled = features[perm].copy()
    shuffled.setflags(write=False)
    perm.setflags(write=False)
    return CorruptedSample(shuffled_features=shuffled, permutation=perm, seed=int(rng_seed))
