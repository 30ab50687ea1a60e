"""Soft K-means tests: assignment/center update oracles, sharpening with beta,
planted-blob recovery, empty-cluster revival, tape summaries."""

import numpy as np
import pytest

from hginfomax import clustering as cl
from hginfomax import autodiff as ad


def _blobs(rng, n_per, centers, sigma=0.05):
    pts = np.concatenate([c + sigma * rng.standard_normal((n_per, len(c)))
                          for c in centers])
    labels = np.repeat(np.arange(len(centers)), n_per)
    return pts, labels


def test_assignments_match_direct_softmax():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((20, 4)) + 1.0
    mu = rng.standard_normal((3, 4)) + 1.0
    beta = 7.5
    got = cl.update_assignments(H, mu, beta)
    Hn = H / np.linalg.norm(H, axis=1, keepdims=True)
    Cn = mu / np.linalg.norm(mu, axis=1, keepdims=True)
    logits = beta * (Hn @ Cn.T)
    want = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    assert np.allclose(got, want, atol=1e-10)
    assert np.allclose(got.sum(axis=1), 1.0, atol=1e-12)


def test_assignment_rows_sum_to_one_randomized():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n, d, r = rng.integers(2, 15), rng.integers(2, 6), rng.integers(1, 5)
        H = rng.standard_normal((n, d)) + 0.5
        mu = rng.standard_normal((r, d)) + 0.5
        c = cl.update_assignments(H, mu, float(rng.uniform(0.5, 200)))
        assert np.allclose(c.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(c >= 0)


def test_literal_sign_prefers_least_similar_center():
    H = np.array([[1.0, 0.0], [0.0, 1.0]])
    mu = np.array([[1.0, 0.0], [0.0, 1.0]])
    default = cl.update_assignments(H, mu, 10.0)
    literal = cl.update_assignments(H, mu, 10.0, literal_sign=True)
    assert np.argmax(default[0]) == 0 and np.argmax(literal[0]) == 1
    assert np.allclose(default, literal[:, ::-1], atol=1e-12)


def test_beta_sharpens_toward_onehot():
    rng = np.random.default_rng(2)
    H = rng.standard_normal((30, 3)) + 2.0
    mu = rng.standard_normal((4, 3)) + 2.0
    entropies = []
    for beta in (1.0, 10.0, 100.0, 1000.0):
        c = cl.update_assignments(H, mu, beta)
        entropies.append(-np.sum(c * np.log(c + 1e-300), axis=1).mean())
    assert all(a >= b - 1e-12 for a, b in zip(entropies, entropies[1:]))
    assert np.allclose(cl.update_assignments(H, mu, 1e4).max(axis=1), 1.0, atol=1e-6)


def test_update_centers_weighted_mean_oracle():
    rng = np.random.default_rng(3)
    H = rng.standard_normal((15, 4))
    c = rng.random((15, 3))
    c /= c.sum(axis=1, keepdims=True)
    got = cl.update_centers(H, c)
    want = np.stack([(c[:, r:r + 1] * H).sum(axis=0) / c[:, r].sum() for r in range(3)])
    assert np.allclose(got, want, atol=1e-12)
    with pytest.raises(cl.ClusterError, match="empty"):
        cl.update_centers(H, np.zeros((15, 3)))


def test_hard_limit_matches_lloyd_on_separated_blobs():
    # at large beta the soft updates coincide with classic k-means updates
    rng = np.random.default_rng(4)
    H, _ = _blobs(rng, 20, [(5, 0), (0, 5), (-5, -5)])
    centers = cl.init_centers(H, 3, seed=0)
    for _ in range(5):
        c = cl.update_assignments(H, centers, beta=1e4)
        hard = np.argmax(c, axis=1)
        lloyd = np.stack([H[hard == r].mean(axis=0) for r in range(3)])
        centers = cl.update_centers(H, c)
        assert np.allclose(centers, lloyd, atol=1e-6)


def test_fit_recovers_planted_blobs():
    rng = np.random.default_rng(5)
    H, labels = _blobs(rng, 25, [(4, 0, 0), (0, 4, 0), (0, 0, 4)])
    state = cl.fit(H, R=3, beta=100.0, T=20, seed=1)
    hard = np.argmax(state.assignments, axis=1)
    # perfect recovery up to cluster relabeling
    assert all(len(set(hard[labels == k])) == 1 for k in range(3))
    assert len(set(hard[::25])) == 3
    assert state.R == 3 and state.iterations == 20


def test_init_centers_kmeanspp_properties():
    rng = np.random.default_rng(6)
    H = rng.standard_normal((40, 3))
    mu = cl.init_centers(H, 5, seed=7)
    assert mu.shape == (5, 3)
    # every center is one of the input rows, all distinct
    rows = {tuple(r) for r in H}
    assert all(tuple(c) in rows for c in mu)
    assert len({tuple(c) for c in mu}) == 5
    assert np.array_equal(mu, cl.init_centers(H, 5, seed=7))
    with pytest.raises(cl.ClusterError):
        cl.init_centers(H, 0, seed=0)
    with pytest.raises(cl.ClusterError):
        cl.init_centers(H, 41, seed=0)


def test_init_centers_handles_duplicate_points():
    H = np.repeat(np.array([[1.0, 0.0], [0.0, 1.0]]), [5, 5], axis=0)
    mu = cl.init_centers(H, 2, seed=0)
    assert len({tuple(c) for c in mu}) == 2


def test_zero_norm_rows():
    H = np.array([[1.0, 0.0], [0.0, 0.0]])
    mu = np.array([[1.0, 0.0]])
    with pytest.raises(cl.ZeroNormError):
        cl.update_assignments(H, mu, 10.0)
    c = cl.update_assignments(H, mu, 10.0, norm_floor=1e-12)
    assert np.allclose(c.sum(axis=1), 1.0)


def test_empty_cluster_revival():
    # two far blobs, three clusters at huge beta: one cluster starves, the
    # revival rule must still return three finite distinct centers
    rng = np.random.default_rng(8)
    H, _ = _blobs(rng, 30, [(10, 0), (-10, 0)], sigma=0.01)
    state = cl.fit(H, R=3, beta=1e6, T=10, seed=2)
    assert np.all(np.isfinite(state.centers))
    assert np.allclose(state.assignments.sum(axis=1), 1.0, atol=1e-9)


def test_cluster_summaries_formula_and_range():
    rng = np.random.default_rng(9)
    H = rng.standard_normal((12, 4)) + 1.0
    state = cl.fit(H, R=3, beta=50.0, T=5, seed=0)
    Z = cl.cluster_summaries(H, state)
    c = cl.update_assignments(H, state.centers, 50.0, norm_floor=1e-12)
    assert np.allclose(Z, 1 / (1 + np.exp(-(c @ state.centers))), atol=1e-12)
    assert np.all((Z > 0) & (Z < 1))
    with pytest.raises(cl.ClusterError):
        cl.cluster_summaries(H[:, :3], state)


def test_summaries_node_matches_numpy_and_is_differentiable():
    rng = np.random.default_rng(10)
    H = rng.standard_normal((8, 3)) + 1.0
    centers = rng.standard_normal((2, 3)) + 1.0
    beta = 20.0
    tape = ad.Tape()
    hnode = tape.param("h", H)
    z = cl.summaries_node(tape, hnode, centers, beta)
    c = cl.update_assignments(H, centers, beta, norm_floor=1e-12)
    assert np.allclose(z.value, 1 / (1 + np.exp(-(c @ centers))), atol=1e-9)

    # gradient check at moderate sharpness (saturated assignments at beta=20
    # leave sub-roundoff gradients that finite differences cannot resolve)
    def build(t, p):
        zz = cl.summaries_node(t, p[0], centers, 5.0)
        return ad.reduce_sum(ad.multiply(zz, zz))
    assert ad.grad_check(build, [H]) < 1e-6


def test_fit_validation():
    H = np.random.default_rng(0).standard_normal((10, 2))
    with pytest.raises(cl.ClusterError):
        cl.fit(H, 2, beta=100.0, T=0, seed=0)
    with pytest.raises(cl.ClusterError):
        cl.update_assignments(H, H[:2], beta=-1.0)
