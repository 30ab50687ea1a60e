"""Data I/O tests: binary matrix round-trips, dataset directory round-trip,
loader diagnostics with line numbers, synthetic generator statistics."""

import os

import numpy as np
import pytest

from hginfomax import (DatasetBundle, SyntheticSpec, generate_synthetic,
                       load_dataset, materialize_metapath, read_embeddings,
                       save_dataset, write_embeddings)
from hginfomax.dataio import DataError, read_matrix, write_matrix


def test_matrix_roundtrip_bitexact(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.standard_normal((17, 5))
    m[0, 0] = np.pi  # irrational entries must survive exactly
    path = str(tmp_path / "m.hef")
    write_matrix(m, path)
    back = read_matrix(path)
    assert back.dtype == np.float64
    assert np.array_equal(back, m)


def test_matrix_file_layout(tmp_path):
    path = str(tmp_path / "m.hef")
    write_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]), path)
    raw = open(path, "rb").read()
    assert raw[:4] == b"HEF1"
    assert int.from_bytes(raw[4:12], "little") == 2
    assert int.from_bytes(raw[12:20], "little") == 2
    assert np.frombuffer(raw[20:], dtype="<f8").tolist() == [1.0, 2.0, 3.0, 4.0]


def test_matrix_error_cases(tmp_path):
    bad = tmp_path / "bad.hef"
    bad.write_bytes(b"NOPE" + b"\0" * 16)
    with pytest.raises(DataError, match="bad magic"):
        read_matrix(str(bad))
    trunc = tmp_path / "trunc.hef"
    write_matrix(np.ones((4, 4)), str(trunc))
    trunc.write_bytes(trunc.read_bytes()[:-8])
    with pytest.raises(DataError, match="truncated"):
        read_matrix(str(trunc))
    with pytest.raises(DataError):
        write_matrix(np.ones(3), str(tmp_path / "x.hef"))


def test_csv_matrix_alternative(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1.5,2.0\n-3.25,4.0\n")
    assert np.array_equal(read_matrix(str(p)), [[1.5, 2.0], [-3.25, 4.0]])


def test_embeddings_roundtrip_with_labels(tmp_path):
    rng = np.random.default_rng(1)
    H = rng.standard_normal((8, 3))
    labels = np.array([0, 1, 2, 0, 1, 2, 0, 1])
    path = str(tmp_path / "emb.hef")
    write_embeddings(H, labels, path)
    H2, labels2 = read_embeddings(path)
    assert np.array_equal(H, H2)
    assert np.array_equal(labels, labels2)
    write_embeddings(H, None, str(tmp_path / "nolab.hef"))
    _, none_labels = read_embeddings(str(tmp_path / "nolab.hef"))
    assert none_labels is None
    with pytest.raises(DataError):
        write_embeddings(H, labels[:3], str(tmp_path / "bad.hef"))


def test_dataset_roundtrip(tmp_path):
    bundle = generate_synthetic(SyntheticSpec(n_target=40, n_aux=20, seed=3))
    path = str(tmp_path / "ds")
    save_dataset(bundle, path)
    back = load_dataset(path, normalize_features=False)
    g1, g2 = bundle.graph, back.graph
    assert g1.node_count_per_type == g2.node_count_per_type
    assert g2.target_type == "target"
    for name in g1.relations:
        assert sorted(g1.relations[name].edges) == sorted(g2.relations[name].edges)
    assert [s.name for s in back.metapaths] == [s.name for s in bundle.metapaths]
    assert [s.relation_chain for s in back.metapaths] == \
           [s.relation_chain for s in bundle.metapaths]
    assert np.array_equal(back.features, bundle.features)
    assert np.array_equal(back.labels, bundle.labels)
    # adjacency identical after the round trip
    for s1, s2 in zip(bundle.metapaths, back.metapaths):
        a1 = materialize_metapath(g1, s1).adjacency
        a2 = materialize_metapath(g2, s2).adjacency
        assert np.array_equal(a1, a2)


def test_feature_normalization_flag(tmp_path):
    bundle = generate_synthetic(SyntheticSpec(n_target=30, n_aux=15, seed=4))
    path = str(tmp_path / "ds")
    save_dataset(bundle, path)
    norm = load_dataset(path, normalize_features=True)
    raw = load_dataset(path, normalize_features=False)
    assert np.allclose(np.linalg.norm(norm.features, axis=1), 1.0, atol=1e-12)
    assert not np.allclose(np.linalg.norm(raw.features, axis=1), 1.0, atol=1e-3)


def _write_dataset(tmp_path, nodes, edges, metapaths, features="1.0\n2.0\n"):
    (tmp_path / "nodes.tsv").write_text(nodes)
    (tmp_path / "edges.tsv").write_text(edges)
    (tmp_path / "metapaths.txt").write_text(metapaths)
    if features is not None:
        (tmp_path / "features.csv").write_text(features)


def test_loader_diagnostics_carry_line_numbers(tmp_path):
    _write_dataset(tmp_path,
                   "p1\tP\np2\tP\na1\tA\n",
                   "p1\tPA\ta1\np2\tPA\ta1\n",
                   "PAP=PA,~PA\n")
    bundle = load_dataset(str(tmp_path))
    assert bundle.graph.target_count == 2

    (tmp_path / "nodes.tsv").write_text("p1\tP\np1\tP\n")
    with pytest.raises(DataError, match=r"nodes\.tsv:2: duplicate node id 'p1'"):
        load_dataset(str(tmp_path))

    (tmp_path / "nodes.tsv").write_text("p1\tP\np2\tP\na1\tA\n")
    (tmp_path / "edges.tsv").write_text("p1\tPA\ta1\np1\tPA\tzz\n")
    with pytest.raises(DataError, match=r"edges\.tsv:2: dangling endpoint 'zz'"):
        load_dataset(str(tmp_path))

    (tmp_path / "edges.tsv").write_text("p1\tPA\ta1\na1\tPA\tp1\n")
    with pytest.raises(DataError, match=r"edges\.tsv:2: relation 'PA' mixes"):
        load_dataset(str(tmp_path))

    (tmp_path / "edges.tsv").write_text("p1\tPA\ta1\np2\tPA\n")
    with pytest.raises(DataError, match=r"edges\.tsv:2: expected 3 fields"):
        load_dataset(str(tmp_path))

    (tmp_path / "edges.tsv").write_text("p1\tPA\ta1\np2\tPA\ta1\n")
    (tmp_path / "metapaths.txt").write_text("PAP=PA,~PA\nbroken line\n")
    with pytest.raises(DataError, match=r"metapaths\.txt:2"):
        load_dataset(str(tmp_path))


def test_loader_missing_files_and_shape_mismatch(tmp_path):
    with pytest.raises(DataError, match="missing file"):
        load_dataset(str(tmp_path))
    _write_dataset(tmp_path,
                   "p1\tP\np2\tP\na1\tA\n",
                   "p1\tPA\ta1\np2\tPA\ta1\n",
                   "PAP=PA,~PA\n",
                   features="1.0\n")  # 1 row for 2 target nodes
    with pytest.raises(DataError, match="feature rows"):
        load_dataset(str(tmp_path))
    os.remove(tmp_path / "features.csv")
    with pytest.raises(DataError, match="missing file"):
        load_dataset(str(tmp_path))


def test_loader_labels_validation(tmp_path):
    _write_dataset(tmp_path,
                   "p1\tP\np2\tP\na1\tA\n",
                   "p1\tPA\ta1\np2\tPA\ta1\n",
                   "PAP=PA,~PA\n")
    (tmp_path / "labels.tsv").write_text("p1\t0\na1\t1\n")
    with pytest.raises(DataError, match=r"labels\.tsv:2"):
        load_dataset(str(tmp_path))
    (tmp_path / "labels.tsv").write_text("p1\t0\np2\t1\n")
    assert load_dataset(str(tmp_path)).labels.tolist() == [0, 1]


def test_synthetic_spec_validation():
    with pytest.raises(DataError):
        SyntheticSpec(p_in=0.01, p_out=0.05)
    with pytest.raises(DataError):
        SyntheticSpec(n_comm=0)
    with pytest.raises(DataError):
        SyntheticSpec(feature_dim=2, n_comm=3)


def test_synthetic_structure_and_labels():
    spec = SyntheticSpec(n_target=90, n_aux=30, n_comm=3, seed=0)
    b = generate_synthetic(spec)
    assert b.graph.target_count == 90
    assert set(b.graph.node_count_per_type) == {"target", "aux1", "aux2"}
    assert np.array_equal(np.bincount(b.labels), [30, 30, 30])
    assert np.all(np.diff(b.labels) >= 0)  # contiguous community blocks
    assert len(b.metapaths) == 2
    assert b.metapaths[0].relation_chain == ("TA1", "~TA1")
    # features: one-hot community indicator plus noise
    means = np.stack([b.features[b.labels == k].mean(axis=0) for k in range(3)])
    assert np.allclose(np.argmax(means, axis=1), [0, 1, 2])


def test_synthetic_edge_count_matches_binomial_moment():
    spec = SyntheticSpec(n_target=200, n_aux=100, n_comm=2, p_in=0.1,
                         p_out=0.01, seed=5)
    b = generate_synthetic(spec)
    # expected edges per relation: sum of per-pair Bernoulli means
    n_within = 2 * 100 * 50
    n_cross = 200 * 100 - n_within
    mean = n_within * 0.1 + n_cross * 0.01
    sd = np.sqrt(n_within * 0.1 * 0.9 + n_cross * 0.01 * 0.99)
    for rel in ("TA1", "TA2"):
        count = len(b.graph.relations[rel].edges)
        assert abs(count - mean) < 5 * sd


def test_synthetic_pout_zero_is_block_diagonal():
    spec = SyntheticSpec(n_target=60, n_aux=30, n_comm=3, p_in=0.3,
                         p_out=0.0, seed=1)
    b = generate_synthetic(spec)
    comm_t = b.labels
    comm_a = (np.arange(30) * 3) // 30
    for rel in ("TA1", "TA2"):
        for s, d in b.graph.relations[rel].edges:
            assert comm_t[s] == comm_a[d]
    # meta-path graphs then connect only within communities
    for spec_mp in b.metapaths:
        mpg = materialize_metapath(b.graph, spec_mp)
        i, j = np.nonzero(mpg.adjacency)
        assert np.all(comm_t[i] == comm_t[j])


def test_synthetic_within_community_edge_fraction():
    # with the default parameters most meta-path edges stay within a
    # community; cross edges arise at rate ~p_in*p_out per shared aux node
    # (empirically ~0.67 of edges are within-community over these seeds)
    for seed in range(5):
        b = generate_synthetic(SyntheticSpec(seed=seed))
        mpg = materialize_metapath(b.graph, b.metapaths[0])
        i, j = np.nonzero(np.triu(mpg.adjacency))
        frac = np.mean(b.labels[i] == b.labels[j])
        assert frac > 0.6
    # a chance-level split would sit near 1/n_comm
    assert frac > 2 / 3 * 1.5 * (1 / 3)


def test_synthetic_determinism():
    a = generate_synthetic(SyntheticSpec(seed=9))
    b = generate_synthetic(SyntheticSpec(seed=9))
    assert np.array_equal(a.features, b.features)
    assert a.graph.relations["TA1"].edges == b.graph.relations["TA1"].edges
    c = generate_synthetic(SyntheticSpec(seed=10))
    assert not np.array_equal(a.features, c.features)
