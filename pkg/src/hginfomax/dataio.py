"""Dataset loading/writing and the synthetic planted-community generator.

On-disk layout of a dataset directory:
  nodes.tsv      <external_id>\t<type>
  edges.tsv      <src_external_id>\t<relation>\t<dst_external_id>
  metapaths.txt  NAME=rel1,rel2,...   ('~' prefix = reversed relation)
  features.hef   binary: magic HEF1, two LE uint64 dims, row-major LE float64
                 (features.csv accepted as a plain-text alternative)
  labels.tsv     optional: <external_id>\t<label>   (diagnostics only)
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphError, HeteroGraph, MetaPathSpec

_MAGIC = b"HEF1"


class DataError(ValueError):
    pass


@dataclass
class DatasetBundle:
    graph: HeteroGraph
    features: np.ndarray
    metapaths: list                      # list of MetaPathSpec
    labels: np.ndarray | None = None     # per target node, diagnostics only
    id_maps: dict = field(default_factory=dict)  # type -> list of external ids


@dataclass(frozen=True)
class SyntheticSpec:
    n_target: int = 300
    n_aux: int = 150
    n_comm: int = 3
    p_in: float = 0.05
    p_out: float = 0.005
    feature_dim: int = 16
    feature_noise_sigma: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise DataError(f"need 0 <= p_out < p_in <= 1, got {self.p_out}, {self.p_in}")
        if self.n_comm > self.n_target or self.n_comm < 1:
            raise DataError("community count out of range")
        if self.feature_dim < self.n_comm:
            raise DataError("feature_dim must be >= n_comm (one-hot indicator)")


# ---------------------------------------------------------------------------
# Feature matrix I/O.

def write_matrix(m: np.ndarray, path: str):
    m = np.ascontiguousarray(m, dtype="<f8")
    if m.ndim != 2 or m.shape[0] < 1:
        raise DataError("matrix must be 2-D and non-empty")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQ", m.shape[0], m.shape[1]))
        fh.write(m.tobytes())


def read_matrix(path: str) -> np.ndarray:
    if path.endswith(".csv"):
        return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
        if data.size != rows * cols:
            raise DataError(f"{path}: truncated matrix payload")
        return data.reshape(rows, cols).copy()


def write_embeddings(H, labels, path: str):
    """Lossless float64 dump; labels (if any) go into a .labels.tsv sidecar."""
    write_matrix(np.asarray(H, dtype=np.float64), path)
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape[0] != np.asarray(H).shape[0]:
            raise DataError("labels length must match embedding row count")
        with open(path + ".labels.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for i, lab in enumerate(labels):
                fh.write(f"{i}\t{lab}\n")


def read_embeddings(path: str):
    H = read_matrix(path)
    labels = None
    side = path + ".labels.tsv"
    if os.path.exists(side):
        labels = np.array([int(line.rstrip("\n").split("\t")[1])
                           for line in open(side, encoding="utf-8")])
    return H, labels


# ---------------------------------------------------------------------------
# Dataset directory loading/writing.

def _read_tsv(path, n_fields):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != n_fields:
                raise DataError(f"{path}:{lineno}: expected {n_fields} fields, got {len(parts)}")
            rows.append((lineno, parts))
    return rows


def load_dataset(path: str, normalize_features: bool = True) -> DatasetBundle:
    """Load and validate a dataset directory; external ids are remapped to
    contiguous per-type 0-based ids (mapping kept in the bundle)."""
    for fname in ("nodes.tsv", "edges.tsv", "metapaths.txt"):
        if not os.path.exists(os.path.join(path, fname)):
            raise DataError(f"missing file: {os.path.join(path, fname)}")

    id_maps = {}          # type -> list of external ids
    node_type = {}        # external id -> (type, local id)
    for lineno, (ext, typ) in _read_tsv(os.path.join(path, "nodes.tsv"), 2):
        if ext in node_type:
            raise DataError(f"nodes.tsv:{lineno}: duplicate node id {ext!r}")
        ids = id_maps.setdefault(typ, [])
        node_type[ext] = (typ, len(ids))
        ids.append(ext)

    edge_rows = _read_tsv(os.path.join(path, "edges.tsv"), 3)
    if not edge_rows:
        raise DataError("edges.tsv: no edges")
    relations = {}  # name -> (src_type, dst_type, edges)
    for lineno, (src, rel, dst) in edge_rows:
        for ext in (src, dst):
            if ext not in node_type:
                raise DataError(f"edges.tsv:{lineno}: dangling endpoint {ext!r}")
        st, si = node_type[src]
        dt, di = node_type[dst]
        if rel not in relations:
            relations[rel] = (st, dt, [])
        else:
            rst, rdt, _ = relations[rel]
            if (rst, rdt) != (st, dt):
                raise DataError(f"edges.tsv:{lineno}: relation {rel!r} mixes endpoint types "
                                f"({st}-{dt} vs {rst}-{rdt})")
        relations[rel][2].append((si, di))

    metapaths = []
    with open(os.path.join(path, "metapaths.txt"), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"metapaths.txt:{lineno}: expected NAME=rel1,rel2,...")
            name, chain = line.split("=", 1)
            metapaths.append(MetaPathSpec(name.strip(),
                                          tuple(r.strip() for r in chain.split(","))))
    if not metapaths:
        raise DataError("metapaths.txt: no meta-path specs")

    # the target type is where every chain starts
    first = metapaths[0].relation_chain[0]
    rev = first.startswith("~")
    rel0 = first[1:] if rev else first
    if rel0 not in relations:
        raise DataError(f"metapaths.txt: unknown relation {rel0!r} in {metapaths[0].name!r}")
    target_type = relations[rel0][1 if rev else 0]

    counts = {t: len(ids) for t, ids in id_maps.items()}
    try:
        graph = HeteroGraph(counts,
                            [(n, st, dt, e) for n, (st, dt, e) in relations.items()],
                            target_type)
    except GraphError as exc:
        raise DataError(str(exc)) from exc

    feat_path = os.path.join(path, "features.hef")
    if not os.path.exists(feat_path):
        feat_path = os.path.join(path, "features.csv")
        if not os.path.exists(feat_path):
            raise DataError(f"missing file: {os.path.join(path, 'features.hef')} (or .csv)")
    features = read_matrix(feat_path)
    if features.shape[0] != counts[target_type]:
        raise DataError(f"feature rows ({features.shape[0]}) != {target_type!r} "
                        f"node count ({counts[target_type]})")
    if normalize_features:
        norms = np.linalg.norm(features, axis=1, keepdims=True)
        features = features / np.maximum(norms, 1e-12)

    labels = None
    lab_path = os.path.join(path, "labels.tsv")
    if os.path.exists(lab_path):
        labels = np.full(counts[target_type], -1, dtype=np.int64)
        for lineno, (ext, lab) in _read_tsv(lab_path, 2):
            if ext not in node_type or node_type[ext][0] != target_type:
                raise DataError(f"labels.tsv:{lineno}: {ext!r} is not a {target_type!r} node")
            labels[node_type[ext][1]] = int(lab)

    return DatasetBundle(graph=graph, features=features, metapaths=metapaths,
                         labels=labels, id_maps=id_maps)


def save_dataset(bundle: DatasetBundle, path: str):
    os.makedirs(path, exist_ok=True)
    g = bundle.graph
    id_maps = bundle.id_maps or {
        t: [f"{t}{i}" for i in range(n)] for t, n in g.node_count_per_type.items()}
    with open(os.path.join(path, "nodes.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for t, ids in id_maps.items():
            for ext in ids:
                fh.write(f"{ext}\t{t}\n")
    with open(os.path.join(path, "edges.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for rel in g.relations.values():
            for s, d in rel.edges:
                fh.write(f"{id_maps[rel.src_type][s]}\t{rel.name}\t{id_maps[rel.dst_type][d]}\n")
    with open(os.path.join(path, "metapaths.txt"), "w", encoding="utf-8", newline="\n") as fh:
        for spec in bundle.metapaths:
            fh.write(f"{spec.name}={','.join(spec.relation_chain)}\n")
    write_matrix(bundle.features, os.path.join(path, "features.hef"))
    if bundle.labels is not None:
        with open(os.path.join(path, "labels.tsv"), "w", encoding="utf-8", newline="\n") as fh:
            for i, lab in enumerate(bundle.labels):
                fh.write(f"{id_maps[g.target_type][i]}\t{lab}\n")


# ---------------------------------------------------------------------------
# Synthetic planted-community generator.

def generate_synthetic(spec: SyntheticSpec) -> DatasetBundle:
    """Planted-partition bipartite attachments: two independent target-aux
    relations (hence two meta-paths), balanced contiguous community blocks,
    one-hot community features plus Gaussian noise."""
    rng = np.random.default_rng(spec.seed)
    nt, na, nc = spec.n_target, spec.n_aux, spec.n_comm
    comm_t = (np.arange(nt) * nc) // nt
    comm_a = (np.arange(na) * nc) // na
    same = comm_t[:, None] == comm_a[None, :]
    prob = np.where(same, spec.p_in, spec.p_out)

    relations = []
    metapaths = []
    for rel_idx, rel in enumerate(("TA1", "TA2")):
        draw = rng.random((nt, na)) < prob
        edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(draw))]
        relations.append((rel, "target", f"aux{rel_idx + 1}", edges))
        metapaths.append(MetaPathSpec(f"M{rel_idx + 1}", (rel, f"~{rel}")))

    graph = HeteroGraph({"target": nt, "aux1": na, "aux2": na}, relations, "target")
    features = np.zeros((nt, spec.feature_dim))
    features[np.arange(nt), comm_t] = 1.0
    features += rng.normal(0.0, spec.feature_noise_sigma, size=features.shape)
    return DatasetBundle(graph=graph, features=features, metapaths=metapaths,
                         labels=comm_t.astype(np.int64),
                         id_maps={"target": [f"t{i}" for i in range(nt)],
                                  "aux1": [f"a{i}" for i in range(na)],
                                  "aux2": [f"b{i}" for i in range(na)]})
