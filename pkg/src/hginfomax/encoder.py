"""Hierarchical local encoder.

Per meta-path: multi-head graph attention over the meta-path neighborhood
(self-loops included), heads concatenated. Across meta-paths: semantic
attention produces a convex weighting, the fused representation is the
weighted sum, and the global summary is the sigmoid of the column mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

_ACTIVATIONS = {"elu": ad.elu, "tanh": ad.tanh, "sigmoid": ad.sigmoid}

LEAKY_SLOPE = 0.2


def _glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class ModelParams:
    """All trainable arrays, addressable by hierarchical name.

    metapath[i][k] = (W, a): per-meta-path, per-head transform (f x d_head)
    and attention vector (2*d_head x 1).
    """
    metapath: list
    w_sem: np.ndarray   # d x d_att
    b_sem: np.ndarray   # 1 x d_att
    q_sem: np.ndarray   # d_att x 1
    bilinear: np.ndarray | None = None  # d x d, optional discriminator matrix

    @classmethod
    def init(cls, n_metapaths, feature_dim, embed_dim, heads, d_att, seed,
             bilinear=False):
        if embed_dim % heads != 0:
            raise ValueError(f"embed_dim {embed_dim} not divisible by heads {heads}")
        d_head = embed_dim // heads
        rng = np.random.default_rng(seed)
        mp = []
        for _ in range(n_metapaths):
            hp = []
            for _ in range(heads):
                W = _glorot(rng, feature_dim, d_head, (feature_dim, d_head))
                a = _glorot(rng, 2 * d_head, 1, (2 * d_head, 1))
                hp.append((W, a))
            mp.append(hp)
        w_sem = _glorot(rng, embed_dim, d_att, (embed_dim, d_att))
        b_sem = np.zeros((1, d_att))
        q_sem = _glorot(rng, d_att, 1, (d_att, 1))
        bil = np.eye(embed_dim) if bilinear else None
        return cls(metapath=mp, w_sem=w_sem, b_sem=b_sem, q_sem=q_sem, bilinear=bil)

    def to_dict(self):
        d = {}
        for i, heads in enumerate(self.metapath):
            for k, (W, a) in enumerate(heads):
                d[f"mp{i}.h{k}.W"] = W
                d[f"mp{i}.h{k}.a"] = a
        d["sem.W"] = self.w_sem
        d["sem.b"] = self.b_sem
        d["sem.q"] = self.q_sem
        if self.bilinear is not None:
            d["disc.M"] = self.bilinear
        return d

    @classmethod
    def from_dict(cls, d):
        mp = []
        i = 0
        while f"mp{i}.h0.W" in d:
            heads = []
            k = 0
            while f"mp{i}.h{k}.W" in d:
                heads.append((d[f"mp{i}.h{k}.W"], d[f"mp{i}.h{k}.a"]))
                k += 1
            mp.append(heads)
            i += 1
        return cls(metapath=mp, w_sem=d["sem.W"], b_sem=d["sem.b"], q_sem=d["sem.q"],
                   bilinear=d.get("disc.M"))

    def copy(self):
        return ModelParams.from_dict({k: v.copy() for k, v in self.to_dict().items()})

    def flat(self) -> np.ndarray:
        """Flat parameter vector view (concatenation in to_dict order)."""
        return np.concatenate([v.ravel() for v in self.to_dict().values()])


def register_params(tape: ad.Tape, params: ModelParams):
    return {name: tape.param(name, value) for name, value in params.to_dict().items()}


@dataclass
class EncoderOutput:
    per_metapath: list                 # list of N x d arrays
    semantic_importances: np.ndarray   # k scalars
    semantic_weights: np.ndarray       # k scalars, sum to 1
    fused: np.ndarray                  # N x d
    summary: np.ndarray                # 1 x d
    nodes: dict = field(default_factory=dict, repr=False)  # tape node handles


def gat_forward_node(tape, x_node, mask, head_param_nodes, activation="elu"):
    """One meta-path's multi-head attention on the tape; mask is the boolean
    neighborhood matrix including self-loops."""
    act = _ACTIVATIONS[activation]
    n = x_node.shape[0]
    ones_row = tape.constant(np.ones((1, n)))
    ones_col = tape.constant(np.ones((n, 1)))
    head_outs = []
    for (W, a) in head_param_nodes:
        d_head = W.shape[1]
        wx = ad.matmul(x_node, W)                              # N x d_head
        a_src = ad.gather_rows(a, np.arange(d_head))
        a_dst = ad.gather_rows(a, np.arange(d_head, 2 * d_head))
        f_src = ad.matmul(wx, a_src)                           # N x 1
        f_dst = ad.matmul(wx, a_dst)                           # N x 1
        logits = ad.add(ad.matmul(f_src, ones_row),
                        ad.matmul(ones_col, ad.transpose(f_dst)))
        logits = ad.leaky_relu(logits, LEAKY_SLOPE)
        alpha = ad.masked_softmax(logits, mask)
        head_outs.append(act(ad.matmul(alpha, wx)))
    return head_outs[0] if len(head_outs) == 1 else ad.concat_cols(head_outs)


def semantic_importance_node(tape, h_node, w_sem, b_sem, q_sem):
    """Scalar importance of one meta-path: mean_j tanh(q^T (W_sem h_j + b))."""
    n = h_node.shape[0]
    proj = ad.add(ad.matmul(h_node, w_sem),
                  ad.matmul(tape.constant(np.ones((n, 1))), b_sem))
    return ad.mean_rows(ad.matmul(ad.tanh(proj), q_sem))      # 1 x 1


def encode_on_tape(tape, param_nodes, masks, x_node, activation="elu"):
    """Full encoder pipeline on one tape; masks are per-meta-path neighborhood
    matrices (self-loops included)."""
    k = len(masks)
    h_nodes = []
    for i, mask in enumerate(masks):
        heads = []
        j = 0
        while f"mp{i}.h{j}.W" in param_nodes:
            heads.append((param_nodes[f"mp{i}.h{j}.W"], param_nodes[f"mp{i}.h{j}.a"]))
            j += 1
        h_nodes.append(gat_forward_node(tape, x_node, mask, heads, activation))
    e_nodes = [semantic_importance_node(tape, h, param_nodes["sem.W"],
                                        param_nodes["sem.b"], param_nodes["sem.q"])
               for h in h_nodes]
    e_row = e_nodes[0] if k == 1 else ad.concat_cols(e_nodes)  # 1 x k
    s_row = ad.masked_softmax(e_row, np.ones((1, k), dtype=bool))
    s_col = ad.transpose(s_row)
    fused = None
    for i, h in enumerate(h_nodes):
        term = ad.scalar_mul(ad.gather_rows(s_col, [i]), h)
        fused = term if fused is None else ad.add(fused, term)
    summary = ad.sigmoid(ad.mean_rows(fused))
    return EncoderOutput(
        per_metapath=[h.value for h in h_nodes],
        semantic_importances=e_row.value.ravel().copy(),
        semantic_weights=s_row.value.ravel().copy(),
        fused=fused.value,
        summary=summary.value,
        nodes={"per_metapath": h_nodes, "weights": s_row, "fused": fused,
               "summary": summary},
    )


# ---------------------------------------------------------------------------
# Plain-array front ends (each runs on a private tape).

def gat_forward(mpg, features, head_params, activation="elu"):
    """Per-meta-path attention encoding: N x d array for one meta-path."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != mpg.n_nodes:
        raise ad.ShapeError(f"features have {features.shape[0]} rows, "
                            f"meta-path graph has {mpg.n_nodes} nodes")
    tape = ad.Tape()
    x = tape.constant(features)
    pnodes = [(tape.param(f"h{k}.W", W), tape.param(f"h{k}.a", a))
              for k, (W, a) in enumerate(head_params)]
    return gat_forward_node(tape, x, mpg.mask_with_self_loops(), pnodes, activation).value


def semantic_importance(h_list, w_sem, b_sem, q_sem) -> np.ndarray:
    tape = ad.Tape()
    w = tape.param("W", w_sem)
    b = tape.param("b", np.atleast_2d(b_sem))
    q = tape.param("q", q_sem)
    return np.array([semantic_importance_node(tape, tape.constant(h), w, b, q).value[0, 0]
                     for h in h_list])


def semantic_weights(e) -> np.ndarray:
    """Stable softmax over the meta-path importances."""
    e = np.asarray(e, dtype=np.float64).ravel()
    if e.size < 1 or not np.all(np.isfinite(e)):
        raise ValueError("importances must be a non-empty finite vector")
    z = np.exp(e - e.max())
    return z / z.sum()


def fuse(h_list, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if len(h_list) != weights.size:
        raise ad.ShapeError(f"{len(h_list)} matrices vs {weights.size} weights")
    if abs(weights.sum() - 1.0) > 1e-6:
        raise ValueError("weights must sum to 1")
    out = np.zeros_like(np.asarray(h_list[0], dtype=np.float64))
    for w, h in zip(weights, h_list):
        out += w * np.asarray(h, dtype=np.float64)
    return out


def readout(H) -> np.ndarray:
    """Global summary: sigmoid of the column mean, 1 x d."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] < 1:
        raise ad.ShapeError("empty representation matrix")
    m = H.mean(axis=0, keepdims=True)
    return 1.0 / (1.0 + np.exp(-m))


def encode(mpgs, features, params: ModelParams, activation="elu") -> EncoderOutput:
    """Whole pipeline on a fresh tape (values only; use encode_on_tape to train)."""
    if not mpgs:
        raise ValueError("need at least one meta-path")
    tape = ad.Tape()
    pnodes = register_params(tape, params)
    x = tape.constant(np.asarray(features, dtype=np.float64))
    masks = [m.mask_with_self_loops() for m in mpgs]
    return encode_on_tape(tape, pnodes, masks, x, activation)
