"""Infomax objective and training loop.

The discriminator scores (node, context) pairs with sigmoid(h . context);
the global term contrasts real vs corrupted nodes against the graph summary,
the cluster term against per-node cluster summaries. The total loss is the
theta-weighted affine combination and training maximizes it (Adam on -L).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import clustering
from .corruption import corrupt
from .encoder import EncoderOutput, ModelParams, encode_on_tape, register_params

_CLAMP = 1e-12


class TrainAbort(RuntimeError):
    pass


@dataclass
class TrainConfig:
    theta: float = 0.5
    embed_dim: int = 16
    heads: int = 4
    d_att: int = 128
    clusters: int = 3
    beta: float = 100.0
    kmeans_iters: int = 10
    learning_rate: float = 1e-3
    max_epochs: int = 1000
    patience: int = 20
    seed: int = 0
    activation: str = "elu"
    eq8_literal: bool = False
    bilinear: bool = False

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [0,1], got {self.theta}")
        if self.embed_dim % self.heads != 0:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.clusters < 1:
            raise ValueError("clusters must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def _sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def discriminate(h, context, bilinear=None) -> float:
    """sigmoid(h . context), optionally through a learned d x d matrix."""
    h = np.asarray(h, dtype=np.float64).ravel()
    context = np.asarray(context, dtype=np.float64).ravel()
    if h.shape != context.shape:
        raise ad.ShapeError(f"dimension mismatch: {h.shape} vs {context.shape}")
    if bilinear is not None:
        context = bilinear @ context
    return float(_sigmoid(h @ context))


def _clamped_log(p):
    return np.log(np.clip(p, _CLAMP, 1.0 - _CLAMP))


def loss_global(H, H_fake, s, bilinear=None) -> float:
    """(1/2N)(sum log D(h_i, s) + sum log(1 - D(h~_i, s))); always <= 0."""
    H = np.asarray(H, dtype=np.float64)
    Hf = np.asarray(H_fake, dtype=np.float64)
    if H.shape != Hf.shape:
        raise ad.ShapeError(f"real/fake shapes differ: {H.shape} vs {Hf.shape}")
    sv = np.asarray(s, dtype=np.float64).reshape(-1)
    if bilinear is not None:
        sv = bilinear @ sv
    n = H.shape[0]
    pos = _sigmoid(H @ sv)
    neg = _sigmoid(Hf @ sv)
    return float((_clamped_log(pos).sum() + _clamped_log(1.0 - np.clip(neg, _CLAMP, 1 - _CLAMP)).sum()) / (2 * n))


def loss_cluster(H, H_fake, Z, bilinear=None) -> float:
    """Same form with per-node cluster summaries; negatives pair corrupted
    nodes with the real graph's z_i at the same index."""
    H = np.asarray(H, dtype=np.float64)
    Hf = np.asarray(H_fake, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if H.shape != Hf.shape or H.shape != Z.shape:
        raise ad.ShapeError(f"shapes differ: {H.shape}, {Hf.shape}, {Z.shape}")
    Zc = Z @ bilinear.T if bilinear is not None else Z
    n = H.shape[0]
    pos = _sigmoid(np.sum(H * Zc, axis=1))
    neg = _sigmoid(np.sum(Hf * Zc, axis=1))
    return float((_clamped_log(pos).sum() + _clamped_log(1.0 - np.clip(neg, _CLAMP, 1 - _CLAMP)).sum()) / (2 * n))


def total_loss(l_g: float, l_c: float, theta: float) -> float:
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must be in [0,1]")
    return theta * l_g + (1.0 - theta) * l_c


# ---------------------------------------------------------------------------
# Tape-side loss construction.

def _pair_scores_node(tape, h_node, ctx_node, per_row, bilinear_node=None):
    """Discriminator probabilities: per_row=False scores every node against a
    1 x d context; per_row=True scores row i of h against row i of ctx."""
    ctx = ctx_node
    if bilinear_node is not None:
        ctx = ad.matmul(ctx, ad.transpose(bilinear_node))
    if per_row:
        d = h_node.shape[1]
        dots = ad.matmul(ad.multiply(h_node, ctx), tape.constant(np.ones((d, 1))))
    else:
        dots = ad.matmul(h_node, ad.transpose(ctx))
    return ad.sigmoid(dots)


def _bce_node(tape, p_pos, p_neg, n):
    pos_term = ad.reduce_sum(ad.log(ad.clip(p_pos, _CLAMP, 1.0 - _CLAMP)))
    one_minus = ad.add_const(ad.scale(ad.clip(p_neg, _CLAMP, 1.0 - _CLAMP), -1.0), 1.0)
    neg_term = ad.reduce_sum(ad.log(one_minus))
    return ad.scale(ad.add(pos_term, neg_term), 1.0 / (2 * n))


def build_loss(tape, param_nodes, masks, features, features_fake, centers, config):
    """Record both encoder passes and the full objective on one tape.

    Cluster centers enter as constants (refit outside, from a detached copy of
    H); assignments are recomputed on-tape from the live representations so
    the cluster term stays trainable. Returns (L node, L_g node, L_c node,
    real EncoderOutput, fake EncoderOutput).
    """
    x = tape.constant(np.asarray(features, dtype=np.float64))
    x_fake = tape.constant(np.asarray(features_fake, dtype=np.float64))
    real = encode_on_tape(tape, param_nodes, masks, x, config.activation)
    fake = encode_on_tape(tape, param_nodes, masks, x_fake, config.activation)
    h, hf = real.nodes["fused"], fake.nodes["fused"]
    n = h.shape[0]
    bil = param_nodes.get("disc.M")
    z = clustering.summaries_node(tape, h, centers, config.beta,
                                  literal_sign=config.eq8_literal)
    l_g = _bce_node(tape,
                    _pair_scores_node(tape, h, real.nodes["summary"], False, bil),
                    _pair_scores_node(tape, hf, real.nodes["summary"], False, bil), n)
    l_c = _bce_node(tape,
                    _pair_scores_node(tape, h, z, True, bil),
                    _pair_scores_node(tape, hf, z, True, bil), n)
    total = ad.add(ad.scale(l_g, config.theta), ad.scale(l_c, 1.0 - config.theta))
    return total, l_g, l_c, real, fake


# ---------------------------------------------------------------------------
# Optimizer.

class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m, self.v = {}, {}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in params.items():
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m += (1 - b1) * (g - m)
            v += (1 - b2) * (g * g - v)
            mh = m / (1 - b1 ** self.t)
            vh = v / (1 - b2 ** self.t)
            p -= self.lr * mh / (np.sqrt(vh) + self.eps)


# ---------------------------------------------------------------------------
# Training loop.

@dataclass
class TrainResult:
    params: ModelParams
    output: EncoderOutput
    log: list = field(default_factory=list)  # (epoch, L_g, L_c, L)
    cluster_state: clustering.ClusterState | None = None


def _epoch_seed(seed, epoch):
    return (seed * 1_000_003 + epoch) % (2 ** 63)


def train(mpgs, features, config: TrainConfig) -> TrainResult:
    """Full-graph infomax training (one fresh corruption per epoch)."""
    features = np.asarray(features, dtype=np.float64)
    if not mpgs:
        raise ValueError("need at least one meta-path")
    masks = [m.mask_with_self_loops() for m in mpgs]
    params = ModelParams.init(len(mpgs), features.shape[1], config.embed_dim,
                              config.heads, config.d_att, config.seed,
                              bilinear=config.bilinear)
    opt = Adam(lr=config.learning_rate)
    best_loss = -np.inf
    best_params = params.copy()
    wait = 0
    log = []
    for epoch in range(config.max_epochs):
        sample = corrupt(features, _epoch_seed(config.seed, epoch))
        tape = ad.Tape()
        pnodes = register_params(tape, params)
        # refit clusters each epoch from a detached copy of the live H
        probe = encode_on_tape(tape, pnodes, masks, tape.constant(features),
                               config.activation)
        state = clustering.fit(probe.fused.copy(), config.clusters, config.beta,
                               config.kmeans_iters, config.seed,
                               literal_sign=config.eq8_literal)
        total, l_g, l_c, real, fake = build_loss(
            tape, pnodes, masks, features, sample.shuffled_features,
            state.centers, config)
        loss = total.value[0, 0]
        if not np.isfinite(loss):
            raise TrainAbort(f"non-finite loss at epoch {epoch}")
        log.append((epoch, float(l_g.value[0, 0]), float(l_c.value[0, 0]), float(loss)))
        if loss > best_loss + 1e-5:
            best_loss = loss
            best_params = params.copy()
            wait = 0
        else:
            wait += 1
            if wait >= config.patience:
                break
        grads = ad.backward(tape, ad.scale(total, -1.0))
        opt.step(params.to_dict(), grads)

    # final representations with the best parameters
    tape = ad.Tape()
    pnodes = register_params(tape, best_params)
    out = encode_on_tape(tape, pnodes, masks, tape.constant(features), config.activation)
    state = clustering.fit(out.fused.copy(), config.clusters, config.beta,
                           config.kmeans_iters, config.seed,
                           literal_sign=config.eq8_literal)
    return TrainResult(params=best_params, output=out, log=log, cluster_state=state)
