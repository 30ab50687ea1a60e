"""Reverse-mode automatic differentiation over dense float64 matrices.

Everything is a 2-D array. Operations execute eagerly and are recorded on a
Tape; backward() replays the tape in reverse to accumulate gradients for all
registered parameters.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when an operation receives incompatible matrix shapes."""


class Node:
    __slots__ = ("tape", "idx", "op", "parents", "value", "bwd")

    def __init__(self, tape, idx, op, parents, value, bwd):
        self.tape = tape
        self.idx = idx
        self.op = op
        self.parents = parents
        self.value = value
        self.bwd = bwd  # g -> list of gradients, one per parent (or None)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node({self.idx}: {self.op} {self.value.shape})"


class Tape:
    """Ordered record of primitive operations plus a parameter registry."""

    def __init__(self):
        self.nodes = []
        self.params = {}  # name -> Node

    def record(self, op, parents, value, bwd):
        value = np.ascontiguousarray(value, dtype=np.float64)
        if value.ndim != 2:
            raise ShapeError(f"op {op!r} at index {len(self.nodes)}: "
                             f"result must be 2-D, got shape {value.shape}")
        if not np.all(np.isfinite(value)):
            raise FloatingPointError(
                f"op {op!r} at index {len(self.nodes)} produced non-finite values")
        node = Node(self, len(self.nodes), op, parents, value, bwd)
        self.nodes.append(node)
        return node

    def constant(self, value):
        return self.record("const", [], np.atleast_2d(np.asarray(value, dtype=np.float64)), None)

    def param(self, name, value):
        if name in self.params:
            raise ValueError(f"parameter {name!r} already registered")
        node = self.record("param", [], np.atleast_2d(np.asarray(value, dtype=np.float64)), None)
        self.params[name] = node
        return node


def _check(cond, op, idx, msg):
    if not cond:
        raise ShapeError(f"op {op!r} at index {idx}: {msg}")


def matmul(a: Node, b: Node) -> Node:
    t = a.tape
    _check(a.shape[1] == b.shape[0], "matmul", len(t.nodes),
           f"inner dims differ: {a.shape} x {b.shape}")

    def bwd(g):
        return [g @ b.value.T, a.value.T @ g]
    return t.record("matmul", [a, b], a.value @ b.value, bwd)


def add(a: Node, b: Node) -> Node:
    t = a.tape
    _check(a.shape == b.shape, "add", len(t.nodes), f"shapes differ: {a.shape} vs {b.shape}")

    def bwd(g):
        return [g, g]
    return t.record("add", [a, b], a.value + b.value, bwd)


def multiply(a: Node, b: Node) -> Node:
    t = a.tape
    _check(a.shape == b.shape, "multiply", len(t.nodes), f"shapes differ: {a.shape} vs {b.shape}")

    def bwd(g):
        return [g * b.value, g * a.value]
    return t.record("multiply", [a, b], a.value * b.value, bwd)


def scalar_mul(s: Node, m: Node) -> Node:
    """Multiply matrix m by a 1x1 tape value s."""
    t = s.tape
    _check(s.shape == (1, 1), "scalar_mul", len(t.nodes), f"scalar must be 1x1, got {s.shape}")

    def bwd(g):
        return [np.array([[np.sum(g * m.value)]]), g * s.value[0, 0]]
    return t.record("scalar_mul", [s, m], s.value[0, 0] * m.value, bwd)


def concat_cols(nodes) -> Node:
    nodes = list(nodes)
    t = nodes[0].tape
    rows = nodes[0].shape[0]
    _check(all(n.shape[0] == rows for n in nodes), "concat_cols", len(t.nodes),
           f"row counts differ: {[n.shape for n in nodes]}")
    widths = [n.shape[1] for n in nodes]
    offsets = np.cumsum([0] + widths)

    def bwd(g):
        return [g[:, offsets[i]:offsets[i + 1]] for i in range(len(nodes))]
    return t.record("concat_cols", nodes, np.concatenate([n.value for n in nodes], axis=1), bwd)


def transpose(a: Node) -> Node:
    def bwd(g):
        return [g.T]
    return a.tape.record("transpose", [a], a.value.T, bwd)


def gather_rows(a: Node, idx) -> Node:
    idx = np.asarray(idx, dtype=np.intp)
    t = a.tape
    _check(idx.size == 0 or (idx.min() >= 0 and idx.max() < a.shape[0]),
           "gather_rows", len(t.nodes), f"index out of range for {a.shape[0]} rows")

    def bwd(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return [out]
    return t.record("gather_rows", [a], a.value[idx], bwd)


def reduce_sum(a: Node) -> Node:
    def bwd(g):
        return [np.full_like(a.value, g[0, 0])]
    return a.tape.record("reduce_sum", [a], np.array([[a.value.sum()]]), bwd)


def mean_rows(a: Node) -> Node:
    """Column-wise mean over rows, yielding a 1 x cols matrix."""
    n = a.shape[0]
    _check(n >= 1, "mean_rows", len(a.tape.nodes), "empty matrix")

    def bwd(g):
        return [np.repeat(g, n, axis=0) / n]
    return a.tape.record("mean_rows", [a], a.value.mean(axis=0, keepdims=True), bwd)


def scale(a: Node, c: float) -> Node:
    c = float(c)

    def bwd(g):
        return [g * c]
    return a.tape.record("scale", [a], a.value * c, bwd)


def add_const(a: Node, c) -> Node:
    c = np.asarray(c, dtype=np.float64)

    def bwd(g):
        return [g]
    return a.tape.record("add_const", [a], a.value + c, bwd)


def power(a: Node, p: float) -> Node:
    """Elementwise power with a constant exponent; entries must be positive
    for non-integer exponents."""
    p = float(p)
    val = np.power(a.value, p)

    def bwd(g):
        return [g * p * np.power(a.value, p - 1.0)]
    return a.tape.record("power", [a], val, bwd)


def clip(a: Node, lo: float, hi: float) -> Node:
    val = np.clip(a.value, lo, hi)
    inside = (a.value > lo) & (a.value < hi)

    def bwd(g):
        return [g * inside]
    return a.tape.record("clip", [a], val, bwd)


def log(a: Node) -> Node:
    _check(np.all(a.value > 0), "log", len(a.tape.nodes), "non-positive input")
    def bwd(g):
        return [g / a.value]
    return a.tape.record("log", [a], np.log(a.value), bwd)


def sigmoid(a: Node) -> Node:
    val = _sigmoid(a.value)

    def bwd(g):
        return [g * val * (1.0 - val)]
    return a.tape.record("sigmoid", [a], val, bwd)


def tanh(a: Node) -> Node:
    val = np.tanh(a.value)

    def bwd(g):
        return [g * (1.0 - val * val)]
    return a.tape.record("tanh", [a], val, bwd)


def elu(a: Node) -> Node:
    neg = a.value <= 0
    val = np.where(neg, np.expm1(a.value), a.value)

    def bwd(g):
        return [g * np.where(neg, val + 1.0, 1.0)]
    return a.tape.record("elu", [a], val, bwd)


def leaky_relu(a: Node, slope: float = 0.2) -> Node:
    slope = float(slope)
    neg = a.value < 0
    val = np.where(neg, slope * a.value, a.value)

    def bwd(g):
        return [g * np.where(neg, slope, 1.0)]
    return a.tape.record("leaky_relu", [a], val, bwd)


def masked_softmax(a: Node, mask) -> Node:
    """Row softmax restricted to positions where mask != 0; masked positions
    come out exactly 0. Rows with an empty mask come out all-zero."""
    mask = np.asarray(mask, dtype=bool)
    t = a.tape
    _check(mask.shape == a.shape, "masked_softmax", len(t.nodes),
           f"mask shape {mask.shape} != input shape {a.shape}")
    neg_inf = np.where(mask, a.value, -np.inf)
    rowmax = np.max(neg_inf, axis=1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)  # fully-masked rows
    ex = np.exp(np.where(mask, a.value - rowmax, -np.inf), where=mask, out=np.zeros_like(a.value))
    denom = ex.sum(axis=1, keepdims=True)
    denom = np.where(denom > 0, denom, 1.0)
    val = ex / denom

    def bwd(g):
        dot = np.sum(g * val, axis=1, keepdims=True)
        return [val * (g - dot)]
    return t.record("masked_softmax", [a], val, bwd)


def evaluate(tape: Tape, root: Node) -> np.ndarray:
    """Forward value of a recorded node (execution is eager, so this is a copy)."""
    if root.tape is not tape:
        raise ValueError("node does not belong to this tape")
    return root.value.copy()


def backward(tape: Tape, root: Node):
    """Gradients of a 1x1 root with respect to every registered parameter.

    Parameters the root does not depend on get zero gradients.
    """
    if root.value.shape != (1, 1):
        raise ShapeError(f"backward root must be 1x1, got {root.value.shape}")
    grads = {}  # node idx -> ndarray
    grads[root.idx] = np.ones((1, 1))
    for node in reversed(tape.nodes[: root.idx + 1]):
        if node.bwd is None:
            continue  # leaf: keep any accumulated gradient for collection
        g = grads.pop(node.idx, None)
        if g is None:
            continue
        for parent, pg in zip(node.parents, node.bwd(g)):
            if parent.idx in grads:
                grads[parent.idx] += pg
            else:
                grads[parent.idx] = pg
    out = {}
    for name, pnode in tape.params.items():
        out[name] = grads.get(pnode.idx, np.zeros_like(pnode.value))
    return out


def grad_check(build, params, eps: float = 1e-4) -> float:
    """Compare analytic gradients against central finite differences.

    build(tape, param_nodes) must return a 1x1 node. Returns the max over all
    parameter entries of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    params = [np.atleast_2d(np.asarray(p, dtype=np.float64)) for p in params]

    def run(values):
        tape = Tape()
        pnodes = [tape.param(f"p{i}", v) for i, v in enumerate(values)]
        root = build(tape, pnodes)
        if root.value.shape != (1, 1):
            raise ShapeError(f"grad_check expression must be scalar, got {root.value.shape}")
        return tape, root

    tape, root = run(params)
    analytic = backward(tape, root)
    max_err = 0.0
    for i, p in enumerate(params):
        a = analytic[f"p{i}"]
        for flat in range(p.size):
            idx = np.unravel_index(flat, p.shape)
            orig = p[idx]
            p[idx] = orig + eps
            fp = run(params)[1].value[0, 0]
            p[idx] = orig - eps
            fm = run(params)[1].value[0, 0]
            p[idx] = orig
            numeric = (fp - fm) / (2 * eps)
            err = abs(a[idx] - numeric) / max(1e-8, abs(a[idx]) + abs(numeric))
            max_err = max(max_err, err)
    return max_err


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
