"""Typed heterogeneous graph model and meta-path adjacency materialization.

A meta-path is a chain of relation names whose composition starts and ends at
the target node type; composing the relation incidence matrices and
thresholding at >= 1 yields a binary adjacency over target nodes. A chain
element may be prefixed with '~' to traverse the relation in reverse
(e.g. PAP over a single P-A relation is "PA,~PA").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Relation:
    name: str
    src_type: str
    dst_type: str
    edges: tuple  # tuple of (src_id, dst_id), ids local to each type


class HeteroGraph:
    """Immutable typed graph: node counts per type plus typed relation edge lists."""

    def __init__(self, node_count_per_type, relations, target_type):
        self.node_count_per_type = dict(node_count_per_type)
        self.relations = {}
        self.target_type = target_type
        if target_type not in self.node_count_per_type:
            raise GraphError(f"unknown target type {target_type!r}")
        for name, src_t, dst_t, edges in relations:
            if name in self.relations:
                raise GraphError(f"duplicate relation name {name!r}")
            if src_t not in self.node_count_per_type or dst_t not in self.node_count_per_type:
                raise GraphError(f"relation {name!r} references unknown node type")
            ns, nd = self.node_count_per_type[src_t], self.node_count_per_type[dst_t]
            seen = set()
            for k, (s, d) in enumerate(edges):
                if not (0 <= s < ns and 0 <= d < nd):
                    raise GraphError(
                        f"relation {name!r} edge {k} endpoint ({s},{d}) out of range "
                        f"({src_t}:{ns}, {dst_t}:{nd})")
                if (s, d) in seen:
                    raise GraphError(f"relation {name!r} has duplicate edge ({s},{d})")
                seen.add((s, d))
            self.relations[name] = Relation(name, src_t, dst_t, tuple((int(s), int(d)) for s, d in edges))
        if len(self.node_count_per_type) + len(self.relations) <= 2:
            raise GraphError("not heterogeneous: need |node types| + |relation types| > 2")
        # global node id -> type, in type insertion order
        self.node_type_of = {}
        gid = 0
        for t, n in self.node_count_per_type.items():
            for _ in range(n):
                self.node_type_of[gid] = t
                gid += 1

    @property
    def target_count(self) -> int:
        return self.node_count_per_type[self.target_type]

    def incidence(self, rel_name: str) -> np.ndarray:
        """Dense boolean incidence matrix of one relation (src_count x dst_count)."""
        rel = self.relations[rel_name]
        m = np.zeros((self.node_count_per_type[rel.src_type],
                      self.node_count_per_type[rel.dst_type]), dtype=bool)
        for s, d in rel.edges:
            m[s, d] = True
        return m


@dataclass(frozen=True)
class MetaPathSpec:
    name: str
    relation_chain: tuple  # relation names, '~' prefix = reversed traversal

    def __post_init__(self):
        object.__setattr__(self, "relation_chain", tuple(self.relation_chain))
        if not self.relation_chain:
            raise GraphError(f"meta-path {self.name!r}: empty relation chain")


def _chain_types(graph: HeteroGraph, spec: MetaPathSpec):
    """Resolve the chain into (src_type, dst_type) hops, validating each step."""
    hops = []
    for pos, item in enumerate(spec.relation_chain):
        rev = item.startswith("~")
        name = item[1:] if rev else item
        if name not in graph.relations:
            raise GraphError(f"meta-path {spec.name!r}: unknown relation {name!r} "
                             f"at chain position {pos}")
        rel = graph.relations[name]
        src, dst = (rel.dst_type, rel.src_type) if rev else (rel.src_type, rel.dst_type)
        if hops and hops[-1][1] != src:
            raise GraphError(f"meta-path {spec.name!r}: type break at chain position {pos}: "
                             f"{hops[-1][1]} != {src}")
        hops.append((src, dst))
    if hops[0][0] != graph.target_type:
        raise GraphError(f"meta-path {spec.name!r}: chain position 0 starts at "
                         f"{hops[0][0]!r}, expected target type {graph.target_type!r}")
    if hops[-1][1] != graph.target_type:
        raise GraphError(f"meta-path {spec.name!r}: chain position {len(hops)-1} ends at "
                         f"{hops[-1][1]!r}, expected target type {graph.target_type!r}")
    return hops


class MetaPathGraph:
    """Binary symmetric adjacency over target nodes for one meta-path.

    The adjacency keeps a zero diagonal; the self-loop convention lives in
    neighbor_lists, where every node includes itself.
    """

    def __init__(self, spec: MetaPathSpec, adjacency: np.ndarray):
        adjacency = np.asarray(adjacency)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise GraphError(f"adjacency must be square, got {adjacency.shape}")
        adjacency = adjacency.astype(bool)
        if not np.array_equal(adjacency, adjacency.T):
            raise GraphError("adjacency must be symmetric")
        np.fill_diagonal(adjacency, False)
        self.spec = spec
        self.adjacency = adjacency
        self.adjacency.setflags(write=False)
        self.neighbor_lists = []
        for p in range(adjacency.shape[0]):
            nbrs = np.flatnonzero(adjacency[p])
            self.neighbor_lists.append(np.unique(np.append(nbrs, p)))

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def mask_with_self_loops(self) -> np.ndarray:
        m = self.adjacency.copy()
        np.fill_diagonal(m, True)
        return m


def materialize_metapath(graph: HeteroGraph, spec: MetaPathSpec) -> MetaPathGraph:
    """Boolean composition of the relation chain, diagonal cleared, symmetrized
    by OR with its transpose."""
    _chain_types(graph, spec)
    acc = None
    for item in spec.relation_chain:
        rev = item.startswith("~")
        m = graph.incidence(item[1:] if rev else item)
        if rev:
            m = m.T
        acc = m if acc is None else (acc @ m)
        acc = acc.astype(bool)
    adj = acc | acc.T
    np.fill_diagonal(adj, False)
    return MetaPathGraph(spec, adj)


def neighbors(mpg: MetaPathGraph, p: int):
    """Sorted neighbor ids of p including p itself."""
    if not 0 <= p < mpg.n_nodes:
        raise GraphError(f"node id {p} out of range (n={mpg.n_nodes})")
    return mpg.neighbor_lists[p].tolist()
