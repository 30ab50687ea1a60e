"""Build a tiny paper/author/venue graph by hand and materialize meta-paths.

Shows how relation chains with '~' (reversed traversal) turn a typed graph
into homogeneous adjacencies over the target nodes.
"""

import numpy as np

from hginfomax import HeteroGraph, MetaPathSpec, materialize_metapath, neighbors

# Six papers, three authors, two venues. 'PA' = paper wrote-by author,
# 'PV' = paper published-at venue.
graph = HeteroGraph(
    node_count_per_type={"paper": 6, "author": 3, "venue": 2},
    relations=[
        ("PA", "paper", "author",
         [(0, 0), (1, 0), (1, 1), (2, 1), (3, 2), (4, 2), (5, 2)]),
        ("PV", "paper", "venue",
         [(0, 0), (1, 0), (2, 0), (3, 1), (4, 1), (5, 1)]),
    ],
    target_type="paper",
)

print("node types:", graph.node_count_per_type)
print("target count:", graph.target_count)

# PAP: papers sharing an author; PVP: papers sharing a venue
for name, chain in [("PAP", ("PA", "~PA")), ("PVP", ("PV", "~PV"))]:
    mpg = materialize_metapath(graph, MetaPathSpec(name, chain))
    print(f"\n{name} adjacency ({'/'.join(chain)}):")
    print(mpg.adjacency.astype(int))
    for p in range(graph.target_count):
        print(f"  neighbors({p}) = {neighbors(mpg, p)}")

# the two meta-paths disagree about which papers are related: that gap is
# exactly what the semantic attention layer learns to weigh
pap = materialize_metapath(graph, MetaPathSpec("PAP", ("PA", "~PA"))).adjacency
pvp = materialize_metapath(graph, MetaPathSpec("PVP", ("PV", "~PV"))).adjacency
print("\nedges only in PAP:", int(np.sum(pap & ~pvp)) // 2)
print("edges only in PVP:", int(np.sum(pvp & ~pap)) // 2)
print("edges in both:    ", int(np.sum(pap & pvp)) // 2)
