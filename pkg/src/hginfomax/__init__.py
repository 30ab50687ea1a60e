"""Unsupervised heterogeneous-graph node embeddings via cluster-level infomax."""

from .graph import (GraphError, HeteroGraph, MetaPathGraph, MetaPathSpec,
                    materialize_metapath, neighbors)
from .corruption import CorruptedSample, corrupt
from .encoder import (EncoderOutput, ModelParams, encode, fuse, gat_forward,
                      readout, semantic_importance, semantic_weights)
from .clustering import (ClusterState, cluster_summaries, fit, init_centers,
                         update_assignments, update_centers)
from .objective import (TrainConfig, TrainResult, discriminate, loss_cluster,
                        loss_global, total_loss, train)
from .evaluation import (EdgeSplit, Metrics, auc, average_precision, pca_project,
                         score_edge, silhouette, split_edges)
from .dataio import (DatasetBundle, SyntheticSpec, generate_synthetic,
                     load_dataset, read_embeddings, save_dataset, write_embeddings)

__version__ = "0.1.0"
