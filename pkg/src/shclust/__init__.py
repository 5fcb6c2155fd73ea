"""Sparse hierarchical clustering with gap-gated multilayer splitting."""
__version__ = "0.1.0"

from ._accel import backend_name
from .dissimilarity import DataMatrix, aggregate_dissim, build_transformed_matrix, per_feature_dissim
from .hclust import Dendrogram, agglomerate, cut, to_newick
from .multilayer import MultilayerResult, default_reference_k, multilayer_cluster
from .pipeline import (
    PreprocessConfig, export, ingest, knn_impute, preprocess_microarray, top_variance_features,
)
from .selection import (
    AllRanksScreenedError, NoCandidateSizeError, SelectionError, prune_and_choose,
    select_auto_size, select_fixed_size,
)
from .simgen import gen_example1, gen_sparse_model
from .spc import lambda_search, pmd_rank_one, spc_rank_k
from .stats import cer, gap_split_decision, selection_rate, silhouette
from .wtshc import wtshc_auto_size, wtshc_fit, wtshc_fixed_size

__all__ = [
    "AllRanksScreenedError", "DataMatrix", "Dendrogram", "MultilayerResult",
    "NoCandidateSizeError", "PreprocessConfig", "SelectionError", "agglomerate",
    "aggregate_dissim", "backend_name", "build_transformed_matrix", "cer", "cut",
    "default_reference_k", "export", "gap_split_decision", "gen_example1", "gen_sparse_model",
    "ingest", "knn_impute", "lambda_search", "multilayer_cluster", "per_feature_dissim",
    "pmd_rank_one", "preprocess_microarray", "prune_and_choose", "select_auto_size",
    "select_fixed_size", "selection_rate", "silhouette", "spc_rank_k", "to_newick",
    "top_variance_features", "wtshc_auto_size", "wtshc_fit", "wtshc_fixed_size",
]
