"""Citation-graph analytics for predicting award-winning papers.

The library walks a citation corpus into rooted bounded-depth
subgraphs, derives topological and textual features from them, and
trains a small perceptron stack whose mixed output scores a paper's
award chances at publication time.
"""

from .corpus import CorpusError, PaperRecord, intern_id, load_corpus
from .graph import (UNREACHABLE, VIRTUAL_ROOT, CitationGraph, DistanceStrata,
                    SnapshotError, Subgraph, build_graph, distances_to_winners,
                    extract_subgraph, extract_virtual_subgraph, load_snapshot,
                    save_snapshot)
from .metrics import (ConfusionMatrix, ScoredSample, best_threshold_f1,
                      confusion, f1_by_year, f1_macro, feature_distributions,
                      pr_auc, pr_curve, roc_auc, roc_curve)
from .models import (LabeledDataset, MixedModel, MlpParams, Standardizer,
                     TrainConfig, forward, gradient, init_params, load_model,
                     predict, save_model, train, train_mixed,
                     train_simple_perceptron)
from .sampling import sampling_weights, stratified_sample
from .textsim import (EmbeddingStore, cosine_similarity, dbscan,
                      load_embeddings, phi_score, theta_score,
                      write_embeddings)
from .topo import (FEATURE_NAMES, TopoFeatures, compute_topo_features,
                   features_for_roots, read_feature_csv, write_feature_csv)

__version__ = "0.1.0"

__all__ = [
    "CorpusError", "PaperRecord", "intern_id", "load_corpus",
    "UNREACHABLE", "VIRTUAL_ROOT", "CitationGraph", "DistanceStrata",
    "SnapshotError", "Subgraph", "build_graph", "distances_to_winners",
    "extract_subgraph", "extract_virtual_subgraph", "load_snapshot",
    "save_snapshot",
    "ConfusionMatrix", "ScoredSample", "best_threshold_f1", "confusion",
    "f1_by_year", "f1_macro", "feature_distributions", "pr_auc", "pr_curve",
    "roc_auc", "roc_curve",
    "LabeledDataset", "MixedModel", "MlpParams", "Standardizer",
    "TrainConfig", "forward", "gradient", "init_params", "load_model",
    "predict", "save_model", "train", "train_mixed",
    "train_simple_perceptron",
    "sampling_weights", "stratified_sample",
    "EmbeddingStore", "cosine_similarity", "dbscan", "load_embeddings",
    "phi_score", "theta_score", "write_embeddings",
    "FEATURE_NAMES", "TopoFeatures", "compute_topo_features",
    "features_for_roots", "read_feature_csv", "write_feature_csv",
    "__version__",
]
