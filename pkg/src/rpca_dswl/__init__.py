"""Robust PCA by discriminant sample-weight learning, with baselines and evaluation tools."""

from .baselines import fit_l2p_pca, fit_pca, fit_pca_l1, fit_rpca_om
from .data import (
    LabeledDataset,
    ToySpec,
    contaminate_images,
    contaminate_tabular,
    gen_gaussian_classes,
    gen_lowrank_images,
    gen_toy,
    load_csv,
)
from .errors import RPCAError
from .evaluation import EvalReport, knn_cv_accuracy, psnr, recon_error, weight_separation
from .linalg import project, reconstruct, top_k_eigh, weighted_mean, weighted_scatter
from .solver import fit_rpca_dswl
from .types import DataMatrix, FitResult, SolverConfig, SolverTrace, SubspaceModel, WeightVector
from .weights import entropy_softmax, learn_weights, merge_weights, score_dist, score_ocs, score_pcs

__version__ = "0.1.0"

__all__ = [
    "DataMatrix", "EvalReport", "FitResult", "LabeledDataset", "RPCAError", "SolverConfig", "SolverTrace",
    "ToySpec", "contaminate_images", "contaminate_tabular", "gen_gaussian_classes", "gen_lowrank_images",
    "gen_toy", "load_csv",
    "SubspaceModel", "WeightVector", "entropy_softmax", "fit_l2p_pca", "fit_pca", "fit_pca_l1",
    "fit_rpca_dswl", "fit_rpca_om", "knn_cv_accuracy", "learn_weights", "merge_weights", "project",
    "psnr", "recon_error", "reconstruct", "score_dist", "score_ocs", "score_pcs", "top_k_eigh",
    "weight_separation", "weighted_mean", "weighted_scatter",
]
