"""Supervised and unsupervised dimensionality reduction for SPD matrices."""

__version__ = "0.1.0"

from .core import (is_spd, mat_exp, mat_log, mat_pow, mat_sqrt, random_spd, symmetrize,
                   validate_spd)
from .divergences import (MetricKind, airm_dist, beta_is_pd, gram_matrix, jeffrey_div_sq,
                          logeuc_dist, pairwise, sq_dist, stein_div_sq, stein_kernel)
from .descriptors import gaussian_embed, joint_covariance, region_covariance
from .dr import AffinityGraph, DrProblem, affinity_graph, fit, fit_eig, transform
from .evaluation import (ClusterResult, clustering_accuracy, kernel_kmeans, kmeans, nmi,
                         nn_classify)
from .grassmann import CgConfig, FitReport, Termination, cg_minimize
from .means import MeanConfig, frechet_mean, jeffrey_mean, karcher_mean, stein_mean
from .synth import SynthParams, make_synthetic

__all__ = [
    "AffinityGraph", "CgConfig", "ClusterResult", "DrProblem", "FitReport", "MeanConfig",
    "MetricKind", "SynthParams", "Termination", "affinity_graph", "airm_dist", "beta_is_pd",
    "cg_minimize", "clustering_accuracy", "fit", "fit_eig", "frechet_mean", "gaussian_embed",
    "gram_matrix", "is_spd", "jeffrey_div_sq", "jeffrey_mean", "joint_covariance",
    "karcher_mean", "kernel_kmeans", "kmeans", "logeuc_dist", "make_synthetic", "mat_exp",
    "mat_log", "mat_pow", "mat_sqrt", "nmi", "nn_classify", "pairwise", "random_spd",
    "region_covariance", "sq_dist", "stein_div_sq", "stein_kernel", "stein_mean",
    "symmetrize", "transform", "validate_spd",
]
