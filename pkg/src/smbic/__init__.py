"""Subsampling-based modified BIC for the number of communities in (degree-corrected) block models."""

from .bench import BenchRow, ExperimentSpec, RhoRule, load_spec, metrics, run_experiment, scaling_probe
from .criterion import (
    FitResult,
    PairCounts,
    WeightedPairCounts,
    count_statistics,
    estimate_B_dcsbm,
    estimate_B_sbm,
    fit_dcsbm,
    fit_sbm,
    loglik_bernoulli,
    loglik_poisson,
    penalty,
    smbic_score,
    weighted_pair_counts,
)
from .graph import DegreeSummary, GraphFormatError, SparseGraph, degree_stats, largest_component, load_edge_list, write_edge_list
from .selection import SelectionConfig, SelectionReport, select_k, select_k_from_subsample
from .spectral import (
    DegreeEstimates,
    Embedding,
    KMeansConfig,
    Labeling,
    SpectralConfig,
    SvdConfig,
    assign_by_majority_link,
    kmeans,
    spectral_cluster_dcsbm,
    spectral_cluster_sbm,
    truncated_svd,
)
from .subsampling import (
    NodeSet,
    SubAdjacency,
    extract_subadjacency,
    independent_pair_count,
    recommended_subsample_size,
    sample_nodes,
)
from .synth import (
    DcsbmParams,
    GeneratorError,
    GroundTruth,
    OutlierParams,
    SbmParams,
    sample_dcsbm,
    sample_gsbm_with_outliers,
    sample_sbm,
)

__version__ = "0.1.0"
