"""Multi-order stochastic block models for hypergraphs.

Poisson mixed-membership inference where disjoint subsets of interaction
orders carry their own affinity matrices, cross-validated AUC search over
partitions of the order set, plus the synthetic planted-community generator
and evaluation utilities.
"""

from .hypergraph import (
    FoldAssignment,
    Hypergraph,
    HyperedgeParseError,
    OrderHistogram,
    format_hyperedge_list,
    format_node_mapping,
    order_histogram,
    parse_hyperedge_list,
    parse_node_labels,
    split_folds,
    train_view,
)
from .model import (
    EStepStats,
    FitConfig,
    FitResult,
    ModelParams,
    OrderPartition,
    e_step,
    edge_rate,
    fit,
    fit_result_document,
    kappa,
    log_kappa,
    log_likelihood,
    m_step_affinities,
    m_step_memberships,
    score_hyperedge,
    score_hyperedges,
    subset_constant,
)
from .evaluation import (
    AucEstimate,
    MembershipSummary,
    NegativeSamplingError,
    auc_from_scores,
    bonferroni_adjust,
    bootstrap_mean_ci,
    cosine_similarity,
    estimate_auc,
    membership_summary,
    paired_t_test_one_sided,
    sample_auc_pairs,
    sample_negative,
)
from .search import (
    AdmissibilityError,
    CrossValidation,
    PartitionEvaluation,
    SearchConfig,
    SearchResult,
    contiguous_binary_splits,
    enumerate_set_partitions,
    evaluate_partition,
    is_admissible,
    search,
)
from .synthgen import (
    SyntheticConfig,
    edge_probabilities,
    format_ground_truth,
    generate,
    interpolate_affinity,
    parse_ground_truth,
    solve_tau,
)
from .benchmark import BenchmarkConfig, run_benchmark

__version__ = "0.1.0"
