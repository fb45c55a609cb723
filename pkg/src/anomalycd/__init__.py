"""Temporal causal discovery and Bayesian inference on binary anomaly flags."""

__version__ = "0.1.0"

from .bayesnet import (
    BayesNetModel,
    QueryResult,
    UnrolledDataset,
    check_causal_path,
    fit,
    query_cp,
    unroll,
)
from .bench import benchmark
from .config import PipelineConfig, load_config
from .detect import (
    Decomposition,
    DetectorConfig,
    DetectorScores,
    decompose,
    detect,
    detect_with_scores,
    estimate_period,
    moving_sd_detect,
    spectral_detect,
    trend_drift_detect,
)
from .errors import (
    AnomalycdError,
    InputError,
    InvariantViolation,
    NoPeriodError,
    StageError,
)
from .flags import FlagMatrix, load_flags_csv, write_flags_csv
from .frames import (
    OperationMask,
    TimeFrame,
    apply_mask,
    interpolate_gaps,
    load_csv,
    load_mask_csv,
    write_csv,
)
from .graphs import LaggedLink, SkeletonGraph, TemporalDag, load_graph_json, write_graph_json
from .metrics import (
    GraphDiff,
    MetricsReport,
    SummaryGraph,
    aprc,
    evaluate_graphs,
    graph_diff,
    shd,
    shdu,
    to_summary,
)
from .refine import enforce_dag, group_max, onset_precedence_stat, prune, resolve_bidirected
from .skeleton import CITestResult, anac_ci_test, learn_skeleton, select_parents
from .sparse import CompressionReport, PriorLinkSet, compress_sparse, compute_prior_links
from .synthetic import SyntheticSpec, generate_synthetic
