"""Drift-aware adaptive data-quality scoring for windowed sensor streams."""

from .aggregation import PrincipalScoreAggregator, QualityStandardizer, StandardScorer
from .artifacts import ArtifactBundle, HistoryRow, ModelVersion
from .config import Config, EngineConfig, StreamConfig, default_config, load_config
from .dimensions import (
    DIMENSION_NAMES,
    HIGHER_IS_BETTER,
    IntegrityConstraints,
    QualityVector,
    ReferenceSample,
    RobustZScoreDetector,
    score_accuracy,
    score_all,
    score_completeness,
    score_consistency,
    score_skewness,
    score_timeliness,
)
from .drift import (
    DriftVerdict,
    JsdDriftDetector,
    Pdf,
    empirical_p_value,
    estimate_pdf,
    jsd,
    make_grid,
    shannon_entropy,
)
from .errors import (
    ConfigError,
    DevelopmentError,
    DriftqError,
    FitError,
    GridMismatchError,
    MetricError,
    StoreError,
    StreamOrderError,
    WindowScoreError,
)
from .harness import (
    ExperimentReport,
    SweepResult,
    emit_report,
    generate_pump_stream,
    run_bench,
    run_experiment,
    sensitivity_sweep,
)
from .mutation import (
    FAULT_KINDS,
    FaultIntensity,
    FaultRecord,
    MutationPlan,
    apply_mutation_plan,
    mutate_window,
    window_rng,
)
from .orchestrator import ScoredWindow, ScoringPipeline, develop_phase, rescore_history
from .predictor import (
    FEATURE_NAMES,
    GradientBoostedScoreRegressor,
    OracleReport,
    extract_features,
    mae,
    oracle_check,
    r2,
)
from .store import store_load, store_save
from .windowing import DataWindow, Reading, flatten_windows, read_stream, segment_stream

__version__ = "0.1.0"

__all__ = [
    "ArtifactBundle",
    "Config",
    "ConfigError",
    "DataWindow",
    "DevelopmentError",
    "DIMENSION_NAMES",
    "DriftqError",
    "DriftVerdict",
    "EngineConfig",
    "ExperimentReport",
    "FAULT_KINDS",
    "FEATURE_NAMES",
    "FaultIntensity",
    "FaultRecord",
    "FitError",
    "GradientBoostedScoreRegressor",
    "GridMismatchError",
    "HIGHER_IS_BETTER",
    "HistoryRow",
    "IntegrityConstraints",
    "JsdDriftDetector",
    "MetricError",
    "ModelVersion",
    "MutationPlan",
    "OracleReport",
    "Pdf",
    "PrincipalScoreAggregator",
    "QualityStandardizer",
    "QualityVector",
    "Reading",
    "ReferenceSample",
    "RobustZScoreDetector",
    "ScoredWindow",
    "ScoringPipeline",
    "StandardScorer",
    "StoreError",
    "StreamConfig",
    "StreamOrderError",
    "SweepResult",
    "WindowScoreError",
    "apply_mutation_plan",
    "default_config",
    "develop_phase",
    "emit_report",
    "empirical_p_value",
    "estimate_pdf",
    "extract_features",
    "flatten_windows",
    "generate_pump_stream",
    "jsd",
    "load_config",
    "mae",
    "make_grid",
    "mutate_window",
    "oracle_check",
    "r2",
    "read_stream",
    "rescore_history",
    "run_bench",
    "run_experiment",
    "score_accuracy",
    "score_all",
    "score_completeness",
    "score_consistency",
    "score_skewness",
    "score_timeliness",
    "segment_stream",
    "sensitivity_sweep",
    "shannon_entropy",
    "store_load",
    "store_save",
    "window_rng",
    "__version__",
]
