"""metacf: recommend learning algorithms and hyperparameters by collaborative
filtering over a dataset-by-configuration accuracy matrix."""

__version__ = "0.1.0"

from .engines import (
    CompletedMatrix,
    EngineSetting,
    FitReport,
    complete,
    complete_baseline,
    complete_fkm,
    complete_mf,
    complete_nlpca,
    complete_ubp,
    default_engine_grid,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    EvaluationError,
    MatrixFormatError,
    MetacfError,
)
from .experiments import (
    Dataset,
    LearnerSpec,
    build_matrix,
    default_learner_specs,
    evaluate_config,
    gen_synthetic,
    load_dataset,
    sample_configs,
)
from .harness import (
    EvaluationReport,
    SweepPlan,
    SweepResult,
    aggregate,
    oracle_table,
    render_report,
    run_sweep,
)
from .matrix import (
    Configuration,
    MaskPlan,
    PerformanceMatrix,
    apply_mask,
    column_stats,
    load_matrix,
    load_registry,
    save_matrix,
    save_registry,
)
from .metafeatures import MetaFeatureVector, content_recommend, meta_features
from .recommend import Recommendation, oracle_best, score_best_of_topk, top_k

__all__ = [
    "__version__",
    "CompletedMatrix",
    "Configuration",
    "ConfigurationError",
    "Dataset",
    "DivergenceError",
    "EngineSetting",
    "EvaluationError",
    "EvaluationReport",
    "FitReport",
    "LearnerSpec",
    "MaskPlan",
    "MatrixFormatError",
    "MetaFeatureVector",
    "MetacfError",
    "PerformanceMatrix",
    "Recommendation",
    "SweepPlan",
    "SweepResult",
    "aggregate",
    "apply_mask",
    "build_matrix",
    "column_stats",
    "complete",
    "complete_baseline",
    "complete_fkm",
    "complete_mf",
    "complete_nlpca",
    "complete_ubp",
    "content_recommend",
    "default_engine_grid",
    "default_learner_specs",
    "evaluate_config",
    "gen_synthetic",
    "load_dataset",
    "load_matrix",
    "load_registry",
    "meta_features",
    "oracle_best",
    "oracle_table",
    "render_report",
    "run_sweep",
    "sample_configs",
    "save_matrix",
    "save_registry",
    "score_best_of_topk",
    "top_k",
]
