"""Cross-validation with plausible negative examples for chatbot text classifiers."""

from .classifier import BaselineClassifier, ExternalClassifier, Prediction, consistency_check
from .dataset import (
    OUT_OF_SCOPE,
    ClassStats,
    Dataset,
    LabeledExample,
    class_stats,
    generate_synthetic,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from .evaluation import (
    ABSTAIN,
    ConfusionMatrix,
    EvaluationReport,
    Outcome,
    carefulness,
    compare,
    evaluate_split,
    pair_ranking,
    run_nexcv,
    validate_metric,
)
from .partition import (
    ClassPartition,
    DataSplit,
    NexCvConfig,
    kfold_splits,
    provision,
    select_cutoff,
    select_proportional,
)
from .report import emit_csv, render_json, render_markdown

__version__ = "0.1.0"
