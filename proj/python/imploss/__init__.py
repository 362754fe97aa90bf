"""Importance-weighted cross-entropy training toolkit."""

from ._core import (
    DEFAULT_FEATURE_DIM,
    Architecture,
    ClassifierParams,
    ClassStats,
    Dataset,
    EpochStats,
    EvalReport,
    Example,
    FileFormat,
    JointWorld,
    KlDirection,
    LossKind,
    NumericError,
    ParseError,
    SourceTag,
    TrainConfig,
    TrainHistory,
    TrainResult,
    ValidationError,
    WeightProvider,
    Which,
    WorldSpec,
    ce_loss,
    dimp_weight,
    evaluate,
    exact_expected_ce,
    exact_weighted_expectation,
    exact_weighted_variance,
    featurize,
    fit_diversity_checker,
    fit_quality_checker,
    focal_weight,
    imp_weight,
    init_params,
    inject_duplicates,
    inject_label_swap,
    load_dataset,
    load_params,
    make_dimp_provider,
    make_imp_provider,
    make_world,
    model_conditional_entropy,
    model_conditional_kl,
    predict_class,
    predict_log_proba,
    predict_proba,
    sample,
    save_dataset,
    save_params,
    score_dataset,
    split,
    train,
    true_conditional_entropy,
    true_conditional_kl,
)

__all__ = [name for name in dir() if not name.startswith("_")]
