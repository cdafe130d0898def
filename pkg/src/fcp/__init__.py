"""Composition-propagation explanations for dense feed-forward classifiers.

The package tracks, for every neuron in a trained network, a signed
per-feature composition vector describing how much each input feature
contributes to that neuron's activation on a given instance. Output-layer
composition vectors double as feature attributions, which can be compared
against a relevance-backpropagation baseline and validated by feature
flipping.
"""

from .attribution import (
    DegenerateAttributionError,
    FeatureAttribution,
    FeatureRanking,
    composition_class_vote,
    global_importance,
    global_lrp_importance,
    instance_importance,
    lrp_epsilon,
)
from .fcp import (
    CompositionTrace,
    explain,
    explanation_to_dict,
    init_compositions,
    normalize_rows,
    propagate_raw,
)
from .dataprep import (
    DataError,
    Dataset,
    FeatureMeta,
    MinMaxScaler,
    apply_scaler,
    invert_scaler,
    load_csv,
    load_uci_german,
    minmax_scale,
    protected_groups,
    recode_german_gender,
)
from .evaluation import (
    BiasReport,
    FlipCurve,
    FlipExperimentResult,
    UndefinedCorrelationError,
    bias_report,
    cohen_kappa,
    flip_experiment,
    flip_features,
    pearson,
)
from .linalg import ShapeError
from .network import (
    Activation,
    ActivationTrace,
    Layer,
    ModelFormatError,
    Network,
    forward,
    load_model,
    predict,
    save_model,
)
from .trainer import (
    AdamState,
    Hyperparams,
    TrainReport,
    batch_predict,
    bias_penalized_loss,
    default_hidden_widths,
    init_network,
    softmax_cross_entropy,
    stratified_split,
    train,
)

__all__ = [
    "Activation",
    "ActivationTrace",
    "AdamState",
    "BiasReport",
    "CompositionTrace",
    "DataError",
    "Dataset",
    "DegenerateAttributionError",
    "FeatureAttribution",
    "FeatureMeta",
    "FeatureRanking",
    "FlipCurve",
    "FlipExperimentResult",
    "Hyperparams",
    "Layer",
    "MinMaxScaler",
    "ModelFormatError",
    "Network",
    "ShapeError",
    "TrainReport",
    "UndefinedCorrelationError",
    "apply_scaler",
    "batch_predict",
    "bias_penalized_loss",
    "bias_report",
    "cohen_kappa",
    "composition_class_vote",
    "default_hidden_widths",
    "explain",
    "explanation_to_dict",
    "flip_experiment",
    "flip_features",
    "forward",
    "global_importance",
    "global_lrp_importance",
    "init_compositions",
    "init_network",
    "instance_importance",
    "invert_scaler",
    "load_csv",
    "load_model",
    "load_uci_german",
    "lrp_epsilon",
    "minmax_scale",
    "normalize_rows",
    "pearson",
    "predict",
    "propagate_raw",
    "protected_groups",
    "recode_german_gender",
    "save_model",
    "softmax_cross_entropy",
    "stratified_split",
    "train",
]
