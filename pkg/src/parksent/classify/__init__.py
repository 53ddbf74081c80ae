"""Four-class parking attitude classification."""
from .labels import ATTITUDES, AttitudeLabel, LabeledExample, load_labeled_examples
from .metrics import AgreementReport, MetricsReport, evaluate_labels, krippendorff_alpha
from .models import (
    ClassifierModel,
    ExternalLabels,
    Lexicon,
    ModelKind,
    fit_text_classifier,
    load_lexicon,
    load_sidecar,
    predict,
    train_classifier,
    external_model,
    write_sidecar,
)
from .selection import (
    CLASSIFIER_GRIDS,
    CvReport,
    cross_validate,
    evaluate,
    expand_grid,
    load_grid,
    stratified_folds,
)
from .tfidf import TfidfModel, build_tfidf

__all__ = [
    "ATTITUDES", "AttitudeLabel", "LabeledExample", "load_labeled_examples",
    "AgreementReport", "MetricsReport", "evaluate", "evaluate_labels", "krippendorff_alpha",
    "ClassifierModel", "ExternalLabels", "Lexicon", "ModelKind", "fit_text_classifier",
    "external_model", "load_lexicon", "load_sidecar", "predict", "train_classifier", "write_sidecar",
    "CLASSIFIER_GRIDS", "CvReport", "cross_validate", "expand_grid", "load_grid", "stratified_folds",
    "TfidfModel", "build_tfidf",
]
