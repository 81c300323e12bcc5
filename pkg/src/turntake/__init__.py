"""Turn-taking event segmentation, labeling and judge-model evaluation."""

from .errors import ConfigurationError, InputValidationError, TurntakeError
from .timeline import (
    EventTimeline,
    Interruption,
    Ipu,
    SilenceRun,
    Turn,
    VoiceActivitySequence,
    build_timeline,
    chunkize,
    segment_ipus,
)
from .labeler import (
    BackchannelSequence,
    DecisionInstance,
    TranscriptToken,
    TurnLabelSequence,
    attribute_ownership,
    derive_labels,
    extract_all_instances,
    extract_instances,
    label_backchannels,
)
from .stats import CorpusStats, corpus_stats, duration_shares, event_rates, speech_rates
from .judge import (
    LikelihoodStream,
    Thresholds,
    agreement_curve,
    confusion_matrix,
    judge_label_a,
    judge_label_b,
    judge_label_c,
    judge_label_e,
    metric_agreement,
    per_class_roc_auc,
    roc_auc,
    sensitivity_me,
    single_label,
    tune_thresholds,
)
from .baseline import BaselineModel, featurize, predict_stream, train
from .synthgen import SynthParams, SynthResult, generate, ideal_stream
from .report import build_report, merge_reports

__version__ = "0.1.0"

__all__ = [
    "BackchannelSequence",
    "BaselineModel",
    "ConfigurationError",
    "CorpusStats",
    "DecisionInstance",
    "EventTimeline",
    "InputValidationError",
    "Interruption",
    "Ipu",
    "LikelihoodStream",
    "SilenceRun",
    "SynthParams",
    "SynthResult",
    "Thresholds",
    "TranscriptToken",
    "Turn",
    "TurnLabelSequence",
    "TurntakeError",
    "VoiceActivitySequence",
    "agreement_curve",
    "attribute_ownership",
    "build_report",
    "build_timeline",
    "chunkize",
    "confusion_matrix",
    "corpus_stats",
    "derive_labels",
    "duration_shares",
    "event_rates",
    "extract_all_instances",
    "extract_instances",
    "featurize",
    "generate",
    "ideal_stream",
    "judge_label_a",
    "judge_label_b",
    "judge_label_c",
    "judge_label_e",
    "label_backchannels",
    "merge_reports",
    "metric_agreement",
    "per_class_roc_auc",
    "predict_stream",
    "roc_auc",
    "segment_ipus",
    "sensitivity_me",
    "single_label",
    "speech_rates",
    "train",
    "tune_thresholds",
]
