"""Word-level diarization scoring of SOT hypotheses."""

from .labeling import label_tokens
from .model import (
    ContextAttention,
    CrossAttentionBlock,
    Prediction,
    ScorerConfig,
    ScorerModel,
    cd_scores,
    ci_scores,
    cross_attend,
    load_model,
    models_equal,
    positional_encoding,
    predict,
    save_model,
)
from .training import (
    OptimizerConfig,
    TrainExample,
    TrainingDiverged,
    TrainResult,
    example_loss,
    finite_difference_max_rel_error,
    grad_check,
    train,
)
from .types import FeatureSequence, SpeakerProfiles

__all__ = [
    "ContextAttention",
    "CrossAttentionBlock",
    "FeatureSequence",
    "OptimizerConfig",
    "Prediction",
    "ScorerConfig",
    "ScorerModel",
    "SpeakerProfiles",
    "TrainExample",
    "TrainResult",
    "TrainingDiverged",
    "cd_scores",
    "ci_scores",
    "cross_attend",
    "example_loss",
    "finite_difference_max_rel_error",
    "grad_check",
    "label_tokens",
    "load_model",
    "models_equal",
    "positional_encoding",
    "predict",
    "save_model",
    "train",
]
