"""Slot-independent dialogue state tracking.

A belief tracker whose trainable parameter set is invariant to the size of
the slot/value ontology: utterances, slot-value pairs, and system actions are
all encoded by shared bidirectional-LSTM attention encoders, and each
candidate pair is scored against the utterance by inter-attention, so new
slots or values never add weights.

The high-level entry point is :class:`SlotFreeTracker`, a scikit-learn style
estimator. The underlying pieces (corpus handling, featurization, encoders,
scoring, training, evaluation) are importable for direct use.
"""

from slotfree.autodiff import Tensor, grad_check
from slotfree.corpus import (
    AsrHypothesis,
    CorpusError,
    Dialogue,
    Ontology,
    OntologySpec,
    SlotValue,
    Token,
    Turn,
    accumulate_joint_goals,
    filter_split,
    generate_synthetic_corpus,
    load_corpus,
    save_native,
)
from slotfree.estimator import SlotFreeTracker
from slotfree.evaluator import (
    PredictionSet,
    decode_predictions,
    evaluate_model,
    evaluate_probabilities,
)
from slotfree.features import FeatureExtractor, WordTable, corpus_vocabulary
from slotfree.model import TrackerConfig, TrackerModel
from slotfree.scorer import score_turn, turn_loss
from slotfree.trainer import (
    TrainConfig,
    TrainResult,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AsrHypothesis",
    "CorpusError",
    "Dialogue",
    "FeatureExtractor",
    "Ontology",
    "OntologySpec",
    "PredictionSet",
    "SlotFreeTracker",
    "SlotValue",
    "Tensor",
    "Token",
    "TrackerConfig",
    "TrackerModel",
    "TrainConfig",
    "TrainResult",
    "Turn",
    "WordTable",
    "accumulate_joint_goals",
    "corpus_vocabulary",
    "decode_predictions",
    "evaluate_model",
    "evaluate_probabilities",
    "filter_split",
    "generate_synthetic_corpus",
    "grad_check",
    "load_checkpoint",
    "load_corpus",
    "save_checkpoint",
    "save_native",
    "score_turn",
    "train",
    "turn_loss",
]
