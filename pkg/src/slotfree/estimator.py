"""Scikit-learn style front door for the tracker.

`SlotFreeTracker` wraps corpus featurization, training, and decoding behind
the familiar fit / predict / predict_proba / score surface, so the model
drops into sklearn tooling (`clone`, grid search over hyperparameters,
pipelines that pass dialogue lists through). X is a list of dialogues; the
supervision rides inside the dialogues, and the candidate ontology is passed
to `fit` alongside them.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Dialogue, Ontology
from .evaluator import decode_predictions, evaluate_model
from .features import WordTable, corpus_vocabulary
from .model import TrackerConfig, TrackerModel
from .scorer import score_turn
from .trainer import TrainConfig, train


def _validate_dialogues(X, name="X"):
    if not isinstance(X, (list, tuple)) or not X:
        raise ValueError(f"{name}: expected a non-empty list of dialogues")
    for d in X:
        if not isinstance(d, Dialogue):
            raise TypeError(
                f"{name}: expected Dialogue elements, got {type(d).__name__}")
    return list(X)


class SlotFreeTracker(BaseEstimator):
    """Dialogue state tracker whose size does not depend on the ontology.

    Parameters mirror the model and training knobs. `word_vectors` accepts a
    WordTable; when omitted, a deterministic random table over the training
    vocabulary is built (useful for synthetic corpora and tests — real runs
    should pass pretrained vectors).
    """

    def __init__(self, d_word=300, hidden=125, dropout=0.1,
                 use_char_cnn=True, use_utt_features=True,
                 use_var_dropout=True, lr=1e-3, batch_size=1, max_epochs=100,
                 patience=10, grad_clip=10.0, mode="transcript",
                 threshold=0.5, seed=0, word_vectors=None):
        self.d_word = d_word
        self.hidden = hidden
        self.dropout = dropout
        self.use_char_cnn = use_char_cnn
        self.use_utt_features = use_utt_features
        self.use_var_dropout = use_var_dropout
        self.lr = lr
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.grad_clip = grad_clip
        self.mode = mode
        self.threshold = threshold
        self.seed = seed
        self.word_vectors = word_vectors

    # -- configuration plumbing ------------------------------------------

    def _model_config(self) -> TrackerConfig:
        return TrackerConfig(
            d_word=self.d_word, hidden=self.hidden, dropout=self.dropout,
            use_char_cnn=self.use_char_cnn,
            use_utt_features=self.use_utt_features,
            use_var_dropout=self.use_var_dropout, seed=self.seed)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, batch_size=self.batch_size,
            max_epochs=self.max_epochs, patience=self.patience,
            grad_clip=self.grad_clip, seed=self.seed, mode=self.mode)

    def _resolve_words(self, dialogues, ontology) -> WordTable:
        if self.word_vectors is not None:
            if self.word_vectors.dim != self.d_word:
                raise ValueError(
                    f"word_vectors dim {self.word_vectors.dim} != d_word "
                    f"{self.d_word}")
            return self.word_vectors
        return WordTable.random(corpus_vocabulary(dialogues, ontology),
                                self.d_word, seed=self.seed)

    # -- sklearn surface ---------------------------------------------------

    def fit(self, X, y=None, *, ontology: Ontology | None = None,
            dev=None, log_path=None, stop_condition=None):
        """Train on a list of dialogues. `ontology` is required; `dev`
        defaults to the training dialogues when absent."""
        dialogues = _validate_dialogues(X)
        if ontology is None:
            raise ValueError("fit: an ontology is required "
                             "(fit(dialogues, ontology=...))")
        dev_dialogues = _validate_dialogues(dev, "dev") if dev else dialogues
        self.words_ = self._resolve_words(dialogues, ontology)
        self.ontology_ = ontology
        self.model_ = TrackerModel(self.words_, self._model_config())
        self.result_ = train(self.model_, dialogues, dev_dialogues, ontology,
                             self._train_config(), log_path=log_path,
                             stop_condition=stop_condition)
        return self

    def predict_proba(self, X):
        """Per-turn pair probabilities: one {pair: float} dict per turn, as a
        list of per-dialogue lists."""
        check_is_fitted(self, "model_")
        dialogues = _validate_dialogues(X)
        cache = {}
        out = []
        for d in dialogues:
            rows = []
            for t in d.turns:
                scored = score_turn(self.model_, t, self.ontology_,
                                    mode=self.mode, ontology_cache=cache)
                rows.append({pair: p.item() for pair, p in scored.items()})
            out.append(rows)
        return out

    def predict(self, X):
        """Per-turn decoded predictions (PredictionSet), one list per
        dialogue."""
        probas = self.predict_proba(X)
        return [[decode_predictions(p, self.ontology_, self.threshold)
                 for p in rows] for rows in probas]

    def score(self, X, y=None) -> float:
        """Joint goal accuracy over the given dialogues."""
        return self.evaluate(X)["joint_goal"]

    def evaluate(self, X, threads: int = 1) -> dict:
        check_is_fitted(self, "model_")
        dialogues = _validate_dialogues(X)
        return evaluate_model(self.model_, dialogues, self.ontology_,
                              mode=self.mode, threshold=self.threshold,
                              threads=threads)

    def parameter_count(self) -> int:
        check_is_fitted(self, "model_")
        return self.model_.parameter_count()
