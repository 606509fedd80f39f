"""Scoring a turn against slot-value pairs.

For one turn and one candidate pair, three encodings meet:

  * the utterance rows R and their pooled summary s_u,
  * the pooled pair-text encoding s_o,
  * the pooled encodings of the turn's system actions (plus a learned
    sentinel action standing for "nothing relevant").

Two scores are fused. The content score attends over utterance rows with the
pair encoding as the query and projects the attended summary through the
scoring head. The action score attends over system actions with the
utterance summary as the query and measures how the attended action aligns
with the pair. Their mix passes through a sigmoid; one binary cross-entropy
term per ontology pair sums into the turn loss.

Within one turn, everything pair-independent is computed once: base feature
columns, action encodings, and — because most pairs produce the identical
all-zero exact-match pattern — utterance encodings are memoized by their
exact-match columns.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, clip, log, matmul, sigmoid, softmax, stack, total, transpose
from .corpus import SlotValue, select_utterance
from .encoder import input_dropout_mask
from .features import slot_value_text
from .model import TrackerModel

LOG_EPS = 1e-7


def content_score(model: TrackerModel, utt_rows: Tensor, s_o: Tensor) -> Tensor:
    """Attend over utterance rows with the pair encoding as query; project
    the attended summary through the scoring head."""
    attn = softmax(matmul(utt_rows, s_o))
    attended = matmul(transpose(utt_rows), attn)
    return matmul(model.content_w, attended) + model.content_b


def action_score(action_matrix: Tensor, s_u: Tensor, s_o: Tensor) -> Tensor:
    """Attend over stacked action encodings with the utterance summary as
    query; score the attended action against the pair encoding."""
    attn = softmax(matmul(action_matrix, s_u))
    attended = matmul(transpose(action_matrix), attn)
    return matmul(attended, s_o)


def pair_probability(model: TrackerModel, utt_rows: Tensor, s_u: Tensor,
                     action_matrix: Tensor, s_o: Tensor) -> Tensor:
    y1 = content_score(model, utt_rows, s_o)
    y2 = action_score(action_matrix, s_u, s_o)
    return sigmoid(y1 + model.action_mix * y2)


def binary_cross_entropy(p: Tensor, label: float, eps: float = LOG_EPS) -> Tensor:
    """-[y log p + (1-y) log(1-p)] with the probability clamped away from
    {0, 1} so the loss stays finite."""
    if label not in (0.0, 1.0):
        raise ValueError(f"binary label must be 0 or 1, got {label}")
    p = clip(p, eps, 1.0 - eps)
    if label == 1.0:
        return -log(p)
    return -log(1.0 - p)


class TurnContext:
    """Pair-independent work for scoring one turn, computed lazily once.

    In training mode a fresh context must be built per turn (per parameter
    state); rng drives the dropout masks. The same utterance mask covers
    every pair scored within the turn.
    """

    def __init__(self, model: TrackerModel, turn, *, mode: str = "transcript",
                 train: bool = False, rng: np.random.Generator | None = None,
                 ontology_cache: dict | None = None):
        if train and rng is None:
            raise ValueError("TurnContext: training mode needs an rng for dropout")
        self.model = model
        self.turn = turn
        self.train = train
        self.rng = rng
        self.ontology_cache = ontology_cache if ontology_cache is not None else {}
        self.tokens = select_utterance(turn, mode)
        self.rate = model.config.dropout if train else 0.0
        self.keep = 1.0 - self.rate
        self._base = None
        self._utt_mask_drawn = False
        self.utt_mask = None
        self._utt_memo = {}
        self._action_matrix = None

    def _mask_for(self, m: int, d: int) -> np.ndarray | None:
        if self.rate == 0.0:
            return None
        return input_dropout_mask(m, d, self.rate,
                                  self.model.config.use_var_dropout, self.rng)

    def _encode_text(self, matrix: Tensor) -> Tensor:
        mask = self._mask_for(matrix.shape[0], matrix.shape[1])
        return self.model.act_encoder.encode(matrix, mask, self.keep).pooled

    @property
    def action_matrix(self) -> Tensor:
        """[L+1, 2h] stack of pooled system-action encodings; the learned
        sentinel row is always present (and alone when the turn has no
        actions)."""
        if self._action_matrix is None:
            fx = self.model.features
            pooled = [self._encode_text(fx.pair_matrix(a))
                      for a in self.turn.system_actions]
            pooled.append(self._encode_text(fx.sentinel_matrix()))
            self._action_matrix = stack(pooled)
        return self._action_matrix

    def encode_pair(self, pair: SlotValue) -> Tensor:
        """Pooled encoding of the pair's describing text. In evaluation mode
        results may be cached across turns (parameters are fixed and no
        dropout applies)."""
        if not self.train and pair in self.ontology_cache:
            return self.ontology_cache[pair]
        fx = self.model.features
        matrix = fx.pair_matrix(pair)
        mask = self._mask_for(matrix.shape[0], matrix.shape[1])
        pooled = self.model.ont_encoder.encode(matrix, mask, self.keep).pooled
        if not self.train:
            self.ontology_cache[pair] = pooled
        return pooled

    def encode_utterance(self, pair: SlotValue):
        """Utterance encoding for this turn against `pair`. Only the two
        exact-match columns depend on the pair, so encodings are memoized by
        that pattern — pairs mentioning none of the tokens all share one
        encoding (and the turn-wide dropout mask keeps the share exact)."""
        fx = self.model.features
        if self._base is None:
            self._base = fx.base_features(self.tokens)
        if fx.use_utt_features:
            key = fx.em_columns(self.tokens, pair).data.tobytes()
        else:
            key = b""
        cached = self._utt_memo.get(key)
        if cached is not None:
            return cached
        X = fx.utterance_features(self.tokens, pair, base=self._base)
        if not self._utt_mask_drawn:
            self.utt_mask = self._mask_for(X.shape[0], X.shape[1])
            self._utt_mask_drawn = True
        encoded = self.model.utt_encoder.encode(X, self.utt_mask, self.keep)
        self._utt_memo[key] = encoded
        return encoded

    def pair_probability(self, pair: SlotValue) -> Tensor:
        encoded = self.encode_utterance(pair)
        s_o = self.encode_pair(pair)
        return pair_probability(self.model, encoded.rows, encoded.pooled,
                                self.action_matrix, s_o)


def score_turn(model: TrackerModel, turn, ontology, *, mode: str = "transcript",
               train: bool = False, rng: np.random.Generator | None = None,
               pairs=None, ontology_cache: dict | None = None) -> dict:
    """Probability that each candidate pair is asserted by this turn.
    Returns {pair: scalar probability tensor} in candidate order."""
    ctx = TurnContext(model, turn, mode=mode, train=train, rng=rng,
                      ontology_cache=ontology_cache)
    return {pair: ctx.pair_probability(pair)
            for pair in (ontology.pairs() if pairs is None else pairs)}


def turn_loss(model: TrackerModel, turn, ontology, *, mode: str = "transcript",
              train: bool = True, rng: np.random.Generator | None = None) -> Tensor:
    """Summed binary cross-entropy over every ontology pair for one turn."""
    gold = set(turn.gold_turn_goals) | set(turn.gold_turn_requests)
    candidates = ontology.pairs()
    uncovered = gold - set(candidates)
    if uncovered:
        raise ValueError(
            f"turn {turn.index}: gold labels missing from candidate set: "
            f"{sorted((p.slot, p.value) for p in uncovered)}")
    probs = score_turn(model, turn, ontology, mode=mode, train=train, rng=rng,
                       pairs=candidates)
    terms = [binary_cross_entropy(p, 1.0 if pair in gold else 0.0)
             for pair, p in probs.items()]
    return total(stack(terms))
