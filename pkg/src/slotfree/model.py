"""The tracker model: feature extractor, three sequence encoders, and the
scoring head.

Every trainable parameter lives in exactly one registry entry, so parameter
counting, checkpointing, and the optimizer all see the same flat name ->
tensor map. Nothing here depends on which ontology will be scored: ontology
pairs and system actions are inputs, never architecture.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .autodiff import Tensor
from .encoder import SeqEncoder
from .features import FeatureExtractor, WordTable


@dataclass(frozen=True)
class TrackerConfig:
    d_word: int = 300
    hidden: int = 125
    dropout: float = 0.1
    use_char_cnn: bool = True
    use_utt_features: bool = True
    use_var_dropout: bool = True
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrackerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


class TrackerModel:
    """Scores (utterance turn, slot-value pair) combinations.

    Three separately parameterized encoders: one over utterance feature rows,
    one over system-action text, one over slot-value pair text. The scoring
    head (content weight vector, bias, and the action-score mixing weight)
    starts at zero, so an untrained model emits probability 0.5 everywhere.
    """

    def __init__(self, words: WordTable, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        if words.dim != self.config.d_word:
            raise ValueError(
                f"word table dim {words.dim} != config d_word {self.config.d_word}")
        c = self.config
        seeds = np.random.SeedSequence(c.seed).generate_state(4)
        self.features = FeatureExtractor(
            words, use_char_cnn=c.use_char_cnn,
            use_utt_features=c.use_utt_features, seed=int(seeds[0]))
        self.utt_encoder = SeqEncoder("utt", self.features.d_u, c.hidden,
                                      rng=np.random.default_rng(seeds[1]))
        self.act_encoder = SeqEncoder("act", c.d_word, c.hidden,
                                      rng=np.random.default_rng(seeds[2]))
        self.ont_encoder = SeqEncoder("ont", c.d_word, c.hidden,
                                      rng=np.random.default_rng(seeds[3]))
        d_out = self.utt_encoder.d_out
        self.content_w = Tensor(np.zeros(d_out), requires_grad=True)
        self.content_b = Tensor(0.0, requires_grad=True)
        self.action_mix = Tensor(0.0, requires_grad=True)

    def parameters(self) -> dict:
        out = {}
        out.update(self.features.parameters())
        out.update(self.utt_encoder.parameters())
        out.update(self.act_encoder.parameters())
        out.update(self.ont_encoder.parameters())
        out["score.w"] = self.content_w
        out["score.b"] = self.content_b
        out["score.mix"] = self.action_mix
        return out

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def component_counts(self) -> dict:
        """Trainable sizes grouped by component, for size audits."""
        groups = {"features": 0, "utt_encoder": 0, "act_encoder": 0,
                  "ont_encoder": 0, "scorer": 0}
        for name, p in self.parameters().items():
            if name.startswith("utt."):
                groups["utt_encoder"] += p.size
            elif name.startswith("act."):
                groups["act_encoder"] += p.size
            elif name.startswith("ont."):
                groups["ont_encoder"] += p.size
            elif name.startswith("score."):
                groups["scorer"] += p.size
            else:
                groups["features"] += p.size
        return groups

    def zero_grads(self) -> None:
        for p in self.parameters().values():
            p.grad = None

    def state_arrays(self) -> dict:
        """Name -> raw array view of every trainable parameter."""
        return {name: p.data for name, p in self.parameters().items()}

    def load_state_arrays(self, arrays: dict) -> None:
        params = self.parameters()
        missing = set(params) - set(arrays)
        extra = set(arrays) - set(params)
        if missing or extra:
            raise ValueError(
                f"parameter name mismatch (missing={sorted(missing)}, "
                f"unexpected={sorted(extra)})")
        for name, p in params.items():
            src = np.asarray(arrays[name], dtype=np.float64)
            if src.shape != p.data.shape:
                raise ValueError(
                    f"parameter {name}: shape {src.shape} != {p.data.shape}")
            p.data = src.copy()
