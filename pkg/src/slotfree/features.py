"""Input featurization: frozen word vectors, trainable tag embeddings, a
character-window CNN, and the binary exact-match signal that ties an
utterance to the slot-value pair being scored.

Per-token features concatenate to
    [word(300) | char(50) | pos(12) | ner(8) | exact-match(2)]
with the char / tag / match blocks individually removable for ablations.
Slot-value pair text is embedded with word vectors only.
"""

from __future__ import annotations

import string

import numpy as np

from .autodiff import Tensor, concat, conv1d, gather, max_over_time, stack, tanh
from .corpus import GOAL, NO_ENTITY, UNK_TAG, SlotValue

WORD_DIM = 300
CHAR_DIM = 50
CHAR_FILTERS = 50
CHAR_WINDOW = 3
POS_DIM = 12
NER_DIM = 8
EM_DIM = 2

SENTINEL_WORD = "<sentinel>"

# Penn Treebank word-level tags plus punctuation.
PTB_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP",
    "VBZ", "WDT", "WP", "WP$", "WRB",
    "#", "$", ".", ",", ":", "(", ")", "``", "''",
)

# OntoNotes entity types, plus the explicit non-entity tag.
ONTONOTES_TYPES = (
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
    "WORK_OF_ART", "LAW", "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY",
    "QUANTITY", "ORDINAL", "CARDINAL",
)

POS_INVENTORY = PTB_TAGS + (UNK_TAG,)
NER_INVENTORY = ONTONOTES_TYPES + (NO_ENTITY, UNK_TAG)

_CHARSET = string.printable  # 100 characters
_CHAR_INDEX = {c: i for i, c in enumerate(_CHARSET)}
CHAR_VOCAB = len(_CHARSET) + 1  # + unknown-character row
_CHAR_UNK = len(_CHARSET)


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def slot_value_text(pair: SlotValue) -> list:
    """Word sequence describing a pair: a dialogue-act prefix followed by the
    slot and value words (value only, for requests)."""
    if pair.kind == GOAL:
        return ["inform"] + pair.slot.split() + pair.value.split()
    return ["request"] + pair.value.split()


def exact_match_bits(token, pair: SlotValue) -> tuple:
    """(surface, lemma) membership in the pair's content words. The act
    prefix is not matchable: the word "request" in an utterance is content,
    not an act marker."""
    content = set(slot_value_text(pair)[1:])
    return (float(token.surface.lower() in content),
            float(token.lemma.lower() in content))


class WordTable:
    """Frozen pretrained-style word vectors; out-of-vocabulary words map to
    the zero vector. Not trainable."""

    def __init__(self, vectors: dict, dim: int):
        self.dim = dim
        self.vectors = vectors
        for w, v in vectors.items():
            if v.shape != (dim,):
                raise ValueError(f"word vector for {w!r} has shape "
                                 f"{v.shape}, expected ({dim},)")
        self._zero = np.zeros(dim)

    @classmethod
    def load(cls, path, dim: int | None = None) -> "WordTable":
        """Parse the whitespace text format: `word v1 v2 ... vD` per line."""
        vectors = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                word, vals = parts[0], parts[1:]
                if dim is None:
                    dim = len(vals)
                elif len(vals) != dim:
                    raise ValueError(
                        f"{path}:{lineno}: expected {dim} values, got {len(vals)}")
                vectors[word] = np.array([float(x) for x in vals])
        if not vectors:
            raise ValueError(f"{path}: no word vectors parsed")
        return cls(vectors, dim)

    @classmethod
    def random(cls, vocab, dim: int, seed: int = 0) -> "WordTable":
        """Deterministic stand-in table for tests and synthetic corpora."""
        rng = np.random.default_rng(seed)
        return cls({w: rng.uniform(-0.5, 0.5, dim) for w in sorted(set(vocab))},
                   dim)

    def lookup(self, word: str) -> np.ndarray:
        return self.vectors.get(word.lower(), self._zero)

    def matrix(self, words) -> np.ndarray:
        return np.stack([self.lookup(w) for w in words]) if words else \
            np.zeros((0, self.dim))


class TagEmbedding:
    """Trainable lookup over a fixed tag inventory; unseen tags share the
    trailing UNK row."""

    def __init__(self, name: str, inventory, dim: int, rng: np.random.Generator):
        self.name = name
        self.inventory = tuple(inventory)
        self.dim = dim
        self._index = {t: i for i, t in enumerate(self.inventory)}
        self._unk = self._index[UNK_TAG]
        self.table = Tensor(_uniform(rng, (len(self.inventory), dim), dim),
                            requires_grad=True)

    def indices(self, tags) -> np.ndarray:
        return np.array([self._index.get(t, self._unk) for t in tags], dtype=int)

    def rows(self, tags) -> Tensor:
        return gather(self.table, self.indices(tags))

    def parameters(self) -> dict:
        return {f"{self.name}.table": self.table}


class CharCNN:
    """Character-window convolution with max-over-time pooling: each word
    becomes a fixed-size vector regardless of length. Words shorter than the
    window are padded with constant zero rows (padding is not trainable)."""

    def __init__(self, rng: np.random.Generator, dim: int = CHAR_DIM,
                 filters: int = CHAR_FILTERS, window: int = CHAR_WINDOW):
        self.dim = dim
        self.filters = filters
        self.window = window
        self.table = Tensor(_uniform(rng, (CHAR_VOCAB, dim), dim),
                            requires_grad=True)
        self.conv_w = Tensor(_uniform(rng, (window * dim, filters), window * dim),
                             requires_grad=True)
        self.conv_b = Tensor(np.zeros(filters), requires_grad=True)

    def encode_word(self, word: str) -> Tensor:
        idx = [_CHAR_INDEX.get(c, _CHAR_UNK) for c in word]
        rows = gather(self.table, np.array(idx, dtype=int)) if idx else None
        pad = self.window - len(idx)
        if pad > 0:
            zeros = Tensor(np.zeros((pad, self.dim)))
            rows = zeros if rows is None else concat([rows, zeros], axis=0)
        return max_over_time(tanh(conv1d(rows, self.conv_w, self.conv_b,
                                         self.window)))

    def encode_tokens(self, words) -> Tensor:
        return stack([self.encode_word(w) for w in words])

    def parameters(self) -> dict:
        return {"char_cnn.table": self.table,
                "char_cnn.conv_w": self.conv_w,
                "char_cnn.conv_b": self.conv_b}


class FeatureExtractor:
    """Turns tokens and slot-value pairs into input matrices.

    The pair-independent feature columns of a turn (word, char, tag blocks)
    can be computed once via `base_features` and reused across every pair
    scored against that turn; only the two exact-match columns differ per
    pair.
    """

    def __init__(self, words: WordTable, *, use_char_cnn: bool = True,
                 use_utt_features: bool = True, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.words = words
        self.use_char_cnn = use_char_cnn
        self.use_utt_features = use_utt_features
        self.char_cnn = CharCNN(rng) if use_char_cnn else None
        self.pos = (TagEmbedding("pos", POS_INVENTORY, POS_DIM, rng)
                    if use_utt_features else None)
        self.ner = (TagEmbedding("ner", NER_INVENTORY, NER_DIM, rng)
                    if use_utt_features else None)
        self.sentinel = Tensor(_uniform(rng, (1, words.dim), words.dim),
                               requires_grad=True)

    @property
    def d_u(self) -> int:
        d = self.words.dim
        if self.use_char_cnn:
            d += CHAR_FILTERS
        if self.use_utt_features:
            d += POS_DIM + NER_DIM + EM_DIM
        return d

    @property
    def d_pair(self) -> int:
        return self.words.dim

    def base_features(self, tokens) -> Tensor:
        """Pair-independent feature columns for a token sequence."""
        if not tokens:
            raise ValueError("base_features: empty token sequence")
        blocks = [Tensor(self.words.matrix([t.surface for t in tokens]))]
        if self.char_cnn is not None:
            blocks.append(self.char_cnn.encode_tokens([t.surface for t in tokens]))
        if self.use_utt_features:
            blocks.append(self.pos.rows([t.pos for t in tokens]))
            blocks.append(self.ner.rows([t.ner for t in tokens]))
        return concat(blocks, axis=1) if len(blocks) > 1 else blocks[0]

    def em_columns(self, tokens, pair: SlotValue) -> Tensor:
        bits = np.array([exact_match_bits(t, pair) for t in tokens])
        return Tensor(bits)

    def utterance_features(self, tokens, pair: SlotValue,
                           base: Tensor | None = None) -> Tensor:
        """Full per-token feature matrix for scoring `tokens` against `pair`."""
        if base is None:
            base = self.base_features(tokens)
        if not self.use_utt_features:
            return base
        return concat([base, self.em_columns(tokens, pair)], axis=1)

    def pair_matrix(self, pair: SlotValue) -> Tensor:
        """Word-vector rows for a pair's describing text."""
        return Tensor(self.words.matrix(slot_value_text(pair)))

    def sentinel_matrix(self) -> Tensor:
        """Learned single-row input for the reserved no-op system action."""
        return self.sentinel

    def parameters(self) -> dict:
        out = {"sentinel": self.sentinel}
        if self.char_cnn is not None:
            out.update(self.char_cnn.parameters())
        if self.pos is not None:
            out.update(self.pos.parameters())
            out.update(self.ner.parameters())
        return out


def corpus_vocabulary(dialogues, ontology) -> set:
    """Every word the model can see: utterance surfaces and lemmas, ASR
    tokens, and the describing text of all ontology pairs."""
    vocab = {"inform", "request"}
    for d in dialogues:
        for t in d.turns:
            for tok in t.utterance:
                vocab.add(tok.surface)
                vocab.add(tok.lemma)
            for h in t.asr_hypotheses or []:
                vocab.update(h.tokens)
    for pair in ontology.pairs():
        vocab.update(slot_value_text(pair))
    return vocab
