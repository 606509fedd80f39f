import pytest

from slotfree.corpus import Ontology, SlotValue, Token, Turn
from slotfree.features import WordTable
from slotfree.model import TrackerConfig, TrackerModel

TINY_VOCAB = [
    "i", "want", "thai", "korean", "food", "north", "south", "area",
    "what", "is", "the", "phone", "inform", "request", "hello", "there",
    "cheap", "please",
]


def make_tokens(*words):
    return [Token(w, w, "NN", "none") for w in words]


def make_turn(words, goals=(), requests=(), actions=(), index=0):
    return Turn(
        utterance=make_tokens(*words),
        system_actions=list(actions),
        gold_turn_goals=[SlotValue(s, v) for s, v in goals],
        gold_turn_requests=[SlotValue("request", v) for v in requests],
        asr_hypotheses=None,
        index=index,
    )


@pytest.fixture
def tiny_ontology():
    return Ontology(
        ("food", "area", "request"),
        {"food": ("thai", "korean"), "area": ("north", "south"),
         "request": ("phone", "food", "area")},
    )


@pytest.fixture
def tiny_words():
    return WordTable.random(TINY_VOCAB, dim=8, seed=1)


def build_tiny_model(seed=0, **overrides):
    defaults = dict(d_word=8, hidden=4, dropout=0.1, use_char_cnn=False)
    defaults.update(overrides)
    cfg = TrackerConfig(seed=seed, **defaults)
    return TrackerModel(WordTable.random(TINY_VOCAB, dim=cfg.d_word, seed=1), cfg)


@pytest.fixture
def tiny_model():
    return build_tiny_model()
