import numpy as np
import pytest

from slotfree.autodiff import grad_check, total
from slotfree.corpus import SlotValue, Token
from slotfree.features import (
    CHAR_VOCAB,
    NER_INVENTORY,
    POS_INVENTORY,
    CharCNN,
    FeatureExtractor,
    TagEmbedding,
    WordTable,
    corpus_vocabulary,
    exact_match_bits,
    slot_value_text,
)


def _tok(surface, lemma=None, pos="NN", ner="none"):
    return Token(surface, lemma or surface, pos, ner)


@pytest.fixture
def table():
    vocab = ["i", "want", "thai", "food", "inform", "request", "phone",
             "price", "range", "moderate"]
    return WordTable.random(vocab, dim=8, seed=0)


class TestSlotValueText:
    def test_goal_pair(self):
        assert slot_value_text(SlotValue("food", "thai")) == \
            ["inform", "food", "thai"]

    def test_multiword_slot_and_value(self):
        assert slot_value_text(SlotValue("price range", "fairly cheap")) == \
            ["inform", "price", "range", "fairly", "cheap"]

    def test_request_pair_omits_slot(self):
        assert slot_value_text(SlotValue("request", "phone")) == \
            ["request", "phone"]


class TestExactMatch:
    def test_surface_and_lemma_bits(self):
        pair = SlotValue("food", "thai")
        assert exact_match_bits(_tok("thai"), pair) == (1.0, 1.0)
        assert exact_match_bits(_tok("want"), pair) == (0.0, 0.0)
        # surface differs, lemma matches
        assert exact_match_bits(Token("foods", "food", "NNS", "none"), pair) == \
            (0.0, 1.0)

    def test_act_prefix_is_not_matchable(self):
        assert exact_match_bits(_tok("inform"), SlotValue("food", "thai")) == \
            (0.0, 0.0)
        assert exact_match_bits(_tok("request"), SlotValue("request", "phone")) == \
            (0.0, 0.0)

    def test_slot_words_match_for_goals(self):
        assert exact_match_bits(_tok("food"), SlotValue("food", "thai")) == \
            (1.0, 1.0)

    def test_case_insensitive(self):
        assert exact_match_bits(Token("Thai", "Thai", "JJ", "none"),
                                SlotValue("food", "thai")) == (1.0, 1.0)


class TestWordTable:
    def test_oov_is_zero(self, table):
        assert np.all(table.lookup("zzz") == 0.0)
        assert np.any(table.lookup("thai") != 0.0)

    def test_matrix_stacks_rows(self, table):
        m = table.matrix(["i", "zzz", "thai"])
        assert m.shape == (3, 8)
        assert np.all(m[1] == 0.0)

    def test_random_is_deterministic(self):
        a = WordTable.random(["b", "a"], 4, seed=3)
        b = WordTable.random(["a", "b"], 4, seed=3)
        assert np.array_equal(a.lookup("a"), b.lookup("a"))
        assert not np.array_equal(a.lookup("a"), a.lookup("b"))

    def test_load_text_format(self, tmp_path):
        p = tmp_path / "vecs.txt"
        p.write_text("hello 1.0 2.0 3.0\nworld 4.0 5.0 6.0\n")
        t = WordTable.load(p)
        assert t.dim == 3
        assert np.array_equal(t.lookup("world"), [4.0, 5.0, 6.0])

    def test_load_rejects_ragged_rows(self, tmp_path):
        p = tmp_path / "vecs.txt"
        p.write_text("hello 1.0 2.0\nworld 4.0 5.0 6.0\n")
        with pytest.raises(ValueError, match="expected 2 values"):
            WordTable.load(p)


class TestTagEmbedding:
    def test_inventory_sizes(self):
        assert len(POS_INVENTORY) == 46  # 45 tags + UNK
        assert len(NER_INVENTORY) == 20  # 18 types + none + UNK

    def test_unknown_tag_maps_to_unk_row(self):
        rng = np.random.default_rng(0)
        emb = TagEmbedding("pos", POS_INVENTORY, 12, rng)
        unk_idx = emb.indices(["UNK"])[0]
        assert emb.indices(["XYZ"])[0] == unk_idx
        assert emb.indices(["NN"])[0] != unk_idx
        rows = emb.rows(["XYZ", "UNK"])
        assert np.array_equal(rows.data[0], rows.data[1])

    def test_rows_are_trainable(self):
        rng = np.random.default_rng(0)
        emb = TagEmbedding("ner", NER_INVENTORY, 8, rng)
        loss = total(emb.rows(["PERSON", "none"]))
        loss.backward()
        assert emb.table.grad is not None
        assert np.any(emb.table.grad != 0.0)


class TestCharCNN:
    def test_output_shape_fixed_regardless_of_length(self):
        cnn = CharCNN(np.random.default_rng(0), dim=6, filters=5, window=3)
        for word in ["a", "hi", "thai", "immense"]:
            assert cnn.encode_word(word).shape == (5,)
        assert cnn.encode_tokens(["a", "immense"]).shape == (2, 5)

    def test_short_word_padded_not_crashed(self):
        cnn = CharCNN(np.random.default_rng(0), dim=4, filters=3, window=3)
        v = cnn.encode_word("a")
        assert v.shape == (3,) and np.all(np.isfinite(v.data))

    def test_unknown_character_uses_unk_row(self):
        cnn = CharCNN(np.random.default_rng(0), dim=4, filters=3, window=3)
        a = cnn.encode_word("café")
        b = cnn.encode_word("cafü")  # both non-printable -> same row
        assert np.allclose(a.data, b.data)

    def test_parameter_count(self):
        cnn = CharCNN(np.random.default_rng(0))
        n = sum(p.size for p in cnn.parameters().values())
        assert CHAR_VOCAB == 101
        assert n == 101 * 50 + 150 * 50 + 50  # 12,600

    def test_gradients_flow_to_all_parameters(self):
        cnn = CharCNN(np.random.default_rng(1), dim=5, filters=4, window=3)
        total(cnn.encode_tokens(["thai", "ok"])).backward()
        for name, p in cnn.parameters().items():
            assert p.grad is not None, name
            assert np.any(p.grad != 0.0), name

    def test_gradcheck_through_word_encoding(self):
        cnn = CharCNN(np.random.default_rng(2), dim=4, filters=3, window=3)
        direction = np.random.default_rng(3).normal(size=3)

        def f():
            v = cnn.encode_word("abc")
            return total(v * direction)

        for p in cnn.parameters().values():
            err = grad_check(f, p)
            assert err < 1e-6


class TestFeatureExtractor:
    def _tokens(self):
        return [_tok("i", pos="PRP"), _tok("want", pos="VBP"),
                _tok("thai", pos="JJ", ner="NORP"), _tok("food")]

    def test_full_width(self, table):
        fx = FeatureExtractor(table)
        assert fx.d_u == 8 + 50 + 12 + 8 + 2
        m = fx.utterance_features(self._tokens(), SlotValue("food", "thai"))
        assert m.shape == (4, fx.d_u)

    def test_em_columns_sit_last(self, table):
        fx = FeatureExtractor(table)
        m = fx.utterance_features(self._tokens(), SlotValue("food", "thai"))
        np.testing.assert_array_equal(m.data[:, -2:],
                                      [[0, 0], [0, 0], [1, 1], [1, 1]])

    def test_base_reuse_matches_fresh_computation(self, table):
        fx = FeatureExtractor(table)
        toks = self._tokens()
        base = fx.base_features(toks)
        for pair in [SlotValue("food", "thai"), SlotValue("request", "phone")]:
            a = fx.utterance_features(toks, pair, base=base)
            b = fx.utterance_features(toks, pair)
            np.testing.assert_array_equal(a.data, b.data)

    def test_ablation_widths(self, table):
        assert FeatureExtractor(table, use_char_cnn=False).d_u == 8 + 22
        assert FeatureExtractor(table, use_utt_features=False).d_u == 8 + 50
        fx = FeatureExtractor(table, use_char_cnn=False, use_utt_features=False)
        assert fx.d_u == 8
        m = fx.utterance_features(self._tokens(), SlotValue("food", "thai"))
        assert m.shape == (4, 8)

    def test_ablated_extractor_drops_parameters(self, table):
        full = set(FeatureExtractor(table).parameters())
        no_char = set(FeatureExtractor(table, use_char_cnn=False).parameters())
        no_feats = set(FeatureExtractor(table, use_utt_features=False).parameters())
        assert {"char_cnn.table", "char_cnn.conv_w", "char_cnn.conv_b"} <= full
        assert not any(k.startswith("char_cnn") for k in no_char)
        assert not any(k.startswith(("pos", "ner")) for k in no_feats)
        assert "sentinel" in full and "sentinel" in no_char

    def test_pair_matrix_uses_word_vectors_only(self, table):
        fx = FeatureExtractor(table)
        m = fx.pair_matrix(SlotValue("price range", "moderate"))
        assert m.shape == (4, 8)
        np.testing.assert_array_equal(m.data[0], table.lookup("inform"))
        assert not m.requires_grad

    def test_sentinel_is_learned(self, table):
        fx = FeatureExtractor(table)
        s = fx.sentinel_matrix()
        assert s.shape == (1, 8)
        assert s.requires_grad
        assert fx.parameters()["sentinel"] is s

    def test_word_block_is_frozen(self, table):
        fx = FeatureExtractor(table, use_char_cnn=False, use_utt_features=False)
        m = fx.utterance_features(self._tokens(), SlotValue("food", "thai"))
        assert not m.requires_grad

    def test_empty_tokens_rejected(self, table):
        with pytest.raises(ValueError, match="empty"):
            FeatureExtractor(table).base_features([])

    def test_seed_reproducibility(self, table):
        a = FeatureExtractor(table, seed=5)
        b = FeatureExtractor(table, seed=5)
        for k in a.parameters():
            np.testing.assert_array_equal(a.parameters()[k].data,
                                          b.parameters()[k].data)


def test_corpus_vocabulary_covers_pair_text(table):
    from slotfree.corpus import generate_synthetic_corpus, select_utterance
    from slotfree.features import slot_value_text

    dialogues, onto = generate_synthetic_corpus(2, 6)
    vocab = corpus_vocabulary(dialogues, onto)
    assert "inform" in vocab and "request" in vocab
    for pair in onto.pairs():
        for w in slot_value_text(pair):
            assert w in vocab
    for d in dialogues:
        for t in d.turns:
            for tok in t.utterance:
                assert tok.surface in vocab
