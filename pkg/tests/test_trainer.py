import json

import numpy as np
import pytest

from slotfree.autodiff import Tensor
from slotfree.corpus import OntologySpec, filter_split, generate_synthetic_corpus
from slotfree.features import WordTable, corpus_vocabulary
from slotfree.model import TrackerConfig, TrackerModel
from slotfree.trainer import (
    Adam,
    TrainConfig,
    clip_gradients,
    load_checkpoint,
    save_checkpoint,
    train,
)

from conftest import build_tiny_model


def _param(values):
    return Tensor(np.array(values, dtype=float), requires_grad=True)


class TestAdam:
    def test_matches_reference_update(self):
        """Re-derive two update steps with standalone arithmetic."""
        p = _param([1.0, -2.0])
        opt = Adam({"w": p}, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)

        theta = np.array([1.0, -2.0])
        m = np.zeros(2)
        v = np.zeros(2)
        for t, grad in enumerate([np.array([0.5, -1.0]),
                                  np.array([-0.25, 2.0])], start=1):
            p.grad = grad.copy()
            opt.step()
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad * grad
            m_hat = m / (1 - 0.9 ** t)
            v_hat = v / (1 - 0.999 ** t)
            theta = theta - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
            np.testing.assert_allclose(p.data, theta, rtol=0, atol=1e-15)

    def test_first_step_is_scale_invariant_up_to_eps(self):
        # after bias correction the first step is -lr * g / (|g| + eps)
        for scale in (1e-6, 1.0, 1e6):
            p = _param([0.0])
            opt = Adam({"w": p}, lr=0.01)
            p.grad = np.array([scale])
            opt.step()
            expected = -0.01 * scale / (scale + 1e-8)
            assert p.data[0] == pytest.approx(expected, rel=1e-12)

    def test_missing_gradient_treated_as_zero(self):
        p, q = _param([1.0]), _param([2.0])
        opt = Adam({"p": p, "q": q}, lr=0.1)
        p.grad = np.array([1.0])
        opt.step()
        assert q.data[0] == 2.0
        assert p.data[0] != 1.0

    def test_nan_gradient_aborts_naming_parameter(self):
        p = _param([1.0])
        opt = Adam({"utt.fwd.W": p}, lr=0.1)
        p.grad = np.array([np.nan])
        with pytest.raises(RuntimeError, match="utt.fwd.W"):
            opt.step()

    def test_inf_gradient_aborts(self):
        p = _param([1.0])
        opt = Adam({"w": p}, lr=0.1)
        p.grad = np.array([np.inf])
        with pytest.raises(RuntimeError, match="non-finite"):
            opt.step()


class TestClipGradients:
    def test_large_norm_scaled_to_max(self):
        p = _param([3.0, 4.0])
        p.grad = np.array([30.0, 40.0])
        norm = clip_gradients({"w": p}, max_norm=10.0)
        assert norm == pytest.approx(50.0)
        assert np.linalg.norm(p.grad) == pytest.approx(10.0)
        np.testing.assert_allclose(p.grad, [6.0, 8.0])

    def test_small_norm_untouched(self):
        p = _param([1.0])
        p.grad = np.array([2.0])
        norm = clip_gradients({"w": p}, max_norm=10.0)
        assert norm == pytest.approx(2.0)
        assert p.grad[0] == 2.0

    def test_global_norm_spans_parameters(self):
        a, b = _param([0.0]), _param([0.0])
        a.grad = np.array([6.0])
        b.grad = np.array([8.0])
        norm = clip_gradients({"a": a, "b": b}, max_norm=5.0)
        assert norm == pytest.approx(10.0)
        assert a.grad[0] == pytest.approx(3.0)
        assert b.grad[0] == pytest.approx(4.0)

    def test_non_finite_rejected(self):
        p = _param([1.0])
        p.grad = np.array([np.nan])
        with pytest.raises(RuntimeError, match="non-finite"):
            clip_gradients({"w": p}, max_norm=5.0)


def _tiny_training_setup(seed=0):
    dialogues, onto = generate_synthetic_corpus(
        seed, 6, OntologySpec(n_slots=3, n_values=8))
    words = WordTable.random(corpus_vocabulary(dialogues, onto), dim=8, seed=1)
    model = TrackerModel(words, TrackerConfig(
        d_word=8, hidden=4, dropout=0.1, use_char_cnn=False, seed=seed))
    return model, dialogues, onto


class TestTrain:
    def test_history_and_log_records(self, tmp_path):
        model, dialogues, onto = _tiny_training_setup()
        train_split = filter_split(dialogues, "train")
        log_path = tmp_path / "train.jsonl"
        result = train(model, train_split, train_split, onto,
                       TrainConfig(max_epochs=2, batch_size=4),
                       log_path=log_path)
        assert len(result.history) == 2
        lines = log_path.read_text().splitlines()
        assert len(lines) == 2
        for i, line in enumerate(lines, start=1):
            rec = json.loads(line)
            assert set(rec) == {"epoch", "train_loss", "dev_joint_goal",
                                "dev_turn_request", "wallclock"}
            assert rec["epoch"] == i
            assert np.isfinite(rec["train_loss"])
            assert rec["wallclock"] >= 0.0

    def test_loss_decreases_from_cold_start(self):
        model, dialogues, onto = _tiny_training_setup(seed=1)
        train_split = filter_split(dialogues, "train")
        result = train(model, train_split, train_split, onto,
                       TrainConfig(max_epochs=5, batch_size=2, lr=3e-3))
        losses = [r["train_loss"] for r in result.history]
        assert losses[-1] < losses[0]

    def test_stop_condition_halts_immediately(self):
        model, dialogues, onto = _tiny_training_setup()
        train_split = filter_split(dialogues, "train")
        result = train(model, train_split, train_split, onto,
                       TrainConfig(max_epochs=50),
                       stop_condition=lambda rec: True)
        assert len(result.history) == 1

    def test_patience_stops_on_flat_dev(self):
        model, dialogues, onto = _tiny_training_setup()
        train_split = filter_split(dialogues, "train")
        # empty dev split: joint goal is 0.0 every epoch, never improving
        result = train(model, train_split, [], onto,
                       TrainConfig(max_epochs=50, patience=2, batch_size=8))
        assert len(result.history) == 1 + 2

    def test_best_parameters_restored(self):
        model, dialogues, onto = _tiny_training_setup(seed=2)
        train_split = filter_split(dialogues, "train")
        snapshots = {}

        def snapshot(rec):
            snapshots[rec["epoch"]] = {
                k: v.copy() for k, v in model.state_arrays().items()}
            return False

        result = train(model, train_split, train_split, onto,
                       TrainConfig(max_epochs=3, batch_size=2, lr=3e-3),
                       stop_condition=snapshot)
        joints = [r["dev_joint_goal"] for r in result.history]
        first_best = 1 + max(range(len(joints)),
                             key=lambda i: (joints[i], -i))
        assert result.best_epoch == first_best
        for k, v in model.state_arrays().items():
            np.testing.assert_array_equal(v, snapshots[first_best][k])

    def test_empty_training_split_rejected(self, tiny_ontology):
        model = build_tiny_model()
        with pytest.raises(ValueError, match="no turns"):
            train(model, [], [], tiny_ontology, TrainConfig(max_epochs=1))


class TestCheckpoint:
    def test_round_trip_restores_parameters_and_header(self, tmp_path):
        model, dialogues, onto = _tiny_training_setup(seed=3)
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model, dev_score=0.75, epoch=4)
        loaded, header = load_checkpoint(path, model.features.words)
        assert header["dev_score"] == 0.75
        assert header["epoch"] == 4
        assert header["config"] == model.config.to_dict()
        for k, v in model.state_arrays().items():
            np.testing.assert_array_equal(loaded.state_arrays()[k], v)

    def test_equal_seeds_give_byte_identical_files(self, tmp_path):
        a, _, _ = _tiny_training_setup(seed=5)
        b, _, _ = _tiny_training_setup(seed=5)
        pa, pb = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(pa, a, dev_score=0.5, epoch=1)
        save_checkpoint(pb, b, dev_score=0.5, epoch=1)
        assert pa.read_bytes() == pb.read_bytes()

    def test_header_is_one_sorted_json_line(self, tmp_path):
        model = build_tiny_model()
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        with open(path, "rb") as fh:
            assert fh.readline() == b"slotfree-checkpoint-v1\n"
            header = json.loads(fh.readline())
        names = [p["name"] for p in header["params"]]
        assert names == sorted(names)
        assert header["dev_score"] is None

    def test_payload_size_is_exact(self, tmp_path):
        model = build_tiny_model()
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        with open(path, "rb") as fh:
            fh.readline()
            header_line = fh.readline()
            payload = fh.read()
        assert len(payload) == 8 * model.parameter_count()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_bytes(b"something else\n{}\n")
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path, build_tiny_model().features.words)

    def test_truncated_payload_rejected(self, tmp_path):
        model = build_tiny_model()
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(ValueError, match="truncated"):
            load_checkpoint(path, model.features.words)

    def test_trailing_bytes_rejected(self, tmp_path):
        model = build_tiny_model()
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(ValueError, match="trailing"):
            load_checkpoint(path, model.features.words)
