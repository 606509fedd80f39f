"""Training loop: Adam over per-batch mean turn loss, global-norm gradient
clipping, early stopping on dev joint goal accuracy, and a canonical binary
checkpoint format.

Checkpoints are reproducible artifacts: a magic line, one sorted-key JSON
header line (config, selection score, epoch, parameter names and shapes),
then the parameter payload as little-endian float64 in header order. Equal
seeds and data produce byte-identical files. The frozen word table is not
part of the checkpoint; it is an input, supplied again at load time.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import stack, total
from .evaluator import evaluate_model
from .model import TrackerConfig, TrackerModel
from .scorer import turn_loss

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"slotfree-checkpoint-v1"


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float = 10.0
    batch_size: int = 1
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    mode: str = "transcript"


@dataclass
class TrainResult:
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_dev_joint_goal: float = 0.0


class Adam:
    """Adam with bias correction. Gradients must be finite: a non-finite
    entry aborts the run naming the offending parameter."""

    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self) -> None:
        self.t += 1
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise RuntimeError(f"non-finite gradient in parameter {name!r}")
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1 ** self.t)
            v_hat = self.v[name] / (1 - self.beta2 ** self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_gradients(params: dict, max_norm: float) -> float:
    """Scale all gradients down so their global L2 norm is at most
    `max_norm`. Returns the pre-clip norm."""
    sq = 0.0
    for name, p in params.items():
        if p.grad is None:
            continue
        if not np.all(np.isfinite(p.grad)):
            raise RuntimeError(f"non-finite gradient in parameter {name!r}")
        sq += float(np.sum(p.grad * p.grad))
    norm = float(np.sqrt(sq))
    if norm > max_norm > 0.0:
        scale = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def _batches(items, size):
    for i in range(0, len(items), size):
        yield items[i:i + size]


def train(model: TrackerModel, train_dialogues, dev_dialogues, ontology,
          config: TrainConfig | None = None, *, log_path=None,
          stop_condition=None) -> TrainResult:
    """Fit the model. Batches are groups of turns; the batch loss is the
    mean over turns of the pair-summed turn loss. After every epoch the
    model is scored on dev; the parameters with the best dev joint goal
    accuracy are restored at the end. `stop_condition(record)` may end
    training early based on the epoch record."""
    config = config or TrainConfig()
    turns = [t for d in train_dialogues for t in d.turns]
    if not turns:
        raise ValueError("train: no turns in the training split")

    order_rng, dropout_rng = [np.random.default_rng(s) for s in
                              np.random.SeedSequence(config.seed).spawn(2)]
    optimizer = Adam(model.parameters(), lr=config.lr, beta1=config.beta1,
                     beta2=config.beta2, eps=config.eps)

    result = TrainResult()
    best_state = model.state_arrays()
    best_state = {k: v.copy() for k, v in best_state.items()}
    epochs_since_best = 0
    started = time.monotonic()
    log_fh = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, config.max_epochs + 1):
            order = order_rng.permutation(len(turns))
            epoch_loss = 0.0
            n_batches = 0
            for batch_idx in _batches(order, config.batch_size):
                losses = [turn_loss(model, turns[i], ontology,
                                    mode=config.mode, train=True,
                                    rng=dropout_rng)
                          for i in batch_idx]
                batch_loss = total(stack(losses)) * (1.0 / len(losses))
                batch_loss.backward()
                clip_gradients(optimizer.params, config.grad_clip)
                optimizer.step()
                model.zero_grads()
                epoch_loss += batch_loss.item()
                n_batches += 1

            dev = evaluate_model(model, dev_dialogues, ontology,
                                 mode=config.mode)
            record = {
                "epoch": epoch,
                "train_loss": epoch_loss / n_batches,
                "dev_joint_goal": dev["joint_goal"],
                "dev_turn_request": dev["turn_request"],
                "wallclock": time.monotonic() - started,
            }
            result.history.append(record)
            if log_fh:
                log_fh.write(json.dumps(record, sort_keys=True) + "\n")
                log_fh.flush()
            log.info("epoch %d: loss %.4f, dev joint %.4f, dev request %.4f",
                     epoch, record["train_loss"], dev["joint_goal"],
                     dev["turn_request"])

            if dev["joint_goal"] > result.best_dev_joint_goal or \
                    result.best_epoch == 0:
                result.best_dev_joint_goal = dev["joint_goal"]
                result.best_epoch = epoch
                best_state = {k: v.copy()
                              for k, v in model.state_arrays().items()}
                epochs_since_best = 0
            else:
                epochs_since_best += 1

            if stop_condition is not None and stop_condition(record):
                log.info("stop condition met at epoch %d", epoch)
                break
            if epochs_since_best >= config.patience:
                log.info("no dev improvement for %d epochs, stopping",
                         config.patience)
                break
    finally:
        if log_fh:
            log_fh.close()

    model.load_state_arrays(best_state)
    return result


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(path, model: TrackerModel, *, dev_score: float | None = None,
                    epoch: int | None = None) -> None:
    names = sorted(model.parameters())
    params = model.parameters()
    header = {
        "config": model.config.to_dict(),
        "dev_score": dev_score,
        "epoch": epoch,
        "params": [{"name": n, "shape": list(params[n].data.shape)}
                   for n in names],
    }
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC + b"\n")
        fh.write(json.dumps(header, sort_keys=True,
                            separators=(",", ":")).encode("utf-8") + b"\n")
        for n in names:
            fh.write(np.ascontiguousarray(params[n].data,
                                          dtype="<f8").tobytes())


def load_checkpoint(path, words):
    """Rebuild a model from a checkpoint plus the frozen word table it was
    trained with. Returns (model, header)."""
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic)")
        header = json.loads(fh.readline().decode("utf-8"))
        model = TrackerModel(words, TrackerConfig.from_dict(header["config"]))
        arrays = {}
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(n * 8)
            if len(buf) != n * 8:
                raise ValueError(f"{path}: truncated payload at {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape)
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after payload")
    model.load_state_arrays(arrays)
    return model, header
