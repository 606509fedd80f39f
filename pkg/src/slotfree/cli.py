"""Command-line interface.

Subcommands cover the working loop: `synth` fabricates a corpus, `train`
fits and checkpoints, `evaluate` reports exact-match metrics, `predict`
emits per-turn decoded states, `ablate` sizes the model variants, and
`inspect` reads a checkpoint header.

Exit codes: 0 success, 1 data/runtime failure, 2 usage error. A JSON config
file (`{"model": {...}, "train": {...}}`) seeds the configuration; explicit
flags override it. Relative `--data` paths resolve under $SLOTFREE_DATA_DIR
when that is set.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .corpus import (
    CorpusError,
    OntologySpec,
    accumulate_joint_goals,
    filter_split,
    generate_synthetic_corpus,
    load_corpus,
    save_native,
)
from .evaluator import decode_predictions, evaluate_model
from .features import WordTable, corpus_vocabulary
from .model import TrackerConfig, TrackerModel
from .scorer import score_turn
from .trainer import TrainConfig, load_checkpoint, save_checkpoint, train

log = logging.getLogger(__name__)

DATA_DIR_ENV = "SLOTFREE_DATA_DIR"


def _resolve_data(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(DATA_DIR_ENV)
    if not p.is_absolute() and base:
        return Path(base) / p
    return p


def _read_config_file(path) -> dict:
    if path is None:
        return {}
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = set(obj) - {"model", "train"}
    if unknown:
        raise ValueError(f"config file: unknown sections {sorted(unknown)}")
    return obj


def _model_config(args, file_cfg: dict) -> TrackerConfig:
    section = dict(file_cfg.get("model", {}))
    if args.seed is not None:
        section["seed"] = args.seed
    return TrackerConfig.from_dict(section)


def _train_config(args, file_cfg: dict) -> TrainConfig:
    section = dict(file_cfg.get("train", {}))
    known = set(TrainConfig.__dataclass_fields__)
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"config file: unknown train keys {sorted(unknown)}")
    if args.seed is not None:
        section["seed"] = args.seed
    if getattr(args, "mode", None):
        section["mode"] = args.mode
    return TrainConfig(**section)


def _load_words(args, dialogues, ontology, seed: int, d_word: int) -> WordTable:
    if getattr(args, "word_vectors", None):
        return WordTable.load(args.word_vectors)
    log.info("no --word-vectors given: using a deterministic random table "
             "over the corpus vocabulary (seed %d)", seed)
    return WordTable.random(corpus_vocabulary(dialogues, ontology),
                            d_word, seed=seed)


def _emit(payload: dict, out=None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


# -- subcommands -------------------------------------------------------------


def cmd_train(args) -> int:
    file_cfg = _read_config_file(args.config)
    model_cfg = _model_config(args, file_cfg)
    train_cfg = _train_config(args, file_cfg)

    dialogues, ontology = load_corpus(_resolve_data(args.data), args.format)
    train_split = filter_split(dialogues, "train")
    dev_split = filter_split(dialogues, "dev")
    if not dev_split:
        log.warning("no dev split found; selecting on the training split")
        dev_split = train_split

    words = _load_words(args, dialogues, ontology, model_cfg.seed,
                        model_cfg.d_word)
    if words.dim != model_cfg.d_word:
        raise ValueError(f"word vectors are {words.dim}-dimensional but the "
                         f"model config asks for d_word={model_cfg.d_word}")
    model = TrackerModel(words, model_cfg)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = train(model, train_split, dev_split, ontology, train_cfg,
                   log_path=out_dir / "train.jsonl")
    ckpt = out_dir / "model.ckpt"
    save_checkpoint(ckpt, model, dev_score=result.best_dev_joint_goal,
                    epoch=result.best_epoch)
    _emit({
        "checkpoint": str(ckpt),
        "epochs_run": len(result.history),
        "best_epoch": result.best_epoch,
        "best_dev_joint_goal": result.best_dev_joint_goal,
        "parameters": model.parameter_count(),
    })
    return 0


def _load_model_for(args, dialogues, ontology):
    with open(args.checkpoint, "rb") as fh:
        if fh.readline().rstrip(b"\n") != b"slotfree-checkpoint-v1":
            raise ValueError(f"{args.checkpoint}: not a checkpoint file")
        header = json.loads(fh.readline())
    cfg = TrackerConfig.from_dict(header["config"])
    words = _load_words(args, dialogues, ontology, cfg.seed, cfg.d_word)
    model, header = load_checkpoint(args.checkpoint, words)
    return model


def cmd_evaluate(args) -> int:
    dialogues, ontology = load_corpus(_resolve_data(args.data), args.format)
    split = filter_split(dialogues, args.split)
    if not split:
        raise ValueError(f"no dialogues in split {args.split!r}")
    model = _load_model_for(args, dialogues, ontology)
    metrics = evaluate_model(model, split, ontology, mode=args.mode,
                             threshold=args.threshold, threads=args.threads)
    _emit({"split": args.split, "mode": args.mode,
           "threshold": args.threshold, **metrics}, args.out)
    return 0


def cmd_predict(args) -> int:
    dialogues, ontology = load_corpus(_resolve_data(args.data), args.format)
    split = filter_split(dialogues, args.split)
    if not split:
        raise ValueError(f"no dialogues in split {args.split!r}")
    model = _load_model_for(args, dialogues, ontology)

    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        cache = {}
        for d in split:
            decoded = []
            for t in d.turns:
                probs = {p: v.item() for p, v in
                         score_turn(model, t, ontology, mode=args.mode,
                                    ontology_cache=cache).items()}
                decoded.append(decode_predictions(probs, ontology,
                                                  args.threshold))
            joints = accumulate_joint_goals(
                [sorted(p.goals, key=lambda s: s.slot) for p in decoded])
            for t, pred, joint in zip(d.turns, decoded, joints):
                sink.write(json.dumps({
                    "dialogue": d.id,
                    "turn": t.index,
                    "goals": sorted([p.slot, p.value] for p in pred.goals),
                    "requests": sorted(p.value for p in pred.requests),
                    "joint_goals": sorted([p.slot, p.value] for p in joint),
                }, sort_keys=True) + "\n")
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_ablate(args) -> int:
    file_cfg = _read_config_file(args.config)
    base = _model_config(args, file_cfg)
    words = WordTable.random(["stub"], base.d_word, seed=0)
    variants = {
        "full": {},
        "no_char_cnn": {"use_char_cnn": False},
        "no_utt_features": {"use_utt_features": False},
        "no_var_dropout": {"use_var_dropout": False},
    }
    rows = []
    full_count = None
    for name, changes in variants.items():
        cfg = TrackerConfig.from_dict({**base.to_dict(), **changes})
        model = TrackerModel(words, cfg)
        count = model.parameter_count()
        if name == "full":
            full_count = count
        rows.append({
            "variant": name,
            "d_u": model.features.d_u,
            "parameters": count,
            "delta_vs_full": count - full_count,
        })
    _emit({"variants": rows}, args.out)
    return 0


def cmd_inspect(args) -> int:
    with open(args.checkpoint, "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if magic != b"slotfree-checkpoint-v1":
            raise ValueError(f"{args.checkpoint}: not a checkpoint file")
        header = json.loads(fh.readline())
    components = {}
    total = 0
    for spec in header["params"]:
        size = int(np.prod(spec["shape"])) if spec["shape"] else 1
        total += size
        group = spec["name"].split(".", 1)[0]
        components[group] = components.get(group, 0) + size
    _emit({
        "config": header["config"],
        "epoch": header["epoch"],
        "dev_score": header["dev_score"],
        "total_parameters": total,
        "parameters_by_component": components,
    }, args.out)
    return 0


def cmd_synth(args) -> int:
    dialogues, ontology = generate_synthetic_corpus(
        args.seed if args.seed is not None else 0, args.dialogues,
        OntologySpec(n_slots=args.slots, n_values=args.values))
    out = Path(args.out)
    save_native(dialogues, ontology, out)
    splits = {}
    for d in dialogues:
        splits[d.split] = splits.get(d.split, 0) + 1
    _emit({
        "corpus": str(out),
        "dialogues": len(dialogues),
        "slots": len(ontology.slots),
        "values": ontology.n_values,
        "splits": splits,
    })
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slotfree",
        description="Ontology-size-independent dialogue state tracking")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data(p):
        p.add_argument("--data", required=True,
                       help=f"corpus path (relative paths resolve under "
                            f"${DATA_DIR_ENV} if set)")
        p.add_argument("--format", choices=["native", "woz", "dstc2"],
                       default="native")

    def add_model_io(p):
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--word-vectors", default=None,
                       help="text-format word vectors; defaults to the "
                            "deterministic random table")
        p.add_argument("--split", choices=["train", "dev", "test"],
                       default="test")
        p.add_argument("--mode", choices=["transcript", "asr_top1"],
                       default="transcript")
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--out", default=None)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    add_data(p)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=["transcript", "asr_top1"], default=None)
    p.add_argument("--word-vectors", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a split")
    add_data(p)
    add_model_io(p)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="write per-turn decoded states")
    add_data(p)
    add_model_io(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="size the ablation variants")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("inspect", help="print a checkpoint header")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("synth", help="generate a synthetic native corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dialogues", type=int, required=True)
    p.add_argument("--slots", type=int, default=4)
    p.add_argument("--values", type=int, default=94)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (CorpusError, ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
