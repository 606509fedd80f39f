"""Dialogue corpus model: ontologies, turns, labels, loaders, and the
synthetic corpus generator used by dataset-free tests.

All structures are immutable (or treated as such) after load, so they can be
shared read-only across evaluation workers. Tokens are lowercased at load;
matching downstream is case-insensitive anyway.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

GOAL = "goal"
REQUEST = "request"
REQUEST_SLOT = "request"
UNK_TAG = "UNK"
NO_ENTITY = "none"

SPLITS = ("train", "dev", "test")


class CorpusError(ValueError):
    """Raised for malformed corpus files or labels outside the ontology."""


@dataclass(frozen=True, order=True)
class SlotValue:
    slot: str
    value: str
    kind: str = ""

    def __post_init__(self):
        expected = REQUEST if self.slot == REQUEST_SLOT else GOAL
        if self.kind == "":
            object.__setattr__(self, "kind", expected)
        elif self.kind != expected:
            raise CorpusError(
                f"slot-value ({self.slot}, {self.value}): kind {self.kind!r} "
                f"inconsistent with slot (expected {expected!r})"
            )


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str
    ner: str


@dataclass(frozen=True)
class AsrHypothesis:
    tokens: tuple
    score: float


@dataclass
class Turn:
    utterance: list  # of Token
    system_actions: list = field(default_factory=list)
    gold_turn_goals: list = field(default_factory=list)
    gold_turn_requests: list = field(default_factory=list)
    asr_hypotheses: list | None = None
    index: int = 0


@dataclass
class Dialogue:
    id: str
    turns: list
    split: str = "train"


@dataclass(frozen=True)
class Ontology:
    slots: tuple
    values: dict

    def __post_init__(self):
        if len(set(self.slots)) != len(self.slots):
            raise CorpusError("ontology: duplicate slot names")
        for slot in self.slots:
            vals = self.values.get(slot, ())
            if len(vals) == 0:
                raise CorpusError(f"ontology: slot {slot!r} has no values")
            if len(set(vals)) != len(vals):
                raise CorpusError(f"ontology: duplicate values under slot {slot!r}")

    def pairs(self) -> list:
        """All slot-value pairs in slot order, then value order."""
        return [SlotValue(s, v) for s in self.slots for v in self.values[s]]

    def contains(self, pair: SlotValue) -> bool:
        return pair.slot in self.values and pair.value in self.values[pair.slot]

    @property
    def n_values(self) -> int:
        return sum(len(v) for v in self.values.values())


# -- core operations --------------------------------------------------------


def accumulate_joint_goals(turn_goals_by_turn) -> list:
    """Fold per-turn goal lists into the running joint goal: one value per
    slot, later assertions replacing earlier ones. Returns one frozenset of
    SlotValue per turn."""
    state: dict = {}
    joint = []
    for goals in turn_goals_by_turn:
        for pair in goals:
            if pair.kind != GOAL:
                raise CorpusError(
                    f"accumulate_joint_goals: got {pair.kind}-kind pair "
                    f"({pair.slot}, {pair.value}); only goals accumulate"
                )
            state[pair.slot] = pair.value
        joint.append(frozenset(SlotValue(s, v) for s, v in state.items()))
    return joint


def select_utterance(turn: Turn, mode: str = "transcript") -> list:
    """Pick the token sequence to track: the annotated transcript, or the
    top ASR hypothesis wrapped with UNK annotations (noisy text)."""
    if mode == "transcript":
        return turn.utterance
    if mode == "asr_top1":
        if not turn.asr_hypotheses:
            raise CorpusError(
                f"select_utterance: turn {turn.index} has no ASR hypotheses"
            )
        top = turn.asr_hypotheses[0]
        return [Token(t, t, UNK_TAG, UNK_TAG) for t in top.tokens]
    raise ValueError(f"select_utterance: unknown mode {mode!r}")


def filter_split(dialogues, split: str) -> list:
    return [d for d in dialogues if d.split == split]


# -- native line-delimited format -------------------------------------------

_TURN_FIELDS = (
    "tokens", "lemmas", "pos", "ner",
    "system_actions", "turn_goals", "turn_requests", "asr",
)


def _ontology_sibling(path: Path) -> Path:
    return path.with_suffix("").with_suffix(".ontology.json") if path.suffix else path


def ontology_to_json(ontology: Ontology) -> dict:
    return {"slots": list(ontology.slots),
            "values": {s: list(ontology.values[s]) for s in ontology.slots}}


def ontology_from_json(obj: dict) -> Ontology:
    if "slots" in obj and "values" in obj:
        return Ontology(tuple(obj["slots"]),
                        {s: tuple(v.lower() for v in obj["values"][s]) for s in obj["slots"]})
    if "informable" in obj:  # public WoZ/DSTC2 layout
        slots = [s.lower() for s in obj["informable"]]
        values = {s.lower(): tuple(v.lower() for v in vs)
                  for s, vs in obj["informable"].items()}
        if "requestable" in obj:
            slots.append(REQUEST_SLOT)
            values[REQUEST_SLOT] = tuple(v.lower() for v in obj["requestable"])
        return Ontology(tuple(slots), values)
    raise CorpusError("ontology file: expected {slots, values} or {informable, requestable}")


def _pair_json(pair: SlotValue) -> dict:
    return {"slot": pair.slot, "value": pair.value}


def dialogue_to_json(d: Dialogue) -> dict:
    turns = []
    for t in d.turns:
        turns.append({
            "tokens": [tok.surface for tok in t.utterance],
            "lemmas": [tok.lemma for tok in t.utterance],
            "pos": [tok.pos for tok in t.utterance],
            "ner": [tok.ner for tok in t.utterance],
            "system_actions": [_pair_json(p) for p in t.system_actions],
            "turn_goals": [_pair_json(p) for p in t.gold_turn_goals],
            "turn_requests": [_pair_json(p) for p in t.gold_turn_requests],
            "asr": [{"tokens": list(h.tokens), "score": h.score}
                    for h in (t.asr_hypotheses or [])],
        })
    return {"id": d.id, "split": d.split, "turns": turns}


def save_native(dialogues, ontology: Ontology, path) -> None:
    """Write one dialogue record per line plus an `.ontology.json` sibling.
    Output bytes are canonical, so save -> load -> save is bit-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for d in dialogues:
            fh.write(json.dumps(dialogue_to_json(d), ensure_ascii=False,
                                separators=(",", ":")))
            fh.write("\n")
    sibling = _ontology_sibling(path)
    sibling.write_text(
        json.dumps(ontology_to_json(ontology), ensure_ascii=False, separators=(",", ":")),
        encoding="utf-8",
    )


def _parse_pair(obj, where: str) -> SlotValue:
    if not isinstance(obj, dict) or set(obj) != {"slot", "value"}:
        raise CorpusError(f"{where}: slot-value entries must be {{slot, value}} objects")
    return SlotValue(str(obj["slot"]).lower(), str(obj["value"]).lower())


def _validate_labels(dialogues, ontology: Ontology) -> None:
    offenders = []
    for d in dialogues:
        for t in d.turns:
            for pair in t.gold_turn_goals + t.gold_turn_requests:
                if not ontology.contains(pair):
                    offenders.append((d.id, t.index, pair.slot, pair.value))
    if offenders:
        listed = ", ".join(f"{d}/turn{t}:({s},{v})" for d, t, s, v in offenders[:20])
        raise CorpusError(
            f"{len(offenders)} gold label(s) outside the ontology: {listed}"
        )


def _check_single_value_per_slot(d_id, index, goals) -> None:
    seen = {}
    for p in goals:
        if p.slot in seen and seen[p.slot] != p.value:
            raise CorpusError(
                f"dialogue {d_id} turn {index}: slot {p.slot!r} asserted with two "
                f"values in one turn ({seen[p.slot]!r} and {p.value!r})"
            )
        seen[p.slot] = p.value


def load_native(path, ontology_path=None):
    """Load the native line-delimited corpus format. The ontology lives in a
    sibling `.ontology.json` unless an explicit path is given."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    opath = Path(ontology_path) if ontology_path else _ontology_sibling(path)
    if not opath.exists():
        raise CorpusError(f"ontology file not found: {opath}")
    ontology = ontology_from_json(json.loads(opath.read_text(encoding="utf-8")))

    dialogues = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({e})") from None
            if set(rec) != {"id", "split", "turns"}:
                raise CorpusError(
                    f"{path}:{lineno}: record fields must be exactly id, split, turns"
                )
            if rec["split"] not in SPLITS:
                raise CorpusError(f"{path}:{lineno}: unknown split {rec['split']!r}")
            turns = []
            for i, traw in enumerate(rec["turns"]):
                if set(traw) != set(_TURN_FIELDS):
                    missing = set(_TURN_FIELDS) ^ set(traw)
                    raise CorpusError(
                        f"{path}:{lineno}: turn {i} field mismatch ({sorted(missing)})"
                    )
                arrays = [traw["tokens"], traw["lemmas"], traw["pos"], traw["ner"]]
                if len({len(a) for a in arrays}) != 1:
                    raise CorpusError(
                        f"{path}:{lineno}: turn {i} token/lemma/pos/ner lengths differ"
                    )
                tokens = [Token(s.lower(), l.lower(), p, n)
                          for s, l, p, n in zip(*arrays)]
                if not tokens:
                    log.warning("%s:%d: dropping empty-utterance turn %d of %s",
                                path, lineno, i, rec["id"])
                    continue
                where = f"{path}:{lineno} turn {i}"
                goals = [_parse_pair(p, where) for p in traw["turn_goals"]]
                _check_single_value_per_slot(rec["id"], i, goals)
                asr = [AsrHypothesis(tuple(s.lower() for s in h["tokens"]),
                                     float(h["score"]))
                       for h in traw["asr"] if h["tokens"]]
                asr.sort(key=lambda h: -h.score)
                turns.append(Turn(
                    utterance=tokens,
                    system_actions=[_parse_pair(p, where) for p in traw["system_actions"]],
                    gold_turn_goals=goals,
                    gold_turn_requests=[_parse_pair(p, where) for p in traw["turn_requests"]],
                    asr_hypotheses=asr or None,
                    index=i,
                ))
            dialogues.append(Dialogue(str(rec["id"]), turns, rec["split"]))

    if not dialogues:
        raise CorpusError(f"{path}: corpus contains no dialogues")
    _validate_labels(dialogues, ontology)
    _report_splits(dialogues)
    return dialogues, ontology


# -- public WoZ / DSTC2 JSON layout ------------------------------------------


def _simple_tokens(text: str) -> list:
    return [Token(w, w, UNK_TAG, UNK_TAG) for w in text.lower().split()]


def _load_sidecar(path: Path) -> dict:
    """Annotation sidecar: JSONL keyed by (dialogue id, turn index)."""
    table = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            key = (str(rec["id"]), int(rec["turn"]))
            arrays = [rec["tokens"], rec["lemmas"], rec["pos"], rec["ner"]]
            if len({len(a) for a in arrays}) != 1:
                raise CorpusError(f"{path}:{lineno}: annotation arrays misaligned")
            table[key] = [Token(s.lower(), l.lower(), p, n)
                          for s, l, p, n in zip(*arrays)]
    return table


def _parse_system_acts(acts, ontology, d_id, index) -> list:
    out = []
    for act in acts:
        if isinstance(act, str):
            act = [act]
        if len(act) == 1:
            slot = str(act[0]).lower()
            pair = SlotValue(REQUEST_SLOT, slot)
            if ontology.contains(pair):
                out.append(pair)
            else:
                log.warning("dialogue %s turn %d: system request act %r not in "
                            "ontology, skipped", d_id, index, slot)
        else:
            pair = SlotValue(str(act[0]).lower(), str(act[1]).lower())
            if ontology.contains(pair):
                out.append(pair)
            else:
                log.warning("dialogue %s turn %d: system act (%s, %s) not in "
                            "ontology, skipped", d_id, index, pair.slot, pair.value)
    return out


def load_public(root, ontology_path=None):
    """Load the publicly distributed WoZ/DSTC2 JSON dialogue files from a
    directory; split membership comes from the file names. An optional
    `annotations.jsonl` sidecar supplies token/lemma/POS/NER arrays."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"expected a dataset directory, got {root}")
    files = sorted(p for p in root.glob("*.json") if "ontology" not in p.name.lower())
    if ontology_path is None:
        candidates = sorted(root.glob("*ontology*.json"))
        if not candidates:
            raise CorpusError(f"no ontology*.json found under {root}")
        ontology_path = candidates[0]
    ontology = ontology_from_json(json.loads(Path(ontology_path).read_text(encoding="utf-8")))

    sidecars = sorted(root.glob("annotations*.jsonl"))
    annotations = {}
    for sc in sidecars:
        annotations.update(_load_sidecar(sc))
    if not sidecars:
        log.warning("%s: no annotation sidecar found; falling back to whitespace "
                    "tokens with UNK tags", root)

    def split_of(name: str) -> str | None:
        name = name.lower()
        if "train" in name:
            return "train"
        if "dev" in name or "valid" in name:
            return "dev"
        if "test" in name:
            return "test"
        return None

    dialogues = []
    for f in files:
        split = split_of(f.name)
        if split is None:
            log.warning("%s: cannot infer split from file name, skipped", f)
            continue
        try:
            payload = json.loads(f.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CorpusError(f"{f}: invalid JSON ({e})") from None
        if not isinstance(payload, list):
            raise CorpusError(f"{f}: expected a list of dialogues")
        for pos, draw in enumerate(payload):
            d_id = str(draw.get("dialogue_idx", pos))
            turns = []
            for i, traw in enumerate(draw.get("dialogue", [])):
                index = int(traw.get("turn_idx", i))
                tokens = annotations.get((d_id, index))
                if tokens is None:
                    tokens = _simple_tokens(traw.get("transcript", ""))
                if not tokens:
                    log.warning("%s dialogue %s: dropping empty turn %d", f.name, d_id, index)
                    continue
                goals, requests = [], []
                for slot, value in traw.get("turn_label", []):
                    pair = SlotValue(str(slot).lower(), str(value).lower())
                    (requests if pair.kind == REQUEST else goals).append(pair)
                _check_single_value_per_slot(d_id, index, goals)
                asr = [AsrHypothesis(tuple(text.lower().split()), float(score))
                       for text, score in traw.get("asr", []) if text.strip()]
                asr.sort(key=lambda h: -h.score)
                turns.append(Turn(
                    utterance=tokens,
                    system_actions=_parse_system_acts(
                        traw.get("system_acts", []), ontology, d_id, index),
                    gold_turn_goals=goals,
                    gold_turn_requests=requests,
                    asr_hypotheses=asr or None,
                    index=index,
                ))
            dialogues.append(Dialogue(d_id, turns, split))

    if not dialogues:
        raise CorpusError(f"{root}: no dialogues loaded")
    _validate_labels(dialogues, ontology)
    _report_splits(dialogues)
    return dialogues, ontology


def load_corpus(path, format: str = "native", ontology_path=None):
    """Load a corpus in one of the supported formats: `native` (line-delimited
    records), or `woz`/`dstc2` (the public JSON layout plus sidecar)."""
    if format == "native":
        return load_native(path, ontology_path)
    if format in ("woz", "dstc2"):
        return load_public(path, ontology_path)
    raise ValueError(f"load_corpus: unknown format {format!r}")


def _report_splits(dialogues) -> None:
    counts = {s: 0 for s in SPLITS}
    for d in dialogues:
        counts[d.split] += 1
    log.info("loaded %d dialogues (train=%d dev=%d test=%d)",
             len(dialogues), counts["train"], counts["dev"], counts["test"])


# -- synthetic corpus --------------------------------------------------------

_SLOT_NAME_POOL = ("food", "area", "price", "rating", "style", "size", "noise")
_REQUESTABLE_POOL = ("phone", "address", "postcode")

_GOAL_TEMPLATES = (
    "i want {v} {s}",
    "find me a {v} {s} place",
    "how about {v} {s}",
    "{v} {s} please",
)
_REQUEST_TEMPLATES = (
    "what is the {v}",
    "can i get the {v}",
)
_FILLER_UTTERANCES = ("thank you goodbye", "hello there")

_POS_LEXICON = {
    "i": "PRP", "want": "VBP", "find": "VB", "me": "PRP", "a": "DT",
    "place": "NN", "how": "WRB", "about": "IN", "please": "UH",
    "what": "WP", "is": "VBZ", "the": "DT", "can": "MD", "get": "VB",
    "thank": "VBP", "you": "PRP", "goodbye": "UH", "hello": "UH",
    "there": "RB",
}


@dataclass(frozen=True)
class OntologySpec:
    """Sizes for a synthetic ontology: slot count (request slot included)
    and total value count across all slots."""
    n_slots: int = 4
    n_values: int = 94


def _coin_word(rng: random.Random, taken: set) -> str:
    consonants = "bdfgklmnprstvz"
    vowels = "aeiou"
    while True:
        n = rng.randint(2, 3)
        word = "".join(rng.choice(consonants) + rng.choice(vowels) for _ in range(n))
        if word not in taken:
            taken.add(word)
            return word


def _synthetic_ontology(rng: random.Random, spec: OntologySpec) -> Ontology:
    if spec.n_slots < 2:
        raise ValueError("ontology_spec: need at least one goal slot plus request")
    if spec.n_values < 2 * spec.n_slots:
        raise ValueError("ontology_spec: every slot needs at least 2 values")
    n_goal_slots = spec.n_slots - 1
    slot_names = [
        _SLOT_NAME_POOL[i] if i < len(_SLOT_NAME_POOL) else f"slot{i}"
        for i in range(n_goal_slots)
    ]
    taken = set(slot_names) | set(_REQUESTABLE_POOL)

    # Requestables cover the goal slots plus standalone categories; the rest
    # of the value budget spreads evenly over goal slots.
    request_values = list(slot_names) + [
        _REQUESTABLE_POOL[i] if i < len(_REQUESTABLE_POOL)
        else _coin_word(rng, taken)
        for i in range(max(2 - len(slot_names), 2))
    ]
    remaining = spec.n_values - len(request_values)
    if remaining < 2 * n_goal_slots:
        raise ValueError("ontology_spec: too few values for the slot count")
    per_slot = [remaining // n_goal_slots] * n_goal_slots
    for i in range(remaining % n_goal_slots):
        per_slot[i] += 1
    values = {
        name: tuple(_coin_word(rng, taken) for _ in range(k))
        for name, k in zip(slot_names, per_slot)
    }
    values[REQUEST_SLOT] = tuple(request_values)
    return Ontology(tuple(slot_names) + (REQUEST_SLOT,), values)


def _annotate(text: str) -> list:
    tokens = []
    for word in text.split():
        lemma = word
        pos = _POS_LEXICON.get(word, "NN")
        tokens.append(Token(word, lemma, pos, NO_ENTITY))
    return tokens


def generate_synthetic_corpus(seed: int, n_dialogues: int,
                              ontology_spec: OntologySpec | None = None):
    """Deterministic template-generated corpus whose gold labels appear
    verbatim in their utterances, so a string-matching model can reach 100%.
    Emits train/dev/test splits."""
    if n_dialogues < 1:
        raise ValueError("n_dialogues must be >= 1")
    spec = ontology_spec or OntologySpec()
    rng = random.Random(seed)
    ontology = _synthetic_ontology(rng, spec)
    goal_slots = [s for s in ontology.slots if s != REQUEST_SLOT]

    dialogues = []
    for idx in range(n_dialogues):
        if n_dialogues >= 3:
            split = ("test" if idx % 7 == 6 else "dev" if idx % 7 == 5 else "train")
        else:
            split = "train"
        turns = []
        pending_action = None
        for t in range(rng.randint(2, 5)):
            actions = [pending_action] if pending_action else []
            pending_action = None
            goals, requests, parts = [], [], []
            roll = rng.random()
            if roll < 0.75:
                for slot in rng.sample(goal_slots, k=rng.randint(1, min(2, len(goal_slots)))):
                    value = rng.choice(ontology.values[slot])
                    goals.append(SlotValue(slot, value))
                    parts.append(rng.choice(_GOAL_TEMPLATES).format(v=value, s=slot))
            if rng.random() < 0.4:
                value = rng.choice(ontology.values[REQUEST_SLOT])
                requests.append(SlotValue(REQUEST_SLOT, value))
                parts.append(rng.choice(_REQUEST_TEMPLATES).format(v=value))
            if not parts:
                parts.append(rng.choice(_FILLER_UTTERANCES))
            if rng.random() < 0.5:
                pending_action = SlotValue(REQUEST_SLOT,
                                           rng.choice(ontology.values[REQUEST_SLOT]))
            turns.append(Turn(
                utterance=_annotate(" ".join(parts)),
                system_actions=actions,
                gold_turn_goals=goals,
                gold_turn_requests=requests,
                asr_hypotheses=None,
                index=t,
            ))
        dialogues.append(Dialogue(f"syn-{idx:04d}", turns, split))
    return dialogues, ontology
